#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbd/cpoint.hpp"

namespace fbd {

inline constexpr int kDefaultResolution = 256;

struct Cell {
  int x = 0, y = 0;
  bool operator==(const Cell&) const = default;
};

struct BBox {
  double x0 = -1, y0 = -1, x1 = 1, y1 = 1;
  bool operator==(const BBox&) const = default;
};

/// A compact subset of C as a bitmap over an axis-aligned box. Cell (x, y) covers
/// [x0 + x/res, x0 + (x+1)/res) x [y0 + y/res, y0 + (y+1)/res).
class PlanarCompact {
 public:
  PlanarCompact() = default;
  PlanarCompact(BBox box, int resolution);

  const BBox& bbox() const { return box_; }
  int resolution() const { return res_; }
  int width() const { return w_; }
  int height() const { return h_; }
  double cell_size() const { return 1.0 / res_; }

  bool in_grid(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < w_ && c.y < h_; }
  bool at(Cell c) const { return in_grid(c) && mask_[index(c)] != 0; }
  void set(Cell c, bool v = true);
  Cell cell_of(cplx z) const;
  cplx center_of(Cell c) const;
  bool contains(cplx z) const { return at(cell_of(z)); }
  long long count() const;
  double area() const { return static_cast<double>(count()) * cell_size() * cell_size(); }
  /// Number of occupied-empty 4-adjacent cell pairs, times the cell size.
  double perimeter() const;

  PlanarCompact& add_disk(cplx center, double radius);
  PlanarCompact& add_annulus(cplx center, double inner, double outer);
  PlanarCompact& add_segment(cplx a, cplx b);  // 4-connected raster
  PlanarCompact& unite(const PlanarCompact& other);

  /// Throws InvalidArgument if empty or touching the outer ring of cells.
  void validate() const;
  bool subset_of(const PlanarCompact& other) const;
  bool operator==(const PlanarCompact& o) const { return box_ == o.box_ && res_ == o.res_ && mask_ == o.mask_; }

  /// 4-connected component labels (0 = empty, 1.. = component id).
  std::vector<int> components() const;
  int component_of(Cell c, const std::vector<int>& labels) const { return in_grid(c) ? labels[index(c)] : 0; }

  const std::vector<std::uint8_t>& mask() const { return mask_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * w_ + c.x; }
  Cell cell_at(std::size_t i) const { return {static_cast<int>(i % w_), static_cast<int>(i / w_)}; }

  /// PGM (P5, 0/255) plus a JSON sidecar {bbox, resolution, width, height}.
  void write_pgm(const std::string& path) const;
  static PlanarCompact read_pgm(const std::string& path);
  nlohmann::json sidecar() const;

 private:
  BBox box_;
  int res_ = kDefaultResolution;
  int w_ = 0, h_ = 0;
  std::vector<std::uint8_t> mask_;
};

/// K union the bounded components of its complement (8-connected flood from the box boundary).
PlanarCompact poly_hull(const PlanarCompact& k);
bool is_poly_convex(const PlanarCompact& k);

struct ConnectResult {
  PlanarCompact k;
  std::vector<Cell> path;      // the routed curve, before thickening
  int excised_runs = 0;        // runs that crossed an escape corridor
  int skipped_runs = 0;        // runs dropped because their ends already shared a component
  bool hulled_input = false;   // K was not polynomially convex and was hulled first
  bool unchanged = false;      // p1, p2 already shared a component
};

/// K' containing K, polynomially convex, joining p1 and p2 in one 4-component, and missing Q.
/// Throws NoPathAtResolution or QTooCloseToK.
ConnectResult connect_avoiding_ex(const PlanarCompact& k, cplx p1, cplx p2, const std::vector<cplx>& q);
PlanarCompact connect_avoiding(const PlanarCompact& k, cplx p1, cplx p2, const std::vector<cplx>& q);

struct Ball {
  CPoint center;
  double radius = 0;
};

/// {a + t b : t in C} in C^2.
struct ComplexLine {
  CPoint a;
  CPoint b;
  CPoint at(cplx t) const { return a + b * t; }
  /// Vanishes exactly on the line.
  cplx defining(const CPoint& z) const { return b[1] * (z[0] - a[0]) - b[0] * (z[1] - a[1]); }
  /// Parameter of the orthogonal projection onto the line.
  cplx parameter(const CPoint& z) const;
};

struct ProbeCertificate {
  enum class Status { Certified, InHull, OffHullOnLine };
  Status status = Status::Certified;
  int exponent = 0;          // k in g = h f^k
  int degree = 0;            // deg g
  double g_at_probe = 0;     // |g(q)|
  double g_sup = 0;          // sampled sup of |g| over the ball union (g vanishes on the line)
  std::string f_kind;        // "linear" or "lemniscate"
};

struct Lemma2Report {
  std::vector<ProbeCertificate> probes;
  bool all_consistent = true;
  nlohmann::json to_json() const;
};

/// For each probe q off the balls, searches g = h f^k with |g(q)| > sup |g| over balls and K'.
/// Throws InvalidArgument for probes inside a ball; CertificateSearchExhausted past degree 64.
Lemma2Report lemma2_line_check(const std::vector<Ball>& balls, const ComplexLine& line, const PlanarCompact& k_prime,
                               const std::vector<CPoint>& probes, int sup_samples = 2000);

}  // namespace fbd
