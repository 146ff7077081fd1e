#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbd/cpoint.hpp"
#include "fbd/poly.hpp"

namespace fbd {

class AutoMap;

/// z -> M z + b.
struct Affine {
  CMatrix matrix;
  CPoint offset;
  CMatrix inverse_matrix;
};

/// z_axis -> z_axis + g(z_source); other coordinates unchanged.
struct Shear {
  int dim = 2;
  int axis = 0;
  int source = 1;
  Poly g;
};

/// z_axis -> exp(h(z_source)) z_axis + g(z_source).
struct Overshear {
  int dim = 2;
  int axis = 0;
  int source = 1;
  Poly h;
  Poly g;
};

/// (z, w) -> (z^2 + c - a w, z), a != 0.
struct Henon {
  cplx a;
  cplx c;
};

/// z -> z / 2.
struct HalfScale {
  int dim = 2;
};

/// Applies maps[0] first, then maps[1], and so on.
struct Composition {
  int dim = 2;
  std::shared_ptr<const std::vector<AutoMap>> maps;
};

/// An automorphism of C^k with exact inverse and Jacobian. Immutable.
class AutoMap {
 public:
  using Variant = std::variant<Affine, Shear, Overshear, Henon, HalfScale, Composition>;

  static AutoMap affine(const CMatrix& m, const CPoint& b);
  static AutoMap linear(const CMatrix& m) { return affine(m, CPoint::zero(m.dim())); }
  static AutoMap translation(const CPoint& b) { return affine(CMatrix::identity(b.dim()), b); }
  static AutoMap shear(int dim, int axis, int source, Poly g);
  static AutoMap overshear(int dim, int axis, int source, Poly h, Poly g);
  static AutoMap henon(cplx a, cplx c);
  static AutoMap half_scale(int dim = 2);
  static AutoMap compose(std::vector<AutoMap> maps_in_application_order);
  static AutoMap identity(int dim = 2);

  int dim() const;
  const Variant& variant() const { return v_; }
  std::string type_name() const;

  CPoint apply(const CPoint& z) const;
  CPoint apply_inverse(const CPoint& z) const;
  /// F(x + dx) - F(x), evaluated so that relative accuracy in dx is preserved.
  CPoint apply_diff(const CPoint& x, const CPoint& dx) const;
  CMatrix jacobian_at(const CPoint& z) const;
  AutoMap inverse() const;

  /// Number of leaf (non-composition) maps.
  std::size_t leaf_count() const;

  nlohmann::json to_json() const;
  static AutoMap from_json(const nlohmann::json& j);

 private:
  explicit AutoMap(Variant v) : v_(std::move(v)) {}
  void check(const CPoint& z) const;
  Variant v_;
};

/// F(i, j) = F_j o ... o F_i with 1-based indices; identity when i > j.
AutoMap compose_range(const std::vector<AutoMap>& maps, int i, int j);

nlohmann::json cplx_to_json(cplx c);
cplx cplx_from_json(const nlohmann::json& j);
nlohmann::json point_to_json(const CPoint& p);
CPoint point_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json poly_to_json(const Poly& p);
Poly poly_from_json(const nlohmann::json& j);

}  // namespace fbd
