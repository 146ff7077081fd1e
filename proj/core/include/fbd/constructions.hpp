#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbd/basin.hpp"
#include "fbd/hull.hpp"
#include "fbd/mover.hpp"

namespace fbd {

/// Real 2D slice of C^2: origin + u * axis_u + v * axis_v, |u|, |v| <= extent.
struct SliceSpec {
  CPoint origin = CPoint::zero(2);
  CPoint axis_u{cplx(1, 0), cplx(0, 0)};
  CPoint axis_v{cplx(0, 1), cplx(0, 0)};
  double extent = 2;
  int resolution = 200;

  /// Throws InvalidArgument for dependent axes (Gram determinant <= 1e-9) or resolution outside [1, 4096].
  void validate() const;
  /// Pixel centre (i, j), i along u, j along v; row 0 is the top (largest v).
  CPoint point(int i, int j) const;
  std::vector<CPoint> grid() const;  // row-major, resolution^2 points
  nlohmann::json to_json() const;
  static SliceSpec from_json(const nlohmann::json& j);
};

struct Witness {
  CPoint point;
  CPoint image;  // F(j+1)(point) at the stage it was committed
  int basin = 0;
  int stage = 0;
};

/// Snapshot of the disjoint-basins construction after `stage` maps.
struct StageState {
  int stage = 0;
  std::vector<AutoMap> maps;          // F_1 .. F_stage
  std::vector<CPoint> centers;        // q_i
  std::vector<CPoint> preimages;      // p_i
  std::vector<double> radii;          // rho_i
  std::vector<int> center_stage;      // first map index (1-based) that fixes q_i
  std::vector<Witness> witnesses;
  std::vector<CPoint> excluded;
  std::vector<double> eps_schedule;

  double delta(std::size_t i) const;  // schwarz_delta(rho_i, 0.4, 0.6)
  CPoint forward(const CPoint& z) const;  // F(stage)(z)

  nlohmann::json to_json() const;
  static StageState from_json(const nlohmann::json& j);
};

struct InvariantCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

/// Re-verifies (a) disjoint, separated target balls, (b) F(j)(p_i) = q_i, (c) F_i(q_k) = q_k and
/// (d) the sampled half-scale bound on every ball, all from scratch.
std::vector<InvariantCheck> check_stage_invariants(const StageState& s, int n_samples = 2000, std::uint64_t seed = 0);

/// Thrown by the builders: StageFailed plus the state at the failing stage.
class BuildFailed : public StageFailed {
 public:
  BuildFailed(int stage, const std::string& cause, nlohmann::json state)
      : StageFailed(stage, cause), state_(std::move(state)) {}
  const nlohmann::json& state() const { return state_; }

 private:
  nlohmann::json state_;
};

struct DisjointConfig {
  int m = 3;
  int stages = 8;
  std::vector<double> eps_schedule;  // empty: 2^-j
  std::uint64_t seed = 0;
  SliceSpec slice;                   // witness and preimage plane
  int witness_grid = 48;             // candidate lattice per axis
  int anchors_per_stage = 2;         // witness anchors per stage (each carries one witness per basin)
  double witness_image_cap = 20;     // only points with ||F(j)(t)|| below this are pulled in
  double center_extent = 4;          // half-width of the slice square the preimages p_i are drawn from
  int samples = 4000;                // per-ball sampling for the mover and contractor
  void validate() const;
  nlohmann::json to_json() const;
  static DisjointConfig from_json(const nlohmann::json& j);
};

struct BuildResult {
  AutoSequence sequence;
  StageState state;
  std::vector<nlohmann::json> history;  // one entry per committed stage
  nlohmann::json log;                   // builder-specific (witness / path / tuck log)
};

/// m basins, each a Fatou-Bieberbach domain; tail = the last contractor.
BuildResult build_disjoint_basins(const DisjointConfig& cfg);

/// Witness CSV: basin,stage,point re/im..., image re/im...
std::string witnesses_csv(const StageState& s);

/// Offsets a non-attracted grid point may have from a witness of every basin.
struct DensityReport {
  long long checked = 0;      // decided-non-attracted grid points
  long long covered = 0;      // with an Attracted witness of every basin within eps
  double eps = 0;
  double worst_gap = 0;       // largest min-distance to the nearest witness of some basin
  bool passes() const { return covered == checked; }
  nlohmann::json to_json() const;
};
DensityReport density_witness_check(const BuildResult& r, const std::vector<CPoint>& grid,
                                    const std::vector<BasinVerdict>& verdicts, double eps, long long budget);

/// Number of grid points whose orbit enters two different capture balls (after activation).
long long double_classified(const AutoSequence& seq, const std::vector<CPoint>& grid, long long budget,
                            int workers = 1);

// ---------------------------------------------------------------------------------------------

struct LineSpec {
  CPoint origin = CPoint::zero(2);
  CPoint direction{cplx(1, 0), cplx(0, 0)};
  void validate() const;
  ComplexLine line() const { return {origin, direction}; }
};

struct VarietySpec {
  // kind "axis": coordinate axis `axis`; kind "curve": t -> (x(t), y(t)) with polynomial coefficients
  std::string kind = "axis";
  int axis = 0;
  std::vector<cplx> x, y;
  double unit = 1;  // K_i = V intersected with the closed ball of radius i * unit
  void validate() const;
  CPoint at(cplx t) const;
};

/// Tail used by the line and variety builders: A composed with two small quadratic shears, so
/// the basin of 0 is bounded while the certificate at 0 still holds.
AutoMap henon_like_tail(double kappa = 0.2);

/// A^s after a near-identity mover that keeps the anchors' ball hull and pushes every expel
/// point beyond radius expel_radius * 2^s. Factors in application order: A o phi, A, ..., A.
/// s < 0 picks the least s with A^s(anchors) inside the unit ball. The mover also stays near the
/// identity on `protect` (its keep ball covers both sets).
struct TuckResult {
  std::vector<AutoMap> factors;
  int s = 0;
  double keep_radius = 0;
  double mover_error = 0;
  int damping = 0;
  AutoMap composed() const;
  nlohmann::json to_json() const;
};
TuckResult tuck_step_ex(const std::vector<CPoint>& anchors, int s, const std::vector<CPoint>& expel,
                        double expel_radius, double mu = 0.02, std::uint64_t seed = 0, int samples = 4000,
                        const std::vector<CPoint>& protect = {});
AutoMap tuck_step(const std::vector<CPoint>& anchors, int s, const std::vector<CPoint>& expel,
                  double expel_radius, double mu = 0.02, std::uint64_t seed = 0);

struct LinesConfig {
  std::vector<LineSpec> lines;
  int stages = 6;
  std::uint64_t seed = 0;
  double param_extent = 6;     // schedule and path plane: |Re t|, |Im t| <= extent
  int hull_resolution = 12;    // cells per unit in the parameter plane
  double expel_radius = 40;
  double mu = 0.02;
  double kappa = 0.2;
  void validate() const;
  nlohmann::json to_json() const;
  static LinesConfig from_json(const nlohmann::json& j);
};

/// Dense schedule on a line: 0, then points spreading along the real parameter segment.
std::vector<cplx> line_schedule(int count, double extent);

struct LinesResult {
  AutoSequence sequence;
  std::vector<CPoint> excluded;  // q_i, one per line
  nlohmann::json log;
};
LinesResult build_line_intersector(const LinesConfig& cfg);

struct ConnectivityReport {
  std::vector<int> runs;              // attracted runs per line
  std::vector<long long> attracted;   // attracted samples per line
  std::vector<bool> excluded_ok;      // each q_i decided non-attracted
  bool passes() const;
  nlohmann::json to_json() const;
};
ConnectivityReport line_connectivity(const LinesResult& r, const LinesConfig& cfg, int samples = 1000,
                                     long long budget = kDefaultBudget, int workers = 1);

struct VarietiesConfig {
  std::vector<VarietySpec> varieties;
  CPoint excluded{cplx(6, 0), cplx(6, 0)};
  int stages = 6;
  std::uint64_t seed = 0;
  int samples_per_compact = 256;
  double expel_radius = 40;
  double mu = 0.02;
  double kappa = 0.2;
  void validate() const;
  nlohmann::json to_json() const;
  static VarietiesConfig from_json(const nlohmann::json& j);
};

struct VarietiesResult {
  AutoSequence sequence;
  nlohmann::json log;
};
VarietiesResult build_variety_container(const VarietiesConfig& cfg);

/// Points of K^k_i sampled on a polar lattice of the parameter disc.
std::vector<CPoint> variety_compact_samples(const VarietySpec& v, double radius, int n);

struct ContainmentReport {
  long long sampled = 0;
  long long attracted = 0;
  bool excluded_attracted = false;
  BasinVerdict excluded_verdict;
  bool passes() const { return attracted == sampled && !excluded_attracted; }
  nlohmann::json to_json() const;
};
ContainmentReport variety_containment(const VarietiesResult& r, const VarietiesConfig& cfg, int samples = 64,
                                      long long budget = kDefaultBudget, int workers = 1);

}  // namespace fbd
