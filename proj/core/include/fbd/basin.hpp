#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbd/automap.hpp"
#include "fbd/certificate.hpp"

namespace fbd {

inline constexpr double kDefaultEscapeRadius = 1e3;
inline constexpr int kDefaultBudget = 10000;

/// One attracting center of a sequence. The certificate holds for F_j, j > active_from,
/// so entering B_delta(p) after at least `active_from` maps certifies attraction.
struct BasinCenter {
  ContractionCertificate cert;
  int active_from = 0;
};

/// Ordered automorphisms F_1, F_2, ... sharing per-center certificates. Finite lists
/// may carry an explicit tail block that is repeated cyclically after the last map.
class AutoSequence {
 public:
  AutoSequence(std::vector<AutoMap> maps, std::vector<AutoMap> tail, std::vector<BasinCenter> centers);

  /// Constant sequence F, F, F, ...
  static AutoSequence constant(const AutoMap& f, const ContractionCertificate& cert);

  int dim() const { return dim_; }
  const std::vector<AutoMap>& maps() const { return maps_; }
  const std::vector<AutoMap>& tail() const { return tail_; }
  const std::vector<BasinCenter>& centers() const { return centers_; }
  bool infinite() const { return !tail_.empty(); }
  /// F_j for 1-based j; throws IndexOutOfRange past the end of a finite sequence.
  const AutoMap& map_at(long long j) const;
  /// Number of maps before the tail; escape is only judged from here on.
  int prefix_length() const { return static_cast<int>(maps_.size()); }

  /// Sampled check of every certificate against every map it covers (prefix maps and each tail map once).
  /// Throws CertificateViolated / FixedPointViolated / InvalidBracket.
  void verify(int n_samples = 1000, std::uint64_t seed = 0) const;

  nlohmann::json to_json() const;
  static AutoSequence from_json(const nlohmann::json& j);

 private:
  std::vector<AutoMap> maps_;
  std::vector<AutoMap> tail_;
  std::vector<BasinCenter> centers_;
  int dim_ = 2;
};

struct BasinVerdict {
  enum class Kind { Attracted, Escaped, Undecided };
  Kind kind = Kind::Undecided;
  int basin = -1;      // center index when Attracted
  long long stage = 0; // entry stage (Attracted), escape stage (Escaped), budget (Undecided)
  bool attracted() const { return kind == Kind::Attracted; }
  bool decided() const { return kind != Kind::Undecided; }
  std::string describe() const;
};

/// Attracted once the orbit enters an active capture ball (certified); Escaped once the orbit in the
/// tail leaves the escape ball or overflows (heuristic); Undecided otherwise.
BasinVerdict classify(const AutoSequence& seq, const CPoint& z, long long budget = kDefaultBudget,
                      double escape_radius = kDefaultEscapeRadius);

/// Classifies every point, partitioning across `workers` threads; deterministic.
std::vector<BasinVerdict> classify_all(const AutoSequence& seq, const std::vector<CPoint>& points, long long budget,
                                       double escape_radius, int workers = 1);

struct PhiValue {
  CPoint value;
  double achieved_tol = 0;
  long long entry_stage = 0;
  long long last_stage = 0;
};

/// The limit map Phi = lim A(j)^{-1} F(j) (recentred at the basin's center), evaluated through the
/// factored form A(k)^{-1} Phi^k F(k): iterate into the capture ball, then run the tail at unit scale.
PhiValue phi_eval(const AutoSequence& seq, const CPoint& z, double tol = 1e-15, int j_max = 2000, int basin = 0,
                  long long classify_budget = kDefaultBudget);

/// Central finite-difference differential of Phi at the center, Richardson-checked.
struct PhiDifferential {
  CMatrix d;          // Richardson-extrapolated estimate
  CMatrix d_coarse;   // plain central difference at h
  double richardson_gap = 0;  // max entry |d - d_coarse|
};
PhiDifferential dphi_at_p(const AutoSequence& seq, double h = 1e-5, int basin = 0);

struct ConvergenceReport {
  std::vector<double> stage_diffs;  // sup over samples of ||Phi_{j+1} - Phi_j||, j = 0..j_max-1
  double fitted_ratio = 0;
  double predicted_ratio = 0;
  double observed_R = 0;
  double observed_eps = 0;
  bool exact = false;  // every difference vanished
  int fit_first = 1, fit_last = 20;
  bool passes() const { return exact || fitted_ratio <= predicted_ratio * 1.1; }
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

class RatioViolation : public Error {
 public:
  explicit RatioViolation(ConvergenceReport r)
      : Error("fitted Cauchy ratio exceeds (r^2/s) * 1.1"), report_(std::move(r)) {}
  const ConvergenceReport& report() const { return report_; }

 private:
  ConvergenceReport report_;
};

/// Measures ||Phi_{j+1} - Phi_j|| on samples of B_delta(p) and fits the geometric ratio over j = 1..fit_last.
ConvergenceReport convergence_report(const AutoSequence& seq, int n_samples = 200, int j_max = 20, int basin = 0,
                                     bool throw_on_violation = true, int tail_starts = 4);

struct UnionFormulaReport {
  int n_points = 0;
  int n_decided = 0;
  int n_attracted = 0;
  int n_union_members = 0;
  std::vector<int> disagreements;  // indices into the grid, decided points only
  nlohmann::json to_json() const;
  std::string to_csv(const std::vector<CPoint>& grid, const std::vector<BasinVerdict>& verdicts) const;
};

/// Compares classify with membership in the union of F(j)^{-1}(B_delta(p)), j <= budget.
UnionFormulaReport union_formula_check(const AutoSequence& seq, const std::vector<CPoint>& grid, long long budget,
                                       double escape_radius = kDefaultEscapeRadius, int workers = 1);

struct EquivalenceReport {
  int n_points = 0;
  int n_compared = 0;  // both decided
  int n_identical = 0;
  double fraction() const { return n_compared == 0 ? 1.0 : static_cast<double>(n_identical) / n_compared; }
  nlohmann::json to_json() const;
};

EquivalenceReport sequence_equiv_check(const AutoSequence& a, const AutoSequence& b, const std::vector<CPoint>& grid,
                                       long long budget, double escape_radius = kDefaultEscapeRadius);

// ---- increasing-union limit ----

/// A biholomorphism supplier with forward and inverse evaluation.
struct StagedMap {
  std::function<CPoint(const CPoint&)> forward;
  std::function<CPoint(const CPoint&)> inverse;
};

struct LimitValue {
  CPoint value;
  double tail_bound = 0;
  int stage = 0;
};

/// Limit of suppliers with ||phi_{k+1} - phi_k|| < rho_{k+1} on K_k and the same for inverses on B_k.
class IncreasingLimit {
 public:
  /// forward_sets[k] / inverse_sets[k] are the samples of K_k / closed B_k that the stage-k bounds are checked on.
  IncreasingLimit(std::vector<StagedMap> suppliers, std::vector<double> rho_schedule,
                  std::vector<std::vector<CPoint>> forward_sets, std::vector<std::vector<CPoint>> inverse_sets,
                  double summability_tol = 1e-6);

  LimitValue forward(const CPoint& z, double tol) const;
  LimitValue inverse(const CPoint& z, double tol) const;
  /// Fraction of sampled distinct pairs (separation > min_sep) whose images stay distinct (> 1e-10).
  double injectivity_spot_check(const std::vector<CPoint>& samples, double min_sep = 1e-6) const;
  /// Bound on sum_{i > j} rho_i including the geometric extrapolation past the schedule.
  double tail_sum(int j) const;
  int stages() const { return static_cast<int>(suppliers_.size()); }

 private:
  int stage_for(double tol) const;
  std::vector<StagedMap> suppliers_;
  std::vector<double> rho_;
  double extrapolated_tail_ = 0;
};

}  // namespace fbd
