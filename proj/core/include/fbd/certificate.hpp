#pragma once

#include <nlohmann/json.hpp>

#include "fbd/automap.hpp"

namespace fbd {

/// Safety factor applied to every sampled supremum (and its reciprocal to infima).
inline constexpr double kSampleWidening = 1.05;
/// Fixed-point tolerance for certificates.
inline constexpr double kFixedPointTol = 1e-12;

/// Norm frame: distances about p are measured as ||metric * (z - p)||.
/// The identity metric gives the Euclidean norm; an eigenbasis metric makes
/// non-normal linear parts look like their eigenvalue moduli.
struct NormFrame {
  CMatrix metric;
  CMatrix metric_inv;
  static NormFrame euclidean(int dim) { return {CMatrix::identity(dim), CMatrix::identity(dim)}; }
  static NormFrame from_metric(const CMatrix& m) { return {m, m.inverse()}; }
  double norm(const CPoint& u) const { return (metric * u).norm(); }
  bool is_euclidean() const;
};

/// (p, rho, s, r, delta, C): the data under which sequence attraction is certified.
struct ContractionCertificate {
  CPoint p;
  double rho = 0;
  double s = 0;
  double r = 0;
  double delta = 0;      // capture radius: orbits entering B_delta(p) are attracted
  double lemma1_C = 0;   // sampled second-order constant C on B_rho
  NormFrame frame = NormFrame::euclidean(2);
  bool unsafe = false;   // skips r^2 < s (experimental, never certified)

  /// Throws InvalidBracket unless 0 < s < r < 1 and (unless unsafe) r^2 < s.
  void validate() const;
  double predicted_ratio() const { return r * r / s; }

  nlohmann::json to_json() const;
  static ContractionCertificate from_json(const nlohmann::json& j);
};

struct BoundsEstimate {
  double s_raw = 0;   // sampled infimum of the ratio
  double r_raw = 0;   // sampled supremum
  double s_hat = 0;   // s_raw / 1.05
  double r_hat = 0;   // r_raw * 1.05
  double s_coarse = 0, r_coarse = 0;  // same at half the density, for the cross-check
};

/// Sampled min/max of ||F(z) - p|| / ||z - p|| over B_rho(p) \ {p} (frame norm).
BoundsEstimate contraction_bounds(const AutoMap& map, const CPoint& p, double rho, int n_samples,
                                  const NormFrame& frame);
BoundsEstimate contraction_bounds(const AutoMap& map, const CPoint& p, double rho, int n_samples);

/// Sampled sup of ||A_F^{-1}(F(z) - p) - (z - p)|| / ||z - p||^2, widened by 5%.
double lemma1_constant(const AutoMap& map, const CPoint& p, double rho, int n_samples);
double lemma1_constant(const AutoMap& map, const CPoint& p, double rho, int n_samples, const NormFrame& frame);

/// delta = rho * min(r - 1/2, 1/2 - s): any origin-fixing F with ||F - A|| < delta on B_rho
/// satisfies s||z|| <= ||F(z)|| <= r||z|| there (Schwarz lemma applied to F - A).
double schwarz_delta(double rho, double s, double r);

/// Metric diagonalising dF(p) (k = 2); Euclidean if dF(p) is already normal or defective.
NormFrame adapted_frame(const AutoMap& map, const CPoint& p);

/// Certificate measured from samples: bounds widened, delta = rho.
ContractionCertificate measure_certificate(const AutoMap& map, const CPoint& p, double rho, int n_samples,
                                           const NormFrame& frame);

/// Certificate for perturbations of the half-scale map about p: bracket (s, r), delta = schwarz_delta.
ContractionCertificate half_scale_certificate(const CPoint& p, double rho, double s = 0.4, double r = 0.6);

/// Throws FixedPointViolated if ||F(p) - p|| > tol.
void require_fixed_point(const AutoMap& map, const CPoint& p, double tol = kFixedPointTol);

/// Sampled ratio range of `map` on B_rho(cert.p) in the certificate frame (no widening).
std::pair<double, double> sampled_ratio_range(const AutoMap& map, const ContractionCertificate& cert, int n_samples,
                                              std::uint64_t seed = 0);

/// Sampled sup of ||F(z) - (A(z-q) + q)|| over the closed ball B_rho(q), A = half-scale.
double half_scale_deviation(const AutoMap& map, const CPoint& q, double rho, int n_samples, std::uint64_t seed = 0);

/// F(p + u) - F(p) evaluated accurately; equals F(p + u) - p when F fixes p.
inline CPoint recentred(const AutoMap& map, const CPoint& p, const CPoint& u) { return map.apply_diff(p, u); }

}  // namespace fbd
