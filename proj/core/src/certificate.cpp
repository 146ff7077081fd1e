#include "fbd/certificate.hpp"

#include <algorithm>
#include <limits>

#include "fbd/sampling.hpp"

namespace fbd {

bool NormFrame::is_euclidean() const { return (metric - CMatrix::identity(metric.dim())).max_abs() == 0.0; }

void ContractionCertificate::validate() const {
  if (!(rho > 0)) throw InvalidBracket("certificate radius must be positive");
  if (!(delta > 0)) throw InvalidBracket("certificate capture radius must be positive");
  if (!(0 < s && s < r && r < 1)) throw InvalidBracket("certificate needs 0 < s < r < 1");
  if (!unsafe && !(r * r < s)) throw InvalidBracket("certificate needs r^2 < s");
}

nlohmann::json ContractionCertificate::to_json() const {
  nlohmann::json j{{"p", point_to_json(p)}, {"rho", rho},           {"s", s},
                   {"r", r},                {"delta", delta},       {"lemma1_C", lemma1_C},
                   {"unsafe", unsafe}};
  if (!frame.is_euclidean()) j["frame"] = matrix_to_json(frame.metric);
  return j;
}

ContractionCertificate ContractionCertificate::from_json(const nlohmann::json& j) {
  ContractionCertificate c;
  c.p = point_from_json(j.at("p"));
  c.rho = j.at("rho").get<double>();
  c.s = j.at("s").get<double>();
  c.r = j.at("r").get<double>();
  c.delta = j.at("delta").get<double>();
  c.lemma1_C = j.value("lemma1_C", 0.0);
  c.unsafe = j.value("unsafe", false);
  c.frame = j.contains("frame") ? NormFrame::from_metric(matrix_from_json(j["frame"])) : NormFrame::euclidean(c.p.dim());
  return c;
}

void require_fixed_point(const AutoMap& map, const CPoint& p, double tol) {
  const double e = distance(map.apply(p), p);
  if (!(e <= tol)) throw FixedPointViolated("map moves its fixed point by " + std::to_string(e));
}

namespace {

std::pair<double, double> ratio_range(const AutoMap& map, const CPoint& p, double rho, int n, const NormFrame& frame,
                                      std::uint64_t seed) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const CPoint& v : shell_samples(p.dim(), rho, n, seed)) {
    const CPoint u = frame.metric_inv * v;
    const double ratio = frame.norm(recentred(map, p, u)) / v.norm();
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return {lo, hi};
}

}  // namespace

BoundsEstimate contraction_bounds(const AutoMap& map, const CPoint& p, double rho, int n_samples,
                                  const NormFrame& frame) {
  if (n_samples < 1000) throw InvalidArgument("contraction_bounds needs at least 1000 samples");
  if (!(rho > 0)) throw InvalidArgument("rho must be positive");
  require_fixed_point(map, p);
  BoundsEstimate b;
  std::tie(b.s_raw, b.r_raw) = ratio_range(map, p, rho, n_samples, frame, 0);
  std::tie(b.s_coarse, b.r_coarse) = ratio_range(map, p, rho, n_samples / 2, frame, 0);
  b.s_hat = b.s_raw / kSampleWidening;
  b.r_hat = b.r_raw * kSampleWidening;
  return b;
}

BoundsEstimate contraction_bounds(const AutoMap& map, const CPoint& p, double rho, int n_samples) {
  return contraction_bounds(map, p, rho, n_samples, NormFrame::euclidean(p.dim()));
}

double lemma1_constant(const AutoMap& map, const CPoint& p, double rho, int n_samples, const NormFrame& frame) {
  require_fixed_point(map, p);
  const CMatrix a_inv = map.jacobian_at(p).inverse();  // SingularDifferential
  double sup = 0;
  for (const CPoint& v : shell_samples(p.dim(), rho, n_samples)) {
    const CPoint u = frame.metric_inv * v;
    const CPoint err = a_inv * recentred(map, p, u) - u;
    sup = std::max(sup, frame.norm(err) / v.norm_sq());
  }
  return sup * kSampleWidening;
}

double lemma1_constant(const AutoMap& map, const CPoint& p, double rho, int n_samples) {
  return lemma1_constant(map, p, rho, n_samples, NormFrame::euclidean(p.dim()));
}

double schwarz_delta(double rho, double s, double r) {
  if (!(rho > 0)) throw InvalidBracket("rho must be positive");
  if (!(0 < s && s < 0.5 && 0.5 < r && r < 1)) throw InvalidBracket("bracket must satisfy 0 < s < 1/2 < r < 1");
  if (!(r * r < s)) throw InvalidBracket("bracket must satisfy r^2 < s");
  return rho * std::min(r - 0.5, 0.5 - s);
}

NormFrame adapted_frame(const AutoMap& map, const CPoint& p) {
  if (p.dim() != 2) return NormFrame::euclidean(p.dim());
  const CMatrix j = map.jacobian_at(p);
  // normal matrices already have ratio range = eigenvalue range
  if (((j * j.adjoint()) - (j.adjoint() * j)).max_abs() < 1e-14 * (1 + j.max_abs() * j.max_abs()))
    return NormFrame::euclidean(2);
  const Eigen2 e = eigen2(j);
  if (std::abs(e.vectors.det()) < 1e-8) return NormFrame::euclidean(2);
  // scaled to Frobenius norm 1 so every frame ball contains the Euclidean ball of the same radius
  CMatrix m = e.vectors.inverse();
  double fro = 0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) fro += std::norm(m(r, c));
  return NormFrame::from_metric(m * cplx(1.0 / std::sqrt(fro)));
}

ContractionCertificate measure_certificate(const AutoMap& map, const CPoint& p, double rho, int n_samples,
                                           const NormFrame& frame) {
  const BoundsEstimate b = contraction_bounds(map, p, rho, n_samples, frame);
  ContractionCertificate c;
  c.p = p;
  c.rho = rho;
  c.s = b.s_hat;
  c.r = b.r_hat;
  c.delta = rho;
  c.frame = frame;
  c.lemma1_C = lemma1_constant(map, p, rho, n_samples, frame);
  return c;
}

ContractionCertificate half_scale_certificate(const CPoint& p, double rho, double s, double r) {
  ContractionCertificate c;
  c.p = p;
  c.rho = rho;
  c.s = s;
  c.r = r;
  c.delta = schwarz_delta(rho, s, r);
  c.frame = NormFrame::euclidean(p.dim());
  c.lemma1_C = 0.0;  // sampled later, once concrete maps are attached
  return c;
}

std::pair<double, double> sampled_ratio_range(const AutoMap& map, const ContractionCertificate& cert, int n_samples,
                                              std::uint64_t seed) {
  return ratio_range(map, cert.p, cert.rho, n_samples, cert.frame, seed);
}

double half_scale_deviation(const AutoMap& map, const CPoint& q, double rho, int n_samples, std::uint64_t seed) {
  double sup = 0;
  for (const CPoint& u : shell_samples(q.dim(), rho, n_samples, seed)) {
    const CPoint dev = map.apply(q + u) - (q + u * 0.5);
    sup = std::max(sup, dev.norm());
  }
  return sup;
}

}  // namespace fbd
