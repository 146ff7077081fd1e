#include "fbd/poly.hpp"

#include <string>

namespace fbd {

namespace {

cplx ipow(cplx u, int e) {
  cplx r = 1.0;
  cplx b = u;
  while (e > 0) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

// (u + d)^e - u^e, accumulated as d * D_e with D_n = (u + d) D_{n-1} + u^{n-1}.
cplx pow_diff(cplx u, cplx d, int e) {
  cplx D = 0.0;
  cplx upow = 1.0;
  const cplx ud = u + d;
  for (int n = 1; n <= e; ++n) {
    D = ud * D + upow;
    upow *= u;
  }
  return d * D;
}

}  // namespace

cplx cexpm1(cplx z) {
  const double x = z.real(), y = z.imag();
  const double em1 = std::expm1(x);
  const double s = std::sin(y / 2.0);
  const double re = em1 * std::cos(y) - 2.0 * s * s;
  const double im = std::exp(x) * std::sin(y);
  return {re, im};
}

Poly Poly::dense(std::vector<cplx> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  Poly p;
  p.coeffs_ = std::move(coeffs);
  p.nodes_.assign(p.coeffs_.size() - 1, 0.0);
  p.validate();
  return p;
}

Poly Poly::factored(std::vector<RootFactor> roots, std::vector<cplx> nodes, std::vector<cplx> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  if (nodes.empty()) nodes.assign(coeffs.size() - 1, 0.0);
  if (nodes.size() + 1 != coeffs.size()) throw InvalidArgument("Newton form needs one node fewer than coefficients");
  Poly p;
  p.roots_ = std::move(roots);
  p.nodes_ = std::move(nodes);
  p.coeffs_ = std::move(coeffs);
  p.validate();
  return p;
}

Poly Poly::interpolate(std::span<const cplx> nodes, std::span<const cplx> values) {
  if (nodes.size() != values.size() || nodes.empty()) throw InvalidArgument("interpolate: size mismatch");
  const std::size_t n = nodes.size();
  std::vector<cplx> dd(values.begin(), values.end());
  for (std::size_t level = 1; level < n; ++level)
    for (std::size_t i = n - 1; i >= level; --i) {
      const cplx den = nodes[i] - nodes[i - level];
      if (den == cplx(0)) throw GeneralPositionViolated("interpolate: repeated node");
      dd[i] = (dd[i] - dd[i - 1]) / den;
    }
  std::vector<cplx> nd(nodes.begin(), nodes.end() - 1);
  return factored({}, std::move(nd), std::move(dd));
}

Poly Poly::hermite(std::span<const cplx> nodes, std::span<const cplx> values, std::span<const cplx> derivs) {
  if (nodes.size() != values.size() || nodes.size() != derivs.size() || nodes.empty())
    throw InvalidArgument("hermite: size mismatch");
  const std::size_t n = 2 * nodes.size();
  std::vector<cplx> z(n), dd(n);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    z[2 * i] = z[2 * i + 1] = nodes[i];
    dd[2 * i] = dd[2 * i + 1] = values[i];
  }
  // first level handles the confluent pairs with the prescribed derivative
  std::vector<cplx> prev = dd;
  for (std::size_t i = n - 1; i >= 1; --i) {
    if (z[i] == z[i - 1]) {
      dd[i] = derivs[i / 2];
    } else {
      dd[i] = (prev[i] - prev[i - 1]) / (z[i] - z[i - 1]);
    }
  }
  for (std::size_t level = 2; level < n; ++level)
    for (std::size_t i = n - 1; i >= level; --i) {
      const cplx den = z[i] - z[i - level];
      if (den == cplx(0)) throw GeneralPositionViolated("hermite: repeated node");
      dd[i] = (dd[i] - dd[i - 1]) / den;
    }
  std::vector<cplx> nd(z.begin(), z.end() - 1);
  return factored({}, std::move(nd), std::move(dd));
}

Poly Poly::damped_interpolate(std::vector<RootFactor> roots, std::span<const cplx> nodes,
                              std::span<const cplx> values) {
  Poly damping = factored(roots, {}, {1.0});
  std::vector<cplx> scaled(values.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const cplx w = damping(nodes[k]);
    if (w == cplx(0)) throw GeneralPositionViolated("damped_interpolate: node coincides with a root");
    scaled[k] = values[k] / w;
  }
  Poly q = interpolate(nodes, scaled);
  return factored(std::move(roots), q.nodes_, q.coeffs_);
}

void Poly::validate() const {
  if (degree() > kMaxPolyDegree)
    throw InvalidArgument("polynomial degree " + std::to_string(degree()) + " exceeds cap");
  for (const auto& r : roots_)
    if (r.mult < 1 || !(r.inv_scale > 0)) throw InvalidArgument("root factor needs mult >= 1 and scale > 0");
}

int Poly::degree() const {
  int d = static_cast<int>(coeffs_.size()) - 1;
  for (const auto& r : roots_) d += r.mult;
  return d;
}

bool Poly::is_zero() const {
  for (const cplx& c : coeffs_)
    if (c != cplx(0)) return false;
  return true;
}

cplx Poly::operator()(cplx x) const {
  const std::size_t n = coeffs_.size();
  cplx v = coeffs_[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) v = coeffs_[i] + (x - nodes_[i]) * v;
  for (const auto& r : roots_) v *= ipow((x - r.at) * r.inv_scale, r.mult);
  return v;
}

PolyJet Poly::jet(cplx x) const {
  const std::size_t n = coeffs_.size();
  cplx v = coeffs_[n - 1];
  cplx dv = 0.0;
  for (std::size_t i = n - 1; i-- > 0;) {
    const cplx t = x - nodes_[i];
    dv = v + t * dv;
    v = coeffs_[i] + t * v;
  }
  for (const auto& r : roots_) {
    const cplx u = (x - r.at) * r.inv_scale;
    const cplx um1 = ipow(u, r.mult - 1);
    const cplx f = um1 * u;
    const cplx df = static_cast<double>(r.mult) * um1 * r.inv_scale;
    dv = dv * f + v * df;
    v *= f;
  }
  return {v, dv};
}

cplx Poly::diff(cplx x, cplx d) const {
  // Newton part: H_i(x) = c_i + (x - x_i) H_{i+1}(x); carry H(x+d) and Delta H together.
  const std::size_t n = coeffs_.size();
  cplx h_shift = coeffs_[n - 1];
  cplx h_base = coeffs_[n - 1];
  cplx delta = 0.0;
  for (std::size_t i = n - 1; i-- > 0;) {
    const cplx t = x - nodes_[i];
    delta = d * h_shift + t * delta;
    h_shift = coeffs_[i] + (t + d) * h_shift;
    h_base = coeffs_[i] + t * h_base;
  }
  // root factors: P_k = P_{k-1} f_k, Delta P_k = P_{k-1}(x+d) Delta f_k + Delta P_{k-1} f_k(x)
  for (const auto& r : roots_) {
    const cplx u = (x - r.at) * r.inv_scale;
    const cplx du = d * r.inv_scale;
    const cplx f_base = ipow(u, r.mult);
    const cplx f_shift = ipow(u + du, r.mult);
    const cplx df = pow_diff(u, du, r.mult);
    delta = h_shift * df + delta * f_base;
    h_shift *= f_shift;
    h_base *= f_base;
  }
  return delta;
}

}  // namespace fbd
