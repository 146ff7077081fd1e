#include "fbd/basin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "fbd/sampling.hpp"
#include "parallel.hpp"

namespace fbd {

AutoSequence::AutoSequence(std::vector<AutoMap> maps, std::vector<AutoMap> tail, std::vector<BasinCenter> centers)
    : maps_(std::move(maps)), tail_(std::move(tail)), centers_(std::move(centers)) {
  if (maps_.empty() && tail_.empty()) throw InvalidArgument("sequence needs at least one map");
  dim_ = maps_.empty() ? tail_.front().dim() : maps_.front().dim();
  for (const auto* list : {&maps_, &tail_})
    for (const AutoMap& f : *list)
      if (f.dim() != dim_) throw DimensionMismatch("sequence maps must share one dimension");
  for (const BasinCenter& c : centers_) {
    if (c.cert.p.dim() != dim_) throw DimensionMismatch("center dimension differs from sequence dimension");
    if (c.active_from < 0) throw InvalidArgument("active_from must be non-negative");
    c.cert.validate();
  }
}

AutoSequence AutoSequence::constant(const AutoMap& f, const ContractionCertificate& cert) {
  return AutoSequence({}, {f}, {BasinCenter{cert, 0}});
}

const AutoMap& AutoSequence::map_at(long long j) const {
  if (j < 1) throw IndexOutOfRange("sequence index starts at 1");
  const auto n = static_cast<long long>(maps_.size());
  if (j <= n) return maps_[static_cast<std::size_t>(j - 1)];
  if (tail_.empty()) throw IndexOutOfRange("index past the end of a finite sequence");
  return tail_[static_cast<std::size_t>((j - n - 1) % static_cast<long long>(tail_.size()))];
}

void AutoSequence::verify(int n_samples, std::uint64_t seed) const {
  for (std::size_t ci = 0; ci < centers_.size(); ++ci) {
    const BasinCenter& c = centers_[ci];
    auto check = [&](const AutoMap& f, const std::string& where) {
      const double e = distance(f.apply(c.cert.p), c.cert.p);
      if (!(e <= kFixedPointTol * (1 + c.cert.p.norm())))
        throw FixedPointViolated("center " + std::to_string(ci) + " not fixed by " + where);
      auto [lo, hi] = sampled_ratio_range(f, c.cert, n_samples, seed);
      if (lo < c.cert.s || hi > c.cert.r)
        throw CertificateViolated("center " + std::to_string(ci) + " at " + where + ": ratio range [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "] outside [" +
                                  std::to_string(c.cert.s) + ", " + std::to_string(c.cert.r) + "]");
    };
    for (std::size_t j = static_cast<std::size_t>(c.active_from); j < maps_.size(); ++j)
      check(maps_[j], "map " + std::to_string(j + 1));
    for (std::size_t j = 0; j < tail_.size(); ++j) check(tail_[j], "tail map " + std::to_string(j + 1));
  }
}

nlohmann::json AutoSequence::to_json() const {
  nlohmann::json maps = nlohmann::json::array(), tail = nlohmann::json::array(), centers = nlohmann::json::array();
  for (const AutoMap& f : maps_) maps.push_back(f.to_json());
  for (const AutoMap& f : tail_) tail.push_back(f.to_json());
  for (const BasinCenter& c : centers_) centers.push_back({{"cert", c.cert.to_json()}, {"active_from", c.active_from}});
  return {{"dim", dim_}, {"maps", maps}, {"tail", tail}, {"centers", centers}};
}

AutoSequence AutoSequence::from_json(const nlohmann::json& j) {
  std::vector<AutoMap> maps, tail;
  std::vector<BasinCenter> centers;
  for (const auto& m : j.value("maps", nlohmann::json::array())) maps.push_back(AutoMap::from_json(m));
  for (const auto& m : j.value("tail", nlohmann::json::array())) tail.push_back(AutoMap::from_json(m));
  for (const auto& c : j.at("centers"))
    centers.push_back({ContractionCertificate::from_json(c.at("cert")), c.value("active_from", 0)});
  return AutoSequence(std::move(maps), std::move(tail), std::move(centers));
}

std::string BasinVerdict::describe() const {
  switch (kind) {
    case Kind::Attracted:
      return "attracted(basin " + std::to_string(basin) + ", stage " + std::to_string(stage) + ")";
    case Kind::Escaped:
      return "escaped(stage " + std::to_string(stage) + ")";
    default:
      return "undecided(" + std::to_string(stage) + ")";
  }
}

namespace {

struct Capture {
  CPoint p;
  double delta;
  int active_from;
  bool euclid;
  CMatrix metric;
  bool inside(const CPoint& y) const {
    const CPoint u = y - p;
    return (euclid ? u.norm() : (metric * u).norm()) < delta;
  }
};

std::vector<Capture> captures(const AutoSequence& seq) {
  std::vector<Capture> out;
  for (const BasinCenter& c : seq.centers())
    out.push_back({c.cert.p, c.cert.delta, c.active_from, c.cert.frame.is_euclidean(), c.cert.frame.metric});
  return out;
}

void check_escape_radius(const AutoSequence& seq, double escape_radius) {
  for (const BasinCenter& c : seq.centers()) {
    // capture ball in frame norm sits inside a Euclidean ball of radius delta * ||metric^{-1}||
    const double reach = c.cert.p.norm() + c.cert.delta * (c.cert.frame.metric_inv.max_abs() * c.cert.p.dim());
    if (!(escape_radius > reach)) throw InvalidArgument("escape radius must enclose every capture ball");
  }
}

BasinVerdict classify_impl(const AutoSequence& seq, const std::vector<Capture>& caps, const CPoint& z,
                           long long budget, double escape_radius) {
  const long long prefix = seq.prefix_length();
  const bool infinite = seq.infinite();
  const long long last = infinite ? budget : std::min<long long>(budget, prefix);
  CPoint y = z;
  for (long long j = 0;; ++j) {
    if (!y.finite()) return {BasinVerdict::Kind::Escaped, -1, j};
    for (std::size_t c = 0; c < caps.size(); ++c)
      if (j >= caps[c].active_from && caps[c].inside(y)) return {BasinVerdict::Kind::Attracted, static_cast<int>(c), j};
    if ((infinite ? j >= prefix : j == prefix) && y.norm() > escape_radius)
      return {BasinVerdict::Kind::Escaped, -1, j};
    if (j >= last) break;
    y = seq.map_at(j + 1).apply(y);
  }
  return {BasinVerdict::Kind::Undecided, -1, last};
}

using detail::parallel_for;

}  // namespace

BasinVerdict classify(const AutoSequence& seq, const CPoint& z, long long budget, double escape_radius) {
  if (z.dim() != seq.dim()) throw DimensionMismatch("point dimension differs from sequence dimension");
  if (budget < 0) throw InvalidArgument("budget must be non-negative");
  check_escape_radius(seq, escape_radius);
  return classify_impl(seq, captures(seq), z, budget, escape_radius);
}

std::vector<BasinVerdict> classify_all(const AutoSequence& seq, const std::vector<CPoint>& points, long long budget,
                                       double escape_radius, int workers) {
  check_escape_radius(seq, escape_radius);
  const auto caps = captures(seq);
  std::vector<BasinVerdict> out(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) {
    if (points[i].dim() != seq.dim()) throw DimensionMismatch("point dimension differs from sequence dimension");
    out[i] = classify_impl(seq, caps, points[i], budget, escape_radius);
  });
  return out;
}

namespace {

// Runs Phi^k_j(p + u) - p = A(k+1, j)^{-1} (F(k+1, j)(p + u) - p) forward from stage k, accumulating
// the increments M_j (u_j - A_j u_{j-1}) so second-order terms are never swamped by the linear part.
struct TailRun {
  const AutoSequence& seq;
  CPoint p;
  long long stage;  // maps F_{stage+1}, ... still to apply
  CPoint u;         // F(k+1, stage)(p + u0) - p
  CMatrix m;        // A(k+1, stage)^{-1}
  CPoint w;         // current Phi^k_stage - p

  TailRun(const AutoSequence& s, const CPoint& center, long long k, const CPoint& u0)
      : seq(s), p(center), stage(k), u(u0), m(CMatrix::identity(center.dim())), w(u0) {}

  // advances one stage; returns the increment added to w
  CPoint step() {
    const AutoMap& f = seq.map_at(stage + 1);
    const CMatrix a = f.jacobian_at(p);
    const CPoint next = f.apply_diff(p, u);
    const CPoint second_order = next - a * u;
    m = m * a.inverse();
    const CPoint inc = m * second_order;
    w += inc;
    u = next;
    ++stage;
    return inc;
  }
};

CMatrix prefix_inverse(const AutoSequence& seq, const CPoint& p, long long from, long long to) {
  CMatrix m = CMatrix::identity(p.dim());
  for (long long j = from + 1; j <= to; ++j) m = m * seq.map_at(j).jacobian_at(p).inverse();
  return m;
}

bool has_stage(const AutoSequence& seq, long long j) { return seq.infinite() || j <= seq.prefix_length(); }

}  // namespace

PhiValue phi_eval(const AutoSequence& seq, const CPoint& z, double tol, int j_max, int basin,
                  long long classify_budget) {
  if (basin < 0 || basin >= static_cast<int>(seq.centers().size())) throw IndexOutOfRange("no such basin");
  const BasinCenter& c = seq.centers()[basin];
  const double radius = 1e3 * (1 + c.cert.p.norm());
  const BasinVerdict v = classify(seq, z, classify_budget, std::max(kDefaultEscapeRadius, radius));
  if (!v.attracted() || v.basin != basin) throw NotInBasin("point is not certified in basin " + std::to_string(basin) +
                                                           ": " + v.describe());
  const CPoint& p = c.cert.p;
  CPoint y = z;
  for (long long j = 1; j <= v.stage; ++j) y = seq.map_at(j).apply(y);
  TailRun run(seq, p, v.stage, y - p);
  double last_inc = std::numeric_limits<double>::infinity();
  for (int it = 0; it < j_max; ++it) {
    if (!has_stage(seq, run.stage + 1)) break;
    const CPoint inc = run.step();
    last_inc = inc.norm();
    if (last_inc <= tol * (1 + run.w.norm())) {
      const CMatrix outer = prefix_inverse(seq, p, c.active_from, v.stage);
      PhiValue out;
      out.value = p + outer * run.w;
      out.achieved_tol = (outer * inc).norm();
      out.entry_stage = v.stage;
      out.last_stage = run.stage;
      return out;
    }
  }
  throw NoConvergenceWithinBudget("limit map increments still " + std::to_string(last_inc) + " after " +
                                  std::to_string(run.stage - v.stage) + " tail stages");
}

PhiDifferential dphi_at_p(const AutoSequence& seq, double h, int basin) {
  if (basin < 0 || basin >= static_cast<int>(seq.centers().size())) throw IndexOutOfRange("no such basin");
  const CPoint& p = seq.centers()[basin].cert.p;
  const int k = p.dim();
  auto central = [&](double step) {
    CMatrix d(k);
    for (int col = 0; col < k; ++col) {
      CPoint e = CPoint::zero(k);
      e[col] = step;
      const CPoint plus = phi_eval(seq, p + e, 1e-16, 4000, basin).value;
      const CPoint minus = phi_eval(seq, p - e, 1e-16, 4000, basin).value;
      for (int row = 0; row < k; ++row) d(row, col) = (plus[row] - minus[row]) / (2.0 * step);
    }
    return d;
  };
  PhiDifferential out;
  out.d_coarse = central(h);
  const CMatrix fine = central(h / 2);
  out.d = CMatrix(k);
  for (int r = 0; r < k; ++r)
    for (int col = 0; col < k; ++col) out.d(r, col) = (4.0 * fine(r, col) - out.d_coarse(r, col)) / 3.0;
  out.richardson_gap = (out.d - out.d_coarse).max_abs();
  return out;
}

nlohmann::json ConvergenceReport::to_json() const {
  return {{"stage_diffs", stage_diffs}, {"fitted_ratio", fitted_ratio}, {"predicted_ratio", predicted_ratio},
          {"observed_R", observed_R},   {"observed_eps", observed_eps}, {"exact", exact},
          {"fit_first", fit_first},     {"fit_last", fit_last},         {"passes", passes()}};
}

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "j,stage_diff\n";
  for (std::size_t j = 0; j < stage_diffs.size(); ++j) os << j << ',' << stage_diffs[j] << '\n';
  return os.str();
}

ConvergenceReport convergence_report(const AutoSequence& seq, int n_samples, int j_max, int basin,
                                     bool throw_on_violation, int tail_starts) {
  if (basin < 0 || basin >= static_cast<int>(seq.centers().size())) throw IndexOutOfRange("no such basin");
  if (j_max < 2 || n_samples < 1) throw InvalidArgument("convergence report needs j_max >= 2 and samples");
  const BasinCenter& c = seq.centers()[basin];
  const ContractionCertificate& cert = c.cert;
  ConvergenceReport rep;
  rep.predicted_ratio = cert.predicted_ratio();
  rep.stage_diffs.assign(j_max, 0.0);
  rep.fit_last = std::min(20, j_max - 1);
  rep.observed_eps = std::numeric_limits<double>::infinity();

  const auto interior = shell_samples(cert.p.dim(), cert.delta, n_samples, 11);
  const auto boundary = sphere_samples(cert.p.dim(), cert.delta, std::max(16, n_samples / 4), 13);
  double w_scale = 0;
  for (int t = 0; t < std::max(1, tail_starts); ++t) {
    const long long k = c.active_from + t;
    if (!has_stage(seq, k + j_max)) break;
    for (const CPoint& v : interior) {
      TailRun run(seq, cert.p, k, cert.frame.metric_inv * v);
      for (int j = 0; j < j_max; ++j) {
        const double d = cert.frame.norm(run.step());
        if (t == 0) rep.stage_diffs[j] = std::max(rep.stage_diffs[j], d);
        rep.observed_R = std::max(rep.observed_R, cert.frame.norm(run.w));
      }
      w_scale = std::max(w_scale, cert.frame.norm(run.w));
    }
    for (const CPoint& v : boundary) {
      TailRun run(seq, cert.p, k, cert.frame.metric_inv * v);
      for (int j = 0; j < j_max; ++j) run.step();
      rep.observed_eps = std::min(rep.observed_eps, cert.frame.norm(run.w));
    }
  }

  // least squares on log differences above the rounding floor
  const double floor = 1e-14 * std::max(w_scale, cert.delta);
  std::vector<std::pair<double, double>> pts;
  for (int j = rep.fit_first; j <= rep.fit_last; ++j)
    if (rep.stage_diffs[j] > floor) pts.emplace_back(j, std::log(rep.stage_diffs[j]));
  if (pts.empty()) {
    rep.exact = true;
  } else if (pts.size() == 1) {
    rep.fitted_ratio = std::exp((pts[0].second - std::log(std::max(rep.stage_diffs[0], floor))) / pts[0].first);
  } else {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    rep.fitted_ratio = std::exp((n * sxy - sx * sy) / (n * sxx - sx * sx));
  }
  if (throw_on_violation && !rep.passes()) throw RatioViolation(rep);
  return rep;
}

nlohmann::json UnionFormulaReport::to_json() const {
  return {{"n_points", n_points},
          {"n_decided", n_decided},
          {"n_attracted", n_attracted},
          {"n_union_members", n_union_members},
          {"n_disagreements", disagreements.size()},
          {"disagreements", disagreements}};
}

std::string UnionFormulaReport::to_csv(const std::vector<CPoint>& grid, const std::vector<BasinVerdict>& verdicts) const {
  std::ostringstream os;
  os.precision(17);
  os << "index,re0,im0,re1,im1,verdict\n";
  for (int i : disagreements) {
    const CPoint& z = grid[i];
    os << i;
    for (int k = 0; k < 2 && k < z.dim(); ++k) os << ',' << z[k].real() << ',' << z[k].imag();
    os << ',' << (i < static_cast<int>(verdicts.size()) ? verdicts[i].describe() : "") << '\n';
  }
  return os.str();
}

UnionFormulaReport union_formula_check(const AutoSequence& seq, const std::vector<CPoint>& grid, long long budget,
                                       double escape_radius, int workers) {
  const auto verdicts = classify_all(seq, grid, budget, escape_radius, workers);
  const auto caps = captures(seq);
  std::vector<char> member(grid.size(), 0);
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    // z lies in F(j)^{-1}(B_delta) iff F(j)(z) lies in B_delta; no escape cut-off here
    CPoint y = grid[i];
    for (long long j = 0; j <= budget && y.finite(); ++j) {
      for (const Capture& cap : caps)
        if (j >= cap.active_from && cap.inside(y)) {
          member[i] = 1;
          return;
        }
      if (!has_stage(seq, j + 1)) return;
      y = seq.map_at(j + 1).apply(y);
    }
  });
  UnionFormulaReport rep;
  rep.n_points = static_cast<int>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rep.n_union_members += member[i];
    if (!verdicts[i].decided()) continue;
    ++rep.n_decided;
    rep.n_attracted += verdicts[i].attracted();
    if (verdicts[i].attracted() != static_cast<bool>(member[i])) rep.disagreements.push_back(static_cast<int>(i));
  }
  return rep;
}

nlohmann::json EquivalenceReport::to_json() const {
  return {{"n_points", n_points}, {"n_compared", n_compared}, {"n_identical", n_identical}, {"fraction", fraction()}};
}

EquivalenceReport sequence_equiv_check(const AutoSequence& a, const AutoSequence& b, const std::vector<CPoint>& grid,
                                       long long budget, double escape_radius) {
  EquivalenceReport rep;
  rep.n_points = static_cast<int>(grid.size());
  const auto va = classify_all(a, grid, budget, escape_radius);
  const auto vb = classify_all(b, grid, budget, escape_radius);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!va[i].decided() || !vb[i].decided()) continue;
    ++rep.n_compared;
    if (va[i].kind == vb[i].kind && va[i].basin == vb[i].basin) ++rep.n_identical;
  }
  return rep;
}

IncreasingLimit::IncreasingLimit(std::vector<StagedMap> suppliers, std::vector<double> rho_schedule,
                                 std::vector<std::vector<CPoint>> forward_sets,
                                 std::vector<std::vector<CPoint>> inverse_sets, double summability_tol)
    : suppliers_(std::move(suppliers)), rho_(std::move(rho_schedule)) {
  const std::size_t n = suppliers_.size();
  if (n < 2) throw InvalidArgument("increasing limit needs at least two suppliers");
  if (rho_.size() != n || forward_sets.size() + 1 < n || inverse_sets.size() + 1 < n)
    throw InvalidArgument("schedule and check sets must cover every stage");
  for (double r : rho_)
    if (!(r > 0)) throw InvalidArgument("rho schedule must be positive");
  // geometric extrapolation from the last ratios
  double q = 0;
  for (std::size_t i = std::max<std::size_t>(1, n >= 4 ? n - 3 : 1); i < n; ++i) q = std::max(q, rho_[i] / rho_[i - 1]);
  if (!(q < 1)) throw InvalidArgument("rho schedule is not summable");
  extrapolated_tail_ = rho_.back() * q / (1 - q);
  if (extrapolated_tail_ > summability_tol) throw InvalidArgument("rho schedule is not summable within tolerance");

  for (std::size_t k = 0; k + 1 < n; ++k) {
    for (const CPoint& z : forward_sets[k]) {
      const double d = distance(suppliers_[k + 1].forward(z), suppliers_[k].forward(z));
      if (!(d < rho_[k + 1]))
        throw SupplierBoundViolated("forward bound fails at stage " + std::to_string(k + 1) + ": " + std::to_string(d));
    }
    for (const CPoint& z : inverse_sets[k]) {
      const double d = distance(suppliers_[k + 1].inverse(z), suppliers_[k].inverse(z));
      if (!(d < rho_[k + 1]))
        throw SupplierBoundViolated("inverse bound fails at stage " + std::to_string(k + 1) + ": " + std::to_string(d));
    }
  }
}

double IncreasingLimit::tail_sum(int j) const {
  double s = extrapolated_tail_;
  for (std::size_t i = static_cast<std::size_t>(j) + 1; i < rho_.size(); ++i) s += rho_[i];
  return s;
}

int IncreasingLimit::stage_for(double tol) const {
  for (int j = 0; j < stages(); ++j)
    if (tail_sum(j) <= tol) return j;
  throw NoConvergenceWithinBudget("schedule tail never drops below the requested tolerance");
}

LimitValue IncreasingLimit::forward(const CPoint& z, double tol) const {
  const int j = stage_for(tol);
  return {suppliers_[j].forward(z), tail_sum(j), j};
}

LimitValue IncreasingLimit::inverse(const CPoint& z, double tol) const {
  const int j = stage_for(tol);
  return {suppliers_[j].inverse(z), tail_sum(j), j};
}

double IncreasingLimit::injectivity_spot_check(const std::vector<CPoint>& samples, double min_sep) const {
  const StagedMap& f = suppliers_.back();
  std::vector<CPoint> images;
  images.reserve(samples.size());
  for (const CPoint& z : samples) images.push_back(f.forward(z));
  long long pairs = 0, ok = 0;
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      if (distance(samples[a], samples[b]) <= min_sep) continue;
      ++pairs;
      ok += distance(images[a], images[b]) > 1e-10;
    }
  return pairs == 0 ? 1.0 : static_cast<double>(ok) / pairs;
}

}  // namespace fbd
