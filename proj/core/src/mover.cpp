#include "fbd/mover.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>

#include "fbd/certificate.hpp"
#include "fbd/sampling.hpp"

namespace fbd {

namespace {

nlohmann::json points_json(const std::vector<CPoint>& pts) {
  nlohmann::json a = nlohmann::json::array();
  for (const CPoint& p : pts) a.push_back(point_to_json(p));
  return a;
}

std::vector<CPoint> points_from(const nlohmann::json& j) {
  std::vector<CPoint> out;
  for (const auto& p : j) out.push_back(point_from_json(p));
  return out;
}

void require_dim2(const CPoint& p, const char* what) {
  if (p.dim() != 2) throw DimensionMismatch(std::string(what) + " must lie in C^2");
}

}  // namespace

void MoveRequest::validate() const {
  if (sources.size() != targets.size()) throw InvalidArgument("sources and targets differ in length");
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  for (const Ball& b : keep) {
    require_dim2(b.center, "keep balls");
    if (!(b.radius > 0)) throw InvalidArgument("keep ball radius must be positive");
  }
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = i + 1; j < keep.size(); ++j)
      if (!(distance(keep[i].center, keep[j].center) > keep[i].radius + keep[j].radius))
        throw InvalidArgument("keep balls must be pairwise disjoint");
  auto off_keep = [&](const CPoint& p, const char* what) {
    require_dim2(p, what);
    for (const Ball& b : keep)
      if (!(distance(p, b.center) > b.radius)) throw InvalidArgument(std::string(what) + " must lie off the keep set");
  };
  for (const CPoint& p : sources) off_keep(p, "sources");
  for (const CPoint& p : targets) off_keep(p, "targets");
  for (const CPoint& p : fixed_points) off_keep(p, "fixed points");
  for (std::size_t i = 0; i < sources.size(); ++i)
    for (std::size_t j = i + 1; j < sources.size(); ++j)
      if (sources[i] == sources[j] || targets[i] == targets[j])
        throw InvalidArgument("sources and targets must be pairwise distinct");
  for (const CPoint& f : fixed_points)
    for (std::size_t i = 0; i < sources.size(); ++i)
      if (f == sources[i] || f == targets[i]) throw InvalidArgument("fixed points must differ from sources and targets");
}

nlohmann::json MoveRequest::to_json() const {
  nlohmann::json balls = nlohmann::json::array();
  for (const Ball& b : keep) balls.push_back({{"center", point_to_json(b.center)}, {"radius", b.radius}});
  return {{"keep", balls},
          {"sources", points_json(sources)},
          {"targets", points_json(targets)},
          {"fixed_points", points_json(fixed_points)},
          {"epsilon", epsilon},
          {"max_degree", max_degree},
          {"max_retries", max_retries},
          {"samples_per_ball", samples_per_ball},
          {"seed", seed},
          {"unitary_retry", unitary_retry}};
}

MoveRequest MoveRequest::from_json(const nlohmann::json& j) {
  MoveRequest r;
  for (const auto& b : j.value("keep", nlohmann::json::array()))
    r.keep.push_back({point_from_json(b.at("center")), b.at("radius").get<double>()});
  r.sources = points_from(j.value("sources", nlohmann::json::array()));
  r.targets = points_from(j.value("targets", nlohmann::json::array()));
  r.fixed_points = points_from(j.value("fixed_points", nlohmann::json::array()));
  r.epsilon = j.value("epsilon", r.epsilon);
  r.max_degree = j.value("max_degree", r.max_degree);
  r.max_retries = j.value("max_retries", r.max_retries);
  r.samples_per_ball = j.value("samples_per_ball", r.samples_per_ball);
  r.seed = j.value("seed", r.seed);
  r.unitary_retry = j.value("unitary_retry", r.unitary_retry);
  return r;
}

void JetRequest::validate() const {
  if (centers.empty()) throw InvalidArgument("jet request needs at least one center");
  if (rho.size() != centers.size() || delta.size() != centers.size())
    throw InvalidArgument("rho and delta lists must match the centers");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    require_dim2(centers[i], "centers");
    if (!(rho[i] > 0) || !(delta[i] > 0)) throw InvalidArgument("rho and delta must be positive");
    if (!(delta_fraction > 0 && delta_fraction <= 1)) throw InvalidArgument("delta_fraction must lie in (0, 1]");
    for (std::size_t k = i + 1; k < centers.size(); ++k)
      if (!(distance(centers[i], centers[k]) > rho[i] + rho[k]))
        throw InvalidArgument("target balls must be pairwise disjoint");
  }
}

nlohmann::json JetRequest::to_json() const {
  return {{"centers", points_json(centers)}, {"rho", rho},         {"delta", delta},
          {"samples_per_ball", samples_per_ball}, {"max_halvings", max_halvings},
          {"seed", seed},                 {"unitary_retry", unitary_retry},
          {"delta_fraction", delta_fraction}};
}

JetRequest JetRequest::from_json(const nlohmann::json& j) {
  JetRequest r;
  r.centers = points_from(j.at("centers"));
  r.rho = j.at("rho").get<std::vector<double>>();
  r.delta = j.at("delta").get<std::vector<double>>();
  r.samples_per_ball = j.value("samples_per_ball", r.samples_per_ball);
  r.max_halvings = j.value("max_halvings", r.max_halvings);
  r.seed = j.value("seed", r.seed);
  r.unitary_retry = j.value("unitary_retry", r.unitary_retry);
  r.delta_fraction = j.value("delta_fraction", r.delta_fraction);
  return r;
}

nlohmann::json MoverResult::diagnostic() const {
  return {{"map", map.to_json()},
          {"sup_error", sup_error},
          {"fresh_sup_error", fresh_sup_error},
          {"damping", damping},
          {"attempts", attempts},
          {"conjugated", conjugated},
          {"rho", rho},
          {"delta", delta},
          {"halvings", halvings}};
}

CMatrix random_unitary(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  std::normal_distribution<double> g;
  CPoint a{cplx(g(rng), g(rng)), cplx(g(rng), g(rng))};
  a *= 1.0 / a.norm();
  // second column: orthogonal complement times a random phase
  const cplx phase = std::polar(1.0, 2 * std::numbers::pi * std::uniform_real_distribution<double>(0, 1)(rng));
  CPoint b{-std::conj(a[1]) * phase, std::conj(a[0]) * phase};
  return CMatrix(2, {a[0], b[0], a[1], b[1]});
}

double identity_deviation(const AutoMap& f, const std::vector<Ball>& balls, int n_per_ball, std::uint64_t seed) {
  double sup = 0;
  for (const Ball& b : balls)
    for (const CPoint& v : shell_samples(2, b.radius, n_per_ball, seed)) {
      const CPoint z = b.center + v;
      sup = std::max(sup, distance(f.apply(z), z));
    }
  return sup;
}

double contractor_deviation(const AutoMap& f, const CPoint& q, double rho, int n, std::uint64_t seed) {
  double sup = 0;
  for (const CPoint& v : shell_samples(q.dim(), rho, n, seed)) {
    // F(q + v) - q - v/2, using the fixed point to keep the difference accurate
    const CPoint dev = f.apply_diff(q, v) + (f.apply(q) - q) - v * 0.5;
    sup = std::max(sup, dev.norm());
  }
  return sup;
}

namespace {

constexpr std::uint64_t kFreshSeedOffset = 0x5EED5EEDULL;

// unitary sending p to (|p|, 0)
CMatrix aligned_unitary(const CPoint& p) {
  const double n = p.norm();
  if (!(n > 0)) return CMatrix::identity(2);
  const cplx a = p[0] / n, b = p[1] / n;
  return CMatrix(2, {std::conj(a), std::conj(b), -b, a});
}

AutoMap conjugate(const AutoMap& core, const CMatrix& u) {
  return AutoMap::compose({AutoMap::linear(u), core, AutoMap::linear(u.adjoint())});
}

struct StepPlan {
  int axis;                 // moved coordinate
  std::vector<cplx> nodes;  // other coordinate of each moving point
  std::vector<cplx> values; // displacement along `axis`
};

struct Infeasible {
  std::string why;
  bool position = true;
};

// Damped shear z_axis += g(z_other) with g = values at nodes, zero at fixed points, and |g| < budget
// on the projected keep discs (enlarged by `spread`).
AutoMap damped_shear(const StepPlan& step, const std::vector<Ball>& keep, const std::vector<CPoint>& fixed,
                     double budget, double spread, int max_degree, int& damping_used) {
  const int other = 1 - step.axis;
  // merge duplicate nodes, drop nodes the roots already silence
  std::vector<cplx> nodes, values;
  for (std::size_t i = 0; i < step.nodes.size(); ++i) {
    bool dup = false;
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k] == step.nodes[i]) {
        if (values[k] != step.values[i]) throw Infeasible{"two moving points share a projection"};
        dup = true;
      }
    if (dup) continue;
    for (const CPoint& f : fixed)
      if (f[other] == step.nodes[i]) {
        if (step.values[i] != cplx(0)) throw Infeasible{"a moving point shares a projection with a fixed point"};
        dup = true;
      }
    if (dup) continue;
    for (const Ball& b : keep)
      if (std::abs(step.nodes[i] - b.center[other]) <= b.radius + spread && step.values[i] != cplx(0))
        throw Infeasible{"a moving point projects into a keep disc"};
    nodes.push_back(step.nodes[i]);
    values.push_back(step.values[i]);
  }
  std::vector<RootFactor> base;
  for (const CPoint& f : fixed) base.push_back({f[other], 1, 1.0});
  const int base_degree = static_cast<int>(fixed.size() + nodes.size()) - 1;
  const std::size_t nk = keep.size(), nn = nodes.size();
  auto build = [&](const std::vector<int>& m) {
    std::vector<RootFactor> roots = base;
    for (std::size_t k = 0; k < nk; ++k)
      if (m[k] > 0) roots.push_back({keep[k].center[other], m[k], 1.0 / (keep[k].radius + spread)});
    return Poly::damped_interpolate(roots, nodes, values);
  };
  auto verify = [&](const Poly& g) {
    double sup = 0;
    for (const Ball& kb : keep)
      for (int i = 0; i < 256; ++i) {
        const cplx w = kb.center[other] + std::polar(kb.radius + spread, 2 * std::numbers::pi * i / 256);
        sup = std::max(sup, std::abs(g(w)));
      }
    return sup;
  };
  if (nk == 0) {
    Poly g = build({});
    return AutoMap::shear(2, step.axis, other, std::move(g));
  }

  // log-bound of |g| on the disc circles: sum_i |v_i l_i(x)| prod_k (|x - c_k| / |x_i - c_k|)^m_k
  constexpr int kEst = 64;
  std::vector<double> lead;               // [x][i]
  std::vector<double> ratio;              // [x][i][k]
  const std::size_t nx = nk * kEst;
  lead.resize(nx * nn);
  ratio.resize(nx * nn * nk);
  for (std::size_t l = 0; l < nk; ++l)
    for (int t = 0; t < kEst; ++t) {
      const std::size_t x = l * kEst + t;
      const cplx w = keep[l].center[other] + std::polar(keep[l].radius + spread, 2 * std::numbers::pi * t / kEst);
      for (std::size_t i = 0; i < nn; ++i) {
        cplx li = values[i];
        for (std::size_t q = 0; q < nn; ++q)
          if (q != i) li *= (w - nodes[q]) / (nodes[i] - nodes[q]);
        double lg = std::log(std::abs(li) + 1e-300);
        for (const CPoint& f : fixed) lg += std::log(std::abs(w - f[other]) / std::abs(nodes[i] - f[other]));
        lead[x * nn + i] = lg;
        for (std::size_t k = 0; k < nk; ++k)
          ratio[(x * nn + i) * nk + k] =
              std::log(std::abs(w - keep[k].center[other])) - std::log(std::abs(nodes[i] - keep[k].center[other]));
      }
    }
  // returns the worst disc bound; `total` gets the sum of the per-disc bounds
  auto estimate = [&](const std::vector<int>& m, double& total) {
    double worst = 0;
    total = 0;
    for (std::size_t l = 0; l < nk; ++l) {
      double disc = 0;
      for (std::size_t x = l * kEst; x < (l + 1) * kEst; ++x) {
        double sum = 0;
        for (std::size_t i = 0; i < nn; ++i) {
          double lg = lead[x * nn + i];
          for (std::size_t k = 0; k < nk; ++k) lg += m[k] * ratio[(x * nn + i) * nk + k];
          sum += std::exp(lg);
        }
        disc = std::max(disc, sum);
      }
      worst = std::max(worst, disc);
      total += disc;
    }
    return worst;
  };

  // greedy: raise the multiplicity that lowers the estimate most, verify on the real polynomial
  std::vector<int> m(nk, 0);
  int degree = base_degree;
  double total = 0;
  double est = estimate(m, total);
  while (degree <= max_degree) {
    if (est < budget) {
      Poly g = build(m);
      if (verify(g) < budget) {
        damping_used = std::max(damping_used, *std::max_element(m.begin(), m.end()));
        return AutoMap::shear(2, step.axis, other, std::move(g));
      }
    }
    if (degree == max_degree) break;
    std::size_t pick = 0;
    double pick_total = std::numeric_limits<double>::infinity(), pick_est = 0;
    for (std::size_t k = 0; k < nk; ++k) {
      ++m[k];
      double t = 0;
      const double e = estimate(m, t);
      --m[k];
      if (t < pick_total) {
        pick_total = t;
        pick_est = e;
        pick = k;
      }
    }
    ++m[pick];
    ++degree;
    est = pick_est;
  }
  throw Infeasible{"damping degree cap reached", false};
}

}  // namespace

MoverResult build_point_mover_ex(const MoveRequest& req) {
  req.validate();
  MoverResult best;
  best.sup_error = std::numeric_limits<double>::infinity();
  bool moves = false;
  for (std::size_t i = 0; i < req.sources.size(); ++i) moves |= !(req.sources[i] == req.targets[i]);
  if (!moves) {
    best.sup_error = best.fresh_sup_error = 0;
    return best;
  }
  std::string last_failure = "no attempt made";
  bool position_trouble = false;
  std::mt19937_64 rng(req.seed + 7);
  for (int attempt = 0; attempt <= req.max_retries; ++attempt) {
    // attempts cycle through axis order and near/far waypoints, then repeat in random unitary frames
    const bool conj = req.unitary_retry && attempt >= 4;
    // the first two rotated attempts put the first source on a coordinate axis
    const CMatrix u = !conj ? CMatrix::identity(2)
                      : attempt < 6 ? aligned_unitary(req.sources.front())
                                    : random_unitary(req.seed + 31 * attempt);
    auto tr = [&](const CPoint& p) { return u * p; };
    std::vector<CPoint> src, dst, fixed;
    std::vector<Ball> keep;
    for (const CPoint& p : req.sources) src.push_back(tr(p));
    for (const CPoint& p : req.targets) dst.push_back(tr(p));
    for (const CPoint& p : req.fixed_points) fixed.push_back(tr(p));
    for (const Ball& b : req.keep) keep.push_back({tr(b.center), b.radius});

    const int a = attempt % 2, b = 1 - a;
    // waypoints on axis a: the targets themselves, or random points outside every keep disc
    const bool far = (attempt / 2) % 2 == 1 || attempt >= 4;
    double reach = 1;
    for (const Ball& kb : keep) reach = std::max(reach, std::abs(kb.center[a]) + kb.radius);
    std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
    std::vector<cplx> way(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
      way[i] = far ? std::polar(reach * (1.5 + 0.25 * attempt + 0.1 * static_cast<double>(i)), angle(rng)) : dst[i][a];
    std::vector<StepPlan> steps(3);
    steps[0].axis = a;
    steps[1].axis = b;
    steps[2].axis = a;
    for (std::size_t i = 0; i < src.size(); ++i) {
      steps[0].nodes.push_back(src[i][b]);
      steps[0].values.push_back(way[i] - src[i][a]);
      steps[1].nodes.push_back(way[i]);
      steps[1].values.push_back(dst[i][b] - src[i][b]);
      steps[2].nodes.push_back(dst[i][b]);
      steps[2].values.push_back(dst[i][a] - way[i]);
    }
    int nontrivial = 0;
    for (const StepPlan& s : steps)
      nontrivial += std::any_of(s.values.begin(), s.values.end(), [](cplx v) { return v != cplx(0); });
    const double budget = req.epsilon / (kFreshSampleMargin * std::max(1, nontrivial));

    MoverResult cand;
    cand.attempts = attempt + 1;
    cand.conjugated = conj;
    try {
      std::vector<AutoMap> parts;
      double spread = 0;
      for (const StepPlan& s : steps) {
        if (std::all_of(s.values.begin(), s.values.end(), [](cplx v) { return v == cplx(0); })) continue;
        parts.push_back(damped_shear(s, keep, fixed, budget, spread, req.max_degree, cand.damping));
        spread += budget;
      }
      AutoMap core = parts.size() == 1 ? parts[0] : AutoMap::compose(parts);
      cand.map = conj ? conjugate(core, u) : core;
    } catch (const Infeasible& e) {
      last_failure = e.why;
      position_trouble |= e.position;
      continue;
    } catch (const GeneralPositionViolated& e) {
      last_failure = e.what();
      position_trouble = true;
      continue;
    }

    // a posteriori verification
    bool ok = true;
    for (std::size_t i = 0; i < req.sources.size() && ok; ++i)
      ok = distance(cand.map.apply(req.sources[i]), req.targets[i]) <= 1e-9 * (1 + req.targets[i].norm());
    if (!ok) {
      last_failure = "a source missed its target by more than 1e-9";
      continue;
    }
    for (const CPoint& f : req.fixed_points)
      ok = ok && distance(cand.map.apply(f), f) <= (conj ? 1e-12 : 0.0) * (1 + f.norm());
    if (!ok) {
      last_failure = "a fixed point moved";
      continue;
    }
    cand.sup_error = identity_deviation(cand.map, req.keep, req.samples_per_ball, req.seed);
    cand.fresh_sup_error = identity_deviation(cand.map, req.keep, req.samples_per_ball, req.seed + kFreshSeedOffset);
    if (cand.sup_error < req.epsilon && cand.fresh_sup_error * kFreshSampleMargin < req.epsilon) return cand;
    last_failure = "sampled deviation on the keep set too large";
    if (cand.sup_error < best.sup_error) best = cand;
  }
  if (position_trouble && !req.unitary_retry && best.sup_error == std::numeric_limits<double>::infinity())
    throw GeneralPositionViolated("mover needs distinct projections: " + last_failure);
  throw MoverFailed("point mover failed after " + std::to_string(req.max_retries + 1) + " attempts (" + last_failure +
                    "); diagnostic: " + best.diagnostic().dump());
}

AutoMap build_point_mover(const MoveRequest& req) { return build_point_mover_ex(req).map; }

namespace {

bool general_position(const std::vector<CPoint>& c, double tol) {
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t k = i + 1; k < c.size(); ++k)
      if (std::abs(c[i][0] - c[k][0]) <= tol || std::abs(c[i][1] - c[k][1]) <= tol) return false;
  return true;
}

double projection_separation(const std::vector<CPoint>& c) {
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t k = i + 1; k < c.size(); ++k)
      sep = std::min({sep, std::abs(c[i][0] - c[k][0]), std::abs(c[i][1] - c[k][1])});
  return sep;
}

AutoMap two_layer_contractor(const std::vector<CPoint>& c) {
  std::vector<cplx> a, b, ha, hb, zero(c.size(), 0.0);
  for (const CPoint& q : c) {
    a.push_back(q[0]);
    b.push_back(q[1]);
    ha.push_back(q[0] * 0.5);
    hb.push_back(q[1] * 0.5);
  }
  const Poly h = Poly::constant(-std::numbers::ln2);
  // z -> z/2 + g1(w) with g1 = a_i/2, g1' = 0 at b_i; then w -> w/2 + g2(z) likewise
  const AutoMap first = AutoMap::overshear(2, 0, 1, h, Poly::hermite(b, ha, zero));
  const AutoMap second = AutoMap::overshear(2, 1, 0, h, Poly::hermite(a, hb, zero));
  return AutoMap::compose({first, second});
}

}  // namespace

MoverResult build_multicenter_contractor_ex(const JetRequest& req, double epsilon) {
  req.validate();
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  MoverResult res;
  res.rho = req.rho;
  res.delta = req.delta;
  res.attempts = 1;
  if (req.centers.size() == 1) {
    const CPoint& q = req.centers[0];
    res.map = q.norm() == 0 ? AutoMap::half_scale(2) : AutoMap::affine(CMatrix::scalar(2, 0.5), q * 0.5);
    return res;
  }
  double scale = 0;
  for (const CPoint& q : req.centers) scale = std::max(scale, q.norm());
  const double tol = 1e-9 * (1 + scale);
  AutoMap map = AutoMap::identity(2);
  if (!req.unitary_retry) {
    if (!general_position(req.centers, tol)) throw GeneralPositionViolated("centers share an axis projection");
    map = two_layer_contractor(req.centers);
  } else {
    // pick the frame whose axis projections are farthest apart
    double best = projection_separation(req.centers);
    CMatrix best_u = CMatrix::identity(2);
    bool rotated_best = false;
    for (int t = 0; t < 32; ++t) {
      const CMatrix u = random_unitary(req.seed + 101 * t);
      std::vector<CPoint> rotated;
      for (const CPoint& q : req.centers) rotated.push_back(u * q);
      const double sep = projection_separation(rotated);
      if (sep > 1.25 * best) {
        best = sep;
        best_u = u;
        rotated_best = true;
        res.attempts = t + 1;
      }
    }
    if (best <= 1e-3 * (1 + scale) && !general_position(req.centers, tol))
      throw GeneralPositionViolated("no unitary frame separates the center projections");
    if (rotated_best) {
      std::vector<CPoint> rotated;
      for (const CPoint& q : req.centers) rotated.push_back(best_u * q);
      map = conjugate(two_layer_contractor(rotated), best_u);
      res.conjugated = true;
    } else {
      map = two_layer_contractor(req.centers);
    }
  }
  res.map = map;

  for (std::size_t i = 0; i < req.centers.size(); ++i) {
    if (distance(map.apply(req.centers[i]), req.centers[i]) > 1e-12 * (1 + req.centers[i].norm()))
      throw MoverFailed("contractor does not fix a center; diagnostic: " + res.diagnostic().dump());
  }
  // shrink each radius until the second-order error clears both epsilon and delta(rho)
  for (std::size_t i = 0; i < req.centers.size(); ++i) {
    for (;;) {
      const double bound = std::min(epsilon, req.delta_fraction * res.delta[i]);
      const double e = contractor_deviation(map, req.centers[i], res.rho[i], req.samples_per_ball, req.seed);
      const double f = contractor_deviation(map, req.centers[i], res.rho[i], req.samples_per_ball,
                                            req.seed + kFreshSeedOffset);
      if (e < bound && f * kFreshSampleMargin < bound) {
        res.sup_error = std::max(res.sup_error, e);
        res.fresh_sup_error = std::max(res.fresh_sup_error, f);
        break;
      }
      if (res.halvings >= req.max_halvings * static_cast<int>(req.centers.size()))
        throw MoverFailed("contractor error does not clear epsilon after halving; diagnostic: " +
                          res.diagnostic().dump());
      res.rho[i] *= 0.5;
      res.delta[i] *= 0.5;
      ++res.halvings;
    }
  }
  return res;
}

AutoMap build_multicenter_contractor(const JetRequest& req, double epsilon) {
  return build_multicenter_contractor_ex(req, epsilon).map;
}

}  // namespace fbd
