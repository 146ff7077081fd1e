#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fbd/certificate.hpp"
#include "fbd/constructions.hpp"
#include "fbd/sampling.hpp"

namespace fbd {

namespace {

constexpr double kCertRadius = 0.5;
constexpr double kExpelSeparation = 1.05;

AutoSequence origin_sequence(std::vector<AutoMap> maps, const AutoMap& tail) {
  return AutoSequence(std::move(maps), {tail}, {{half_scale_certificate(CPoint::zero(2), kCertRadius), 0}});
}

CPoint apply_all(const std::vector<AutoMap>& maps, CPoint z) {
  for (const AutoMap& f : maps) z = f.apply(z);
  return z;
}

double van_der_corput(unsigned n) {
  double x = 0, f = 0.5;
  for (; n; n >>= 1, f *= 0.5)
    if (n & 1) x += f;
  return x;
}

}  // namespace

AutoMap henon_like_tail(double kappa) {
  if (!(kappa > 0)) throw InvalidArgument("kappa must be positive");
  return AutoMap::compose({AutoMap::shear(2, 0, 1, Poly::dense({0, 0, kappa})),
                           AutoMap::shear(2, 1, 0, Poly::dense({0, 0, kappa})), AutoMap::half_scale(2)});
}

AutoMap TuckResult::composed() const { return factors.size() == 1 ? factors[0] : AutoMap::compose(factors); }

nlohmann::json TuckResult::to_json() const {
  return {{"s", s}, {"keep_radius", keep_radius}, {"mover_error", mover_error}, {"damping", damping},
          {"factors", factors.size()}};
}

TuckResult tuck_step_ex(const std::vector<CPoint>& anchors, int s, const std::vector<CPoint>& expel,
                        double expel_radius, double mu, std::uint64_t seed, int samples,
                        const std::vector<CPoint>& protect) {
  if (anchors.empty()) throw InvalidArgument("tuck needs at least one anchor");
  if (!(mu > 0)) throw InvalidArgument("mu must be positive");
  TuckResult out;
  double reach = 0, guard = 0;
  for (const CPoint& a : anchors) {
    if (!a.finite()) throw InvalidArgument("anchor is not finite");
    reach = std::max(reach, a.norm());
  }
  for (const CPoint& a : protect) {
    if (!a.finite()) throw InvalidArgument("protected point is not finite");
    guard = std::max(guard, a.norm());
  }
  out.keep_radius = std::max(std::max(reach, guard) * 1.1, 1e-6);
  if (s < 0) {
    s = 1;
    while ((reach * 1.1 + mu) * std::ldexp(1.0, -s) >= 0.95) ++s;
  }
  out.s = s;
  MoveRequest mr;
  mr.keep = {{CPoint::zero(2), out.keep_radius}};
  const double push = expel_radius * std::ldexp(1.0, s);
  for (const CPoint& e : expel) {
    if (!e.finite()) continue;
    if (!(e.norm() > out.keep_radius * kExpelSeparation))
      throw InvalidArgument("expel point lies inside the anchors' ball hull");
    if (e.norm() >= push) {
      mr.fixed_points.push_back(e);  // already far enough; held exactly by a root of every shear
      continue;
    }
    mr.sources.push_back(e);
    mr.targets.push_back(e * (std::max(e.norm(), push) / e.norm()));
  }
  mr.epsilon = mu;
  mr.seed = seed;
  mr.samples_per_ball = samples;
  mr.unitary_retry = true;
  MoverResult m;
  try {
    m = build_point_mover_ex(mr);
  } catch (const Error& e) {
    throw MoverFailed(std::string(e.what()) + "; tuck request: " + mr.to_json().dump());
  }
  out.mover_error = m.sup_error;
  out.damping = m.damping;
  const AutoMap a = AutoMap::half_scale(2);
  if (s == 0) {
    out.factors = {m.map};
  } else {
    out.factors = {AutoMap::compose({m.map, a})};
    for (int i = 1; i < s; ++i) out.factors.push_back(a);
  }
  const AutoMap all = out.composed();
  for (const CPoint& x : anchors)
    if (s > 0 && !(all.apply(x).norm() < 1)) throw MoverFailed("tucked anchor left the unit ball");
  return out;
}

AutoMap tuck_step(const std::vector<CPoint>& anchors, int s, const std::vector<CPoint>& expel, double expel_radius,
                  double mu, std::uint64_t seed) {
  return tuck_step_ex(anchors, s, expel, expel_radius, mu, seed).composed();
}

void LineSpec::validate() const {
  if (origin.dim() != 2 || direction.dim() != 2) throw DimensionMismatch("lines live in C^2");
  if (!(direction.norm() > 1e-12)) throw InvalidArgument("line direction must be nonzero");
}

void VarietySpec::validate() const {
  if (!(unit > 0)) throw InvalidArgument("variety unit must be positive");
  if (kind == "axis") {
    if (axis != 0 && axis != 1) throw InvalidArgument("axis must be 0 or 1");
    return;
  }
  if (kind != "curve") throw InvalidArgument("variety kind must be axis or curve");
  if (x.size() < 2 && y.size() < 2) throw InvalidArgument("curve parametrization is constant");
  // sampled injectivity on the unit-radius parameter disc
  std::vector<cplx> ts;
  for (int i = 0; i < 12; ++i)
    for (int k = 1; k <= 4; ++k) ts.push_back(std::polar(unit * k / 4.0, 2 * std::numbers::pi * i / 12));
  ts.push_back(0);
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t k = i + 1; k < ts.size(); ++k)
      if (distance(at(ts[i]), at(ts[k])) < 1e-9 * std::abs(ts[i] - ts[k]))
        throw InvalidArgument("curve parametrization is not injective on the sampled range");
}

CPoint VarietySpec::at(cplx t) const {
  if (kind == "axis") return axis == 0 ? CPoint{t, 0.0} : CPoint{0.0, t};
  auto horner = [t](const std::vector<cplx>& c) {
    cplx v = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
    return v;
  };
  return CPoint{horner(x), horner(y)};
}

std::vector<CPoint> variety_compact_samples(const VarietySpec& v, double radius, int n) {
  std::vector<CPoint> out;
  const int rings = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n) / 2)));
  const int per_ring = std::max(4, n / rings);
  out.push_back(v.at(0));
  for (int r = 1; r <= rings; ++r)
    for (int k = 0; k < per_ring; ++k) {
      const cplx t = std::polar(radius * r / rings, 2 * std::numbers::pi * (k + 0.5 * (r % 2)) / per_ring);
      const CPoint p = v.at(t);
      if (v.kind == "axis" || p.norm() <= radius) out.push_back(p);
    }
  return out;
}

// ---------------------------------------------------------------------------------------------

void LinesConfig::validate() const {
  if (lines.empty() || lines.size() > 3) throw InvalidArgument("between one and three lines");
  for (const LineSpec& l : lines) l.validate();
  if (stages < 1 || stages > 10) throw InvalidArgument("stages must lie in [1, 10]");
  if (!(param_extent > 0) || hull_resolution < 2) throw InvalidArgument("parameter plane settings out of range");
  if (!(expel_radius > 2)) throw InvalidArgument("expel radius must exceed 2");
  if (!(lines[0].origin.norm() < 2 - 1e-9)) throw InvalidArgument("the first line must meet the ball of radius 2");
}

nlohmann::json LinesConfig::to_json() const {
  nlohmann::json ls = nlohmann::json::array();
  for (const LineSpec& l : lines) ls.push_back({{"origin", point_to_json(l.origin)}, {"direction", point_to_json(l.direction)}});
  return {{"lines", ls},         {"stages", stages}, {"seed", seed}, {"param_extent", param_extent},
          {"hull_resolution", hull_resolution}, {"expel_radius", expel_radius}, {"mu", mu}, {"kappa", kappa}};
}

LinesConfig LinesConfig::from_json(const nlohmann::json& j) {
  LinesConfig c;
  for (const auto& l : j.at("lines")) c.lines.push_back({point_from_json(l.at("origin")), point_from_json(l.at("direction"))});
  c.stages = j.value("stages", c.stages);
  c.seed = j.value("seed", c.seed);
  c.param_extent = j.value("param_extent", c.param_extent);
  c.hull_resolution = j.value("hull_resolution", c.hull_resolution);
  c.expel_radius = j.value("expel_radius", c.expel_radius);
  c.mu = j.value("mu", c.mu);
  c.kappa = j.value("kappa", c.kappa);
  c.validate();
  return c;
}

std::vector<cplx> line_schedule(int count, double extent) {
  std::vector<cplx> out;
  for (int l = 0; l < count; ++l) out.push_back(extent * (2 * van_der_corput(static_cast<unsigned>(l) + 1) - 1));
  return out;
}

namespace {

// number of scheduled points line k (0-based) carries after `stage` maps
int scheduled(int stage, int k) { return stage - k; }

}  // namespace

LinesResult build_line_intersector(const LinesConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(cfg.lines.size());
  const double margin = 0.5;
  const BBox box{-cfg.param_extent - margin, -cfg.param_extent - margin, cfg.param_extent + margin,
                 cfg.param_extent + margin};
  std::vector<AutoMap> maps{AutoMap::half_scale(2)};
  std::vector<CPoint> q;  // one per active line
  nlohmann::json log = nlohmann::json::array();

  auto choose_q = [&](int k, int stage) {
    std::mt19937_64 rng(cfg.seed * 7919ULL + static_cast<std::uint64_t>(k));
    std::uniform_real_distribution<double> re(-cfg.param_extent, cfg.param_extent), im(0.4, 1.0);
    const ComplexLine line = cfg.lines[k].line();
    // off the real schedule segment, searching further out as candidates fail
    for (int tries = 0; tries < 512; ++tries) {
      const double reach = cfg.param_extent * (1 + tries / 16.0);
      const cplx t(re(rng), (tries % 2 ? -1.0 : 1.0) * reach * im(rng));
      const CPoint z = line.at(t);
      if (!(apply_all(maps, z).norm() > 4)) continue;
      // keep a few hull cells of clearance on the line
      bool clear = true;
      for (int a = 0; a < 8 && clear; ++a)
        clear = apply_all(maps, line.at(t + std::polar(3.0 / cfg.hull_resolution, a * std::numbers::pi / 4))).norm() > 1;
      if (clear) return z;
    }
    throw StageFailed(stage, "no excluded point on line " + std::to_string(k) + " stays outside the ball");
  };
  q.push_back(choose_q(0, 1));

  for (int j = 1; j < cfg.stages; ++j) {
    const int next = j + 1;
    for (int k = 0; k < std::min(n, next); ++k) {
      const ComplexLine line = cfg.lines[k].line();
      const std::vector<cplx> sched = line_schedule(scheduled(next, k), cfg.param_extent);
      const cplx t_new = sched.back(), t_first = sched.front();
      try {
       for (int refine = 0;; ++refine) {
        const int res = cfg.hull_resolution << refine;
        PlanarCompact kk(box, res);
        for (int y = 0; y < kk.height(); ++y)
          for (int x = 0; x < kk.width(); ++x) {
            const Cell c{x, y};
            if (apply_all(maps, line.at(kk.center_of(c))).norm() <= 1) kk.set(c);
          }
        for (int x = 0; x < kk.width(); ++x) kk.set({x, 0}, false), kk.set({x, kk.height() - 1}, false);
        for (int y = 0; y < kk.height(); ++y) kk.set({0, y}, false), kk.set({kk.width() - 1, y}, false);
        kk.set(kk.cell_of(t_new));
        kk.set(kk.cell_of(t_first));
        std::vector<cplx> qs;
        for (const CPoint& qi : q) {
          const cplx tq = line.parameter(qi);
          if (distance(line.at(tq), qi) < 1e-9 * (1 + qi.norm())) qs.push_back(tq);
        }
        nlohmann::json entry = {{"stage", next}, {"line", k}, {"points", sched.size()}};
        PlanarCompact kp = kk;
        if (sched.size() >= 2) {
          ConnectResult cr;
          try {
            cr = connect_avoiding_ex(kk, t_new, t_first, qs);
          } catch (const QTooCloseToK&) {
            if (refine < 2) continue;
            throw;
          } catch (const NoPathAtResolution&) {
            if (refine < 2) continue;
            throw;
          }
          kp = cr.k;
          entry["resolution"] = res;
          entry["path_cells"] = cr.path.size();
          entry["excised_runs"] = cr.excised_runs;
          entry["hulled_input"] = cr.hulled_input;
          entry["unchanged"] = cr.unchanged;
          entry["excluded_on_line"] = qs.size();
        }
        std::vector<CPoint> anchors{CPoint{1.0, 0.0}};
        for (std::size_t i = 0; i < kp.mask().size(); ++i)
          if (kp.mask()[i]) anchors.push_back(apply_all(maps, line.at(kp.center_of(kp.cell_at(i)))));
        std::vector<CPoint> expel;
        for (const CPoint& qi : q) expel.push_back(apply_all(maps, qi));
        const TuckResult tr = tuck_step_ex(anchors, -1, expel, cfg.expel_radius, cfg.mu,
                                           cfg.seed + 101 * static_cast<std::uint64_t>(next) + k);
        for (const AutoMap& f : tr.factors) maps.push_back(f);
        entry["tuck"] = tr.to_json();
        entry["hull_evidence"] = "raster hull; excluded points out of the 2D hull is evidence, not proof";
        log.push_back(entry);
        for (const cplx t : sched)
          if (!(apply_all(maps, line.at(t)).norm() < 1))
            throw StageFailed(next, "scheduled point left outside the ball on line " + std::to_string(k));
        for (const CPoint& qi : q)
          if (!(apply_all(maps, qi).norm() > 1)) throw StageFailed(next, "excluded point drawn into the ball");
        break;
       }
      } catch (const StageFailed&) {
        throw;
      } catch (const NoPathAtResolution&) {
        throw;
      } catch (const Error& e) {
        throw StageFailed(next, std::string("line ") + std::to_string(k) + ": " + e.what());
      }
    }
    if (next <= n) q.push_back(choose_q(next - 1, next));
  }
  LinesResult res{origin_sequence(maps, henon_like_tail(cfg.kappa)), q, log};
  return res;
}

bool ConnectivityReport::passes() const {
  for (int r : runs)
    if (r != 1) return false;
  for (bool ok : excluded_ok)
    if (!ok) return false;
  return true;
}

nlohmann::json ConnectivityReport::to_json() const {
  return {{"runs", runs}, {"attracted", attracted}, {"excluded_ok", excluded_ok}, {"passes", passes()}};
}

ConnectivityReport line_connectivity(const LinesResult& r, const LinesConfig& cfg, int samples, long long budget,
                                     int workers) {
  ConnectivityReport rep;
  for (std::size_t k = 0; k < cfg.lines.size(); ++k) {
    const int count = scheduled(cfg.stages, static_cast<int>(k));
    if (count < 1) continue;
    const std::vector<cplx> sched = line_schedule(count, cfg.param_extent);
    double lo = 0, hi = 0;
    for (cplx t : sched) lo = std::min(lo, t.real()), hi = std::max(hi, t.real());
    std::vector<CPoint> pts;
    for (int i = 0; i < samples; ++i)
      pts.push_back(cfg.lines[k].line().at(samples == 1 ? lo : lo + (hi - lo) * i / (samples - 1)));
    const std::vector<BasinVerdict> v = classify_all(r.sequence, pts, budget, kDefaultEscapeRadius, workers);
    int runs = 0;
    long long hits = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      hits += v[i].attracted();
      if (v[i].attracted() && (i == 0 || !v[i - 1].attracted())) ++runs;
    }
    rep.runs.push_back(runs);
    rep.attracted.push_back(hits);
  }
  for (const CPoint& qi : r.excluded) {
    const BasinVerdict v = classify(r.sequence, qi, budget);
    rep.excluded_ok.push_back(v.decided() && !v.attracted());
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------

void VarietiesConfig::validate() const {
  if (varieties.empty() || varieties.size() > 3) throw InvalidArgument("between one and three varieties");
  for (const VarietySpec& v : varieties) v.validate();
  if (stages < 1 || stages > 10) throw InvalidArgument("stages must lie in [1, 10]");
  if (excluded.dim() != 2) throw DimensionMismatch("excluded point lives in C^2");
  if (!(excluded.norm() > 2)) throw InvalidArgument("excluded point must lie outside the closed ball of radius 2");
  for (const VarietySpec& v : varieties) {
    if (v.kind == "axis" && std::abs(excluded[1 - v.axis]) < 1e-9)
      throw InvalidArgument("excluded point lies on a variety");
    if (v.kind == "curve")
      for (const CPoint& p : variety_compact_samples(v, 2 * excluded.norm(), 4096))
        if (distance(p, excluded) < 1e-6) throw InvalidArgument("excluded point lies on a variety");
  }
  if (samples_per_compact < 4 || !(expel_radius > 2)) throw InvalidArgument("sampling settings out of range");
}

nlohmann::json VarietiesConfig::to_json() const {
  nlohmann::json vs = nlohmann::json::array();
  for (const VarietySpec& v : varieties) {
    nlohmann::json e = {{"kind", v.kind}, {"unit", v.unit}};
    if (v.kind == "axis") e["axis"] = v.axis;
    else {
      auto coeffs = [](const std::vector<cplx>& c) {
        nlohmann::json a = nlohmann::json::array();
        for (cplx z : c) a.push_back({z.real(), z.imag()});
        return a;
      };
      e["x"] = coeffs(v.x);
      e["y"] = coeffs(v.y);
    }
    vs.push_back(e);
  }
  return {{"varieties", vs}, {"excluded", point_to_json(excluded)}, {"stages", stages}, {"seed", seed},
          {"samples_per_compact", samples_per_compact}, {"expel_radius", expel_radius}, {"mu", mu}, {"kappa", kappa}};
}

VarietiesConfig VarietiesConfig::from_json(const nlohmann::json& j) {
  VarietiesConfig c;
  for (const auto& e : j.at("varieties")) {
    VarietySpec v;
    v.kind = e.value("kind", v.kind);
    v.axis = e.value("axis", v.axis);
    v.unit = e.value("unit", v.unit);
    auto coeffs = [](const nlohmann::json& a) {
      std::vector<cplx> out;
      for (const auto& z : a) out.push_back(z.is_array() ? cplx(z.at(0).get<double>(), z.at(1).get<double>())
                                                         : cplx(z.get<double>(), 0));
      return out;
    };
    if (e.contains("x")) v.x = coeffs(e.at("x"));
    if (e.contains("y")) v.y = coeffs(e.at("y"));
    c.varieties.push_back(v);
  }
  if (j.contains("excluded")) c.excluded = point_from_json(j.at("excluded"));
  c.stages = j.value("stages", c.stages);
  c.seed = j.value("seed", c.seed);
  c.samples_per_compact = j.value("samples_per_compact", c.samples_per_compact);
  c.expel_radius = j.value("expel_radius", c.expel_radius);
  c.mu = j.value("mu", c.mu);
  c.kappa = j.value("kappa", c.kappa);
  c.validate();
  return c;
}

namespace {

// radius of the compact variety k (0-based) carries after `stage` maps: K^{k+1}_{stage-k}
double compact_radius(const VarietySpec& v, int stage, int k) { return v.unit * (stage - k); }

}  // namespace

VarietiesResult build_variety_container(const VarietiesConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(cfg.varieties.size());
  std::vector<AutoMap> maps{AutoMap::half_scale(2)};
  nlohmann::json log = nlohmann::json::array();
  for (const CPoint& x : variety_compact_samples(cfg.varieties[0], compact_radius(cfg.varieties[0], 1, 0), 4 * cfg.samples_per_compact))
    if (!(apply_all(maps, x).norm() < 1)) throw StageFailed(1, "the first compact is not inside the ball after A");
  if (!(apply_all(maps, cfg.excluded).norm() > 1)) throw StageFailed(1, "excluded point inside the ball after A");

  for (int j = 1; j < cfg.stages; ++j) {
    const int next = j + 1;
    try {
      std::vector<CPoint> anchors{CPoint{1.0, 0.0}};
      for (int k = 0; k < std::min(n, next); ++k)
        for (const CPoint& x : variety_compact_samples(cfg.varieties[k], compact_radius(cfg.varieties[k], next, k),
                                                       cfg.samples_per_compact))
          anchors.push_back(apply_all(maps, x));
      // the mover also stays near the identity on the compacts later stages will tuck
      std::vector<CPoint> protect;
      for (int k = 0; k < std::min(n, cfg.stages); ++k)
        for (const CPoint& x : variety_compact_samples(cfg.varieties[k], compact_radius(cfg.varieties[k], cfg.stages, k),
                                                       cfg.samples_per_compact))
          protect.push_back(apply_all(maps, x));
      const TuckResult tr = tuck_step_ex(anchors, -1, {apply_all(maps, cfg.excluded)}, cfg.expel_radius, cfg.mu,
                                         cfg.seed + 211 * static_cast<std::uint64_t>(next), 4000, protect);
      for (const AutoMap& f : tr.factors) maps.push_back(f);
      // dense re-check on an offset lattice of each compact
      long long dense = 0;
      for (int k = 0; k < std::min(n, next); ++k)
        for (const CPoint& x : variety_compact_samples(cfg.varieties[k], compact_radius(cfg.varieties[k], next, k),
                                                       4 * cfg.samples_per_compact + 3)) {
          ++dense;
          if (!(apply_all(maps, x).norm() < 1))
            throw StageFailed(next, "compact of variety " + std::to_string(k) + " not tucked into the ball");
        }
      const double pn = apply_all(maps, cfg.excluded).norm();
      if (!(pn > 1)) throw StageFailed(next, "excluded point drawn into the ball");
      nlohmann::json entry = tr.to_json();
      entry["stage"] = next;
      entry["anchors"] = anchors.size();
      entry["dense_checked"] = dense;
      entry["excluded_norm"] = pn;
      log.push_back(entry);
    } catch (const StageFailed&) {
      throw;
    } catch (const Error& e) {
      throw StageFailed(next, e.what());
    }
  }
  return {origin_sequence(maps, henon_like_tail(cfg.kappa)), log};
}

nlohmann::json ContainmentReport::to_json() const {
  return {{"sampled", sampled},
          {"attracted", attracted},
          {"excluded_attracted", excluded_attracted},
          {"excluded_verdict", excluded_verdict.describe()},
          {"passes", passes()}};
}

ContainmentReport variety_containment(const VarietiesResult& r, const VarietiesConfig& cfg, int samples,
                                      long long budget, int workers) {
  ContainmentReport rep;
  std::vector<CPoint> pts;
  for (int k = 0; k < std::min<int>(static_cast<int>(cfg.varieties.size()), cfg.stages); ++k) {
    const auto s = variety_compact_samples(cfg.varieties[k], compact_radius(cfg.varieties[k], cfg.stages, k), samples);
    pts.insert(pts.end(), s.begin(), s.end());
  }
  const std::vector<BasinVerdict> v = classify_all(r.sequence, pts, budget, kDefaultEscapeRadius, workers);
  rep.sampled = static_cast<long long>(v.size());
  for (const BasinVerdict& b : v) rep.attracted += b.attracted();
  rep.excluded_verdict = classify(r.sequence, cfg.excluded, budget);
  rep.excluded_attracted = rep.excluded_verdict.attracted();
  return rep;
}

}  // namespace fbd
