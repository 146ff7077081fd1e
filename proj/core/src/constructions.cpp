#include "fbd/constructions.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fbd/certificate.hpp"
#include "parallel.hpp"

namespace fbd {

namespace {

constexpr double kBracketS = 0.4;
constexpr double kBracketR = 0.6;
constexpr double kSeparation = 3.0;
constexpr double kFirstRadius = 0.5;
constexpr double kCenterGap = 2.5;
constexpr double kWitnessDepth = 0.9;

nlohmann::json pts_json(const std::vector<CPoint>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const CPoint& p : v) a.push_back(point_to_json(p));
  return a;
}

std::vector<CPoint> pts_from(const nlohmann::json& j) {
  std::vector<CPoint> out;
  for (const auto& p : j) out.push_back(point_from_json(p));
  return out;
}

double real_dot(const CPoint& a, const CPoint& b) { return inner(a, b).real(); }

}  // namespace

void SliceSpec::validate() const {
  if (origin.dim() != 2 || axis_u.dim() != 2 || axis_v.dim() != 2) throw DimensionMismatch("slice lives in C^2");
  const double uu = real_dot(axis_u, axis_u), vv = real_dot(axis_v, axis_v), uv = real_dot(axis_u, axis_v);
  if (!(uu * vv - uv * uv > 1e-9)) throw InvalidArgument("slice axes must be real-linearly independent");
  if (resolution < 1 || resolution > 4096) throw InvalidArgument("slice resolution must lie in [1, 4096]");
  if (!(extent > 0)) throw InvalidArgument("slice extent must be positive");
}

CPoint SliceSpec::point(int i, int j) const {
  const double step = 2 * extent / resolution;
  const double u = -extent + (i + 0.5) * step;
  const double v = extent - (j + 0.5) * step;
  return origin + axis_u * u + axis_v * v;
}

std::vector<CPoint> SliceSpec::grid() const {
  std::vector<CPoint> out;
  out.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int j = 0; j < resolution; ++j)
    for (int i = 0; i < resolution; ++i) out.push_back(point(i, j));
  return out;
}

nlohmann::json SliceSpec::to_json() const {
  return {{"origin", point_to_json(origin)},
          {"axis_u", point_to_json(axis_u)},
          {"axis_v", point_to_json(axis_v)},
          {"extent", extent},
          {"resolution", resolution}};
}

SliceSpec SliceSpec::from_json(const nlohmann::json& j) {
  SliceSpec s;
  if (j.contains("origin")) s.origin = point_from_json(j.at("origin"));
  if (j.contains("axis_u")) s.axis_u = point_from_json(j.at("axis_u"));
  if (j.contains("axis_v")) s.axis_v = point_from_json(j.at("axis_v"));
  s.extent = j.value("extent", s.extent);
  s.resolution = j.value("resolution", s.resolution);
  s.validate();
  return s;
}

double StageState::delta(std::size_t i) const { return schwarz_delta(radii.at(i), kBracketS, kBracketR); }

CPoint StageState::forward(const CPoint& z) const {
  CPoint y = z;
  for (const AutoMap& f : maps) y = f.apply(y);
  return y;
}

nlohmann::json StageState::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const AutoMap& f : maps) m.push_back(f.to_json());
  nlohmann::json w = nlohmann::json::array();
  for (const Witness& t : witnesses)
    w.push_back({{"point", point_to_json(t.point)}, {"image", point_to_json(t.image)}, {"basin", t.basin},
                 {"stage", t.stage}});
  return {{"stage", stage},
          {"maps", m},
          {"centers", pts_json(centers)},
          {"preimages", pts_json(preimages)},
          {"radii", radii},
          {"center_stage", center_stage},
          {"witnesses", w},
          {"excluded", pts_json(excluded)},
          {"eps_schedule", eps_schedule}};
}

StageState StageState::from_json(const nlohmann::json& j) {
  StageState s;
  s.stage = j.at("stage").get<int>();
  for (const auto& f : j.at("maps")) s.maps.push_back(AutoMap::from_json(f));
  s.centers = pts_from(j.at("centers"));
  s.preimages = pts_from(j.at("preimages"));
  s.radii = j.at("radii").get<std::vector<double>>();
  s.center_stage = j.at("center_stage").get<std::vector<int>>();
  for (const auto& w : j.value("witnesses", nlohmann::json::array()))
    s.witnesses.push_back({point_from_json(w.at("point")), point_from_json(w.at("image")), w.at("basin").get<int>(),
                           w.at("stage").get<int>()});
  s.excluded = pts_from(j.value("excluded", nlohmann::json::array()));
  s.eps_schedule = j.value("eps_schedule", std::vector<double>{});
  const std::size_t n = s.centers.size();
  if (s.preimages.size() != n || s.radii.size() != n || s.center_stage.size() != n)
    throw InvalidArgument("stage state lists disagree in length");
  return s;
}

std::vector<InvariantCheck> check_stage_invariants(const StageState& s, int n_samples, std::uint64_t seed) {
  std::vector<InvariantCheck> out;
  auto fail = [](InvariantCheck& c, const std::string& d) {
    if (c.passed) c.detail = d;
    c.passed = false;
  };
  const std::size_t n = s.centers.size();

  InvariantCheck a{"a:disjoint-balls", true, ""};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k)
      if (!(distance(s.centers[i], s.centers[k]) >= kSeparation * (s.radii[i] + s.radii[k])))
        fail(a, "balls " + std::to_string(i) + " and " + std::to_string(k) + " are not separated");
  out.push_back(a);

  InvariantCheck b{"b:preimages", true, ""};
  for (std::size_t i = 0; i < n; ++i)
    if (distance(s.forward(s.preimages[i]), s.centers[i]) > 1e-9 * (1 + s.centers[i].norm()))
      fail(b, "F(j)(p_" + std::to_string(i) + ") != q_" + std::to_string(i));
  out.push_back(b);

  InvariantCheck c{"c:fixed-centers", true, ""};
  InvariantCheck d{"d:half-scale-bound", true, ""};
  for (std::size_t k = 0; k < n; ++k) {
    const double dk = s.delta(k);
    for (std::size_t i = static_cast<std::size_t>(s.center_stage[k]); i <= s.maps.size(); ++i) {
      const AutoMap& f = s.maps[i - 1];
      if (distance(f.apply(s.centers[k]), s.centers[k]) > 1e-9 * (1 + s.centers[k].norm()))
        fail(c, "F_" + std::to_string(i) + " moves q_" + std::to_string(k));
      const double dev = half_scale_deviation(f, s.centers[k], s.radii[k], n_samples, seed + i);
      if (!(dev < dk))
        fail(d, "F_" + std::to_string(i) + " deviates by " + std::to_string(dev) + " on ball " + std::to_string(k));
    }
  }
  out.push_back(c);
  out.push_back(d);
  return out;
}

void DisjointConfig::validate() const {
  if (m < 2 || m > 4) throw InvalidArgument("m must lie in [2, 4]");
  if (stages < 1 || stages > 12) throw InvalidArgument("stages must lie in [1, 12]");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i)
    if (!(eps_schedule[i] > 0) || (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1])))
      throw InvalidArgument("eps_schedule must be positive and decreasing");
  if (!eps_schedule.empty() && static_cast<int>(eps_schedule.size()) < stages)
    throw InvalidArgument("eps_schedule needs one entry per stage");
  if (witness_grid < 2 || anchors_per_stage < 0 || samples < 16) throw InvalidArgument("witness settings out of range");
  if (!(center_extent > 0)) throw InvalidArgument("center_extent must be positive");
  slice.validate();
}

nlohmann::json DisjointConfig::to_json() const {
  return {{"m", m},
          {"stages", stages},
          {"eps_schedule", eps_schedule},
          {"seed", seed},
          {"slice", slice.to_json()},
          {"witness_grid", witness_grid},
          {"anchors_per_stage", anchors_per_stage},
          {"witness_image_cap", witness_image_cap},
          {"center_extent", center_extent},
          {"samples", samples}};
}

DisjointConfig DisjointConfig::from_json(const nlohmann::json& j) {
  DisjointConfig c;
  c.m = j.value("m", c.m);
  c.stages = j.value("stages", c.stages);
  c.eps_schedule = j.value("eps_schedule", c.eps_schedule);
  c.seed = j.value("seed", c.seed);
  if (j.contains("slice")) c.slice = SliceSpec::from_json(j.at("slice"));
  c.witness_grid = j.value("witness_grid", c.witness_grid);
  c.anchors_per_stage = j.value("anchors_per_stage", c.anchors_per_stage);
  c.witness_image_cap = j.value("witness_image_cap", c.witness_image_cap);
  c.center_extent = j.value("center_extent", c.center_extent);
  c.samples = j.value("samples", c.samples);
  c.validate();
  return c;
}

namespace {

nlohmann::json snapshot(const StageState& s, const std::vector<InvariantCheck>& checks) {
  nlohmann::json inv = nlohmann::json::array();
  for (const InvariantCheck& c : checks) inv.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"stage", s.stage},
          {"centers", pts_json(s.centers)},
          {"radii", s.radii},
          {"witnesses", s.witnesses.size()},
          {"eps", s.eps_schedule.empty() ? 0.0 : s.eps_schedule.back()},
          {"invariants", inv}};
}

bool in_balls(const CPoint& y, const StageState& s) {
  for (std::size_t i = 0; i < s.centers.size(); ++i)
    if (distance(y, s.centers[i]) <= s.radii[i]) return true;
  return false;
}

AutoSequence disjoint_sequence(const StageState& s, const AutoMap& tail) {
  std::vector<BasinCenter> centers;
  for (std::size_t i = 0; i < s.centers.size(); ++i)
    centers.push_back({half_scale_certificate(s.centers[i], s.radii[i], kBracketS, kBracketR), s.center_stage[i] - 1});
  return AutoSequence(s.maps, {tail}, centers);
}

// farthest-point sampling, first pick random
std::vector<std::size_t> spread_pick(const std::vector<CPoint>& pts, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  if (pts.empty() || count == 0) return out;
  std::vector<double> gap(pts.size(), std::numeric_limits<double>::infinity());
  std::size_t next = rng() % pts.size();
  while (out.size() < std::min(count, pts.size())) {
    out.push_back(next);
    double best = -1;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      gap[i] = std::min(gap[i], distance(pts[i], pts[next]));
      if (gap[i] > best) {
        best = gap[i];
        next = i;
      }
    }
    if (best <= 0) break;
  }
  return out;
}

CPoint unit_direction(int k) {
  // along w: the mover's last shear moves z and is damped by the target's w offset alone
  return CPoint{cplx(0, 0), std::polar(1.0, 0.3 + 2.4 * k)};
}

// within twice the radius of one of the balls from index `from` on
bool near_any(const CPoint& z, const std::vector<CPoint>& c, const std::vector<double>& r, std::size_t from) {
  for (std::size_t k = from; k < c.size(); ++k)
    if (distance(z, c[k]) <= 2 * r[k]) return true;
  return false;
}

}  // namespace

BuildResult build_disjoint_basins(const DisjointConfig& cfg) {
  cfg.validate();
  StageState st;
  st.stage = 1;
  st.maps = {AutoMap::half_scale(2)};
  st.centers = {cfg.slice.origin};
  st.preimages = {cfg.slice.origin};
  st.radii = {kFirstRadius};
  st.center_stage = {1};
  auto eps_at = [&](int j) { return cfg.eps_schedule.empty() ? std::ldexp(1.0, -j) : cfg.eps_schedule[j - 1]; };
  st.eps_schedule = {eps_at(1)};
  if (!(cfg.slice.origin.norm() == 0)) {
    // p_1 = q_1 must be fixed by A
    st.maps = {AutoMap::affine(CMatrix::scalar(2, 0.5), cfg.slice.origin * 0.5)};
  }

  BuildResult res{disjoint_sequence(st, st.maps.back()), st, {}, nlohmann::json::object()};
  res.history.push_back(snapshot(st, check_stage_invariants(st, cfg.samples / 4, cfg.seed)));
  nlohmann::json stage_log = nlohmann::json::array();
  AutoMap tail = st.maps.back();

  std::vector<CPoint> lattice;
  {
    SliceSpec coarse = cfg.slice;
    coarse.resolution = cfg.witness_grid;
    lattice = coarse.grid();
  }

  for (int j = 1; j < cfg.stages; ++j) {
    const int next = j + 1;
    std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(j));
    const double eps = eps_at(j);
    try {
      // candidates: lattice points of B_{j+1} outside K_j with moderate images
      std::vector<CPoint> cand, cand_img;
      for (const CPoint& x : lattice) {
        if (!(distance(x, cfg.slice.origin) < next)) continue;
        const CPoint y = st.forward(x);
        if (!y.finite() || y.norm() > cfg.witness_image_cap || in_balls(y, st)) continue;
        cand.push_back(x);
        cand_img.push_back(y);
      }

      // new centers, all introduced while F(j) still inverts cleanly
      std::vector<CPoint> centers = st.centers, new_p;
      std::vector<double> radii = st.radii;
      const std::size_t old_nb = centers.size();
      while (static_cast<int>(centers.size()) < cfg.m) {
        // p from the slice square of half-width center_extent, q = F(j)(p); prefer wide gaps, then small norms
        std::uniform_real_distribution<double> unif(-cfg.center_extent, cfg.center_extent);
        double best = -std::numeric_limits<double>::infinity(), rho_new = 0;
        CPoint p_new, q_new;
        for (int t = 0; t < 2048; ++t) {
          const double u = unif(rng), v = unif(rng);
          const CPoint x = cfg.slice.origin + cfg.slice.axis_u * cplx(u) + cfg.slice.axis_v * cplx(v);
          const CPoint y = st.forward(x);
          if (!y.finite()) continue;
          double r = kFirstRadius, gap = std::numeric_limits<double>::infinity();
          for (std::size_t k = 0; k < centers.size(); ++k) {
            r = std::min(r, distance(y, centers[k]) / kSeparation - radii[k]);
            gap = std::min(gap, distance(y, centers[k]));
          }
          if (r < 0.02 || in_balls(y, st)) continue;
          const double score = std::min(gap, kCenterGap) - 0.1 * y.norm();
          if (score <= best) continue;
          best = score;
          rho_new = r;
          p_new = x;
          q_new = y;
        }
        if (!(rho_new >= 0.02)) throw StageFailed(next, "no room for a new center");
        centers.push_back(q_new);
        radii.push_back(rho_new);
        new_p.push_back(p_new);
      }
      const std::size_t nb = centers.size();

      // witness anchors, away from the new center's ball
      std::vector<CPoint> pool, pool_img;
      for (std::size_t i = 0; i < cand.size(); ++i)
        if (!near_any(cand_img[i], centers, radii, old_nb)) {
          pool.push_back(cand[i]);
          pool_img.push_back(cand_img[i]);
        }
      const std::vector<std::size_t> anchors = spread_pick(pool, cfg.anchors_per_stage, rng);

      // contractor phi with the jet of A at every center
      JetRequest jet;
      jet.centers = centers;
      jet.rho = radii;
      for (double r : radii) jet.delta.push_back(schwarz_delta(r, kBracketS, kBracketR));
      jet.samples_per_ball = cfg.samples;
      jet.seed = cfg.seed + 17 * next;
      jet.unitary_retry = true;
      jet.delta_fraction = 0.5;
      double min_delta = *std::min_element(jet.delta.begin(), jet.delta.end());
      const MoverResult contractor = build_multicenter_contractor_ex(jet, std::numeric_limits<double>::infinity());
      radii = contractor.rho;
      // equal radii keep the mover's damping balanced across the balls
      const double rho_min = *std::min_element(radii.begin(), radii.end());
      for (double& r : radii) r = rho_min;
      std::vector<double> deltas;
      for (double r : radii) deltas.push_back(schwarz_delta(r, kBracketS, kBracketR));
      min_delta = *std::min_element(deltas.begin(), deltas.end());
      const AutoMap& phi = contractor.map;

      // mover pulling witnesses into phi^{-1}(B_rho_i(q_i)); drop anchors if it cannot be built
      AutoMap mover = AutoMap::identity(2);
      std::vector<Witness> fresh;
      int used_anchors = static_cast<int>(anchors.size());
      int mover_damping = 0;
      for (; used_anchors >= 0; --used_anchors) {
        MoveRequest mr;
        for (std::size_t i = 0; i < nb; ++i) mr.keep.push_back({centers[i], radii[i]});
        fresh.clear();
        std::vector<int> per_basin(nb, 0);
        for (int a = 0; a < used_anchors; ++a) {
          const CPoint& x = pool[anchors[a]];
          for (std::size_t b = 0; b < nb; ++b) {
            const double theta = 2 * std::numbers::pi * (static_cast<double>(b) + 0.5) / static_cast<double>(nb);
            const CPoint t = x + cfg.slice.axis_u * (eps / 3 * std::cos(theta)) +
                             cfg.slice.axis_v * (eps / 3 * std::sin(theta));
            const CPoint tt = st.forward(t);
            if (!tt.finite() || in_balls(tt, st) || near_any(tt, centers, radii, old_nb)) continue;
            bool blocked = false;
            for (const Ball& kb : mr.keep) blocked |= distance(tt, kb.center) <= kb.radius;
            if (blocked) continue;
            const CPoint tau = centers[b] + unit_direction(per_basin[b]++) * (kWitnessDepth * radii[b]);
            const CPoint target = phi.apply_inverse(tau);
            if (distance(target, centers[b]) <= radii[b]) continue;
            mr.sources.push_back(tt);
            mr.targets.push_back(target);
            fresh.push_back({t, CPoint::zero(2), static_cast<int>(b), next});
          }
        }
        mr.epsilon = 0.4 * min_delta;
        mr.samples_per_ball = cfg.samples;
        mr.seed = cfg.seed + 31 * next + used_anchors;
        mr.unitary_retry = true;
        try {
          const MoverResult m = build_point_mover_ex(mr);
          mover = m.map;
          mover_damping = m.damping;
          break;
        } catch (const MoverFailed&) {
        } catch (const GeneralPositionViolated&) {
        } catch (const InvalidArgument&) {
        }
      }
      if (used_anchors < 0) throw StageFailed(next, "mover failed even without witnesses");

      StageState cand_state = st;
      cand_state.maps.push_back(AutoMap::compose({mover, phi}));
      cand_state.stage = next;
      cand_state.centers = centers;
      cand_state.radii = radii;
      for (const CPoint& p : new_p) {
        cand_state.preimages.push_back(p);
        cand_state.center_stage.push_back(next);
      }
      cand_state.eps_schedule.push_back(eps_at(next));
      // (i): committed witnesses land in their balls
      for (Witness& w : fresh) {
        w.image = cand_state.forward(w.point);
        if (!(distance(w.image, centers[w.basin]) < radii[w.basin]))
          throw StageFailed(next, "witness image outside its target ball");
        cand_state.witnesses.push_back(w);
      }
      const std::vector<InvariantCheck> checks = check_stage_invariants(cand_state, cfg.samples / 4, cfg.seed + next);
      for (const InvariantCheck& c : checks)
        if (!c.passed) throw StageFailed(next, "invariant " + c.name + " failed: " + c.detail);
      st = std::move(cand_state);
      tail = phi;
      res.history.push_back(snapshot(st, checks));
      stage_log.push_back({{"stage", next},
                           {"anchors_requested", anchors.size()},
                           {"anchors_used", used_anchors},
                           {"witnesses", fresh.size()},
                           {"mover_damping", mover_damping},
                           {"contractor_halvings", contractor.halvings},
                           {"contractor_error", contractor.sup_error},
                           {"new_centers", centers.size() - old_nb}});
    } catch (const StageFailed& e) {
      throw BuildFailed(e.stage(), e.cause(), st.to_json());
    } catch (const Error& e) {
      throw BuildFailed(next, e.what(), st.to_json());
    }
  }
  res.state = st;
  res.sequence = disjoint_sequence(st, tail);
  res.log = {{"stages", stage_log},
             {"separation_predicate", "center distance >= 3 (rho_i + rho_k)"},
             {"witness_grid", cfg.witness_grid}};
  return res;
}

std::string witnesses_csv(const StageState& s) {
  std::ostringstream out;
  out.precision(17);
  out << "basin,stage,z_re,z_im,w_re,w_im,image_z_re,image_z_im,image_w_re,image_w_im\n";
  for (const Witness& w : s.witnesses)
    out << w.basin << ',' << w.stage << ',' << w.point[0].real() << ',' << w.point[0].imag() << ','
        << w.point[1].real() << ',' << w.point[1].imag() << ',' << w.image[0].real() << ',' << w.image[0].imag()
        << ',' << w.image[1].real() << ',' << w.image[1].imag() << '\n';
  return out.str();
}

nlohmann::json DensityReport::to_json() const {
  return {{"checked", checked}, {"covered", covered}, {"eps", eps}, {"worst_gap", worst_gap}, {"passes", passes()}};
}

DensityReport density_witness_check(const BuildResult& r, const std::vector<CPoint>& grid,
                                    const std::vector<BasinVerdict>& verdicts, double eps, long long budget) {
  if (grid.size() != verdicts.size()) throw InvalidArgument("grid and verdicts differ in length");
  const std::size_t nb = r.sequence.centers().size();
  std::vector<std::vector<CPoint>> good(nb);
  for (const Witness& w : r.state.witnesses) {
    const BasinVerdict v = classify(r.sequence, w.point, budget);
    if (v.attracted() && v.basin == w.basin) good[w.basin].push_back(w.point);
  }
  DensityReport rep;
  rep.eps = eps;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!verdicts[i].decided() || verdicts[i].attracted()) continue;
    ++rep.checked;
    double worst = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      double best = std::numeric_limits<double>::infinity();
      for (const CPoint& t : good[b]) best = std::min(best, distance(t, grid[i]));
      worst = std::max(worst, best);
    }
    rep.worst_gap = std::max(rep.worst_gap, worst);
    if (worst < eps) ++rep.covered;
  }
  return rep;
}

long long double_classified(const AutoSequence& seq, const std::vector<CPoint>& grid, long long budget, int workers) {
  const auto& centers = seq.centers();
  std::vector<unsigned char> doubled(grid.size(), 0);
  detail::parallel_for(grid.size(), workers, [&](std::size_t i) {
    CPoint y = grid[i];
    std::vector<bool> hit(centers.size(), false);
    long long stop = budget;
    for (long long j = 0; j <= stop; ++j) {
      if (!y.finite() || (j >= seq.prefix_length() && y.norm() > kDefaultEscapeRadius)) break;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const ContractionCertificate& k = centers[c].cert;
        if (j >= centers[c].active_from && !hit[c] && k.frame.norm(y - k.p) < k.delta) {
          hit[c] = true;
          stop = std::min(budget, j + 200);  // keep following the orbit well past first entry
        }
      }
      if (j < stop) y = seq.map_at(j + 1).apply(y);
    }
    doubled[i] = std::count(hit.begin(), hit.end(), true) > 1;
  });
  return std::count(doubled.begin(), doubled.end(), 1);
}

}  // namespace fbd
