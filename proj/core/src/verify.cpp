#include "fbd/verify.hpp"

#include <random>

#include "fbd/certificate.hpp"
#include "fbd/hull.hpp"
#include "fbd/mover.hpp"

namespace fbd {

bool VerifyReport::passed() const {
  for (const VerifyCheck& c : checks)
    if (!c.passed) return false;
  return true;
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const VerifyCheck& c : checks) list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"suite", suite}, {"passed", passed()}, {"checks", list}};
}

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names = {"certificate", "convergence",  "union-formula", "disjointness",
                                                 "connectedness", "containment", "hull-props",    "mover-props"};
  return names;
}

AutoSequence target_sequence(const nlohmann::json& target) {
  if (target.is_object() && target.contains("sequence")) return AutoSequence::from_json(target.at("sequence"));
  if (target.is_object() && target.contains("maps")) return AutoSequence::from_json(target);
  throw InvalidArgument("target holds no sequence");
}

namespace {

const nlohmann::json& member(const nlohmann::json& target, const char* key, const std::string& suite) {
  if (!target.is_object() || !target.contains(key))
    throw InvalidArgument("suite " + suite + " needs a build output with \"" + key + "\"");
  return target.at(key);
}

void certificate_suite(VerifyReport& rep, const nlohmann::json& target, const VerifyOptions& opt) {
  const AutoSequence seq = target_sequence(target);
  VerifyCheck c{"sampled-certificates", true, {{"centers", seq.centers().size()}}};
  try {
    seq.verify(opt.samples, opt.seed);
  } catch (const Error& e) {
    c.passed = false;
    c.detail["error"] = e.what();
  }
  rep.checks.push_back(c);
  for (std::size_t i = 0; i < seq.centers().size(); ++i) {
    const BasinCenter& bc = seq.centers()[i];
    VerifyCheck b{"bracket:" + std::to_string(i), bc.cert.s < bc.cert.r && bc.cert.r < 1 && bc.cert.s > 0,
                  bc.cert.to_json()};
    b.detail["active_from"] = bc.active_from;
    rep.checks.push_back(b);
  }
}

void convergence_suite(VerifyReport& rep, const nlohmann::json& target, const VerifyOptions& opt) {
  const AutoSequence seq = target_sequence(target);
  for (std::size_t i = 0; i < seq.centers().size(); ++i) {
    VerifyCheck c{"geometric-rate:" + std::to_string(i), true, nullptr};
    try {
      const ConvergenceReport r = convergence_report(seq, std::min(opt.samples, 200), 20, static_cast<int>(i), false);
      c.passed = r.passes();
      c.detail = r.to_json();
    } catch (const Error& e) {
      c.passed = false;
      c.detail = {{"error", e.what()}};
    }
    rep.checks.push_back(c);
  }
}

void union_suite(VerifyReport& rep, const nlohmann::json& target, const VerifyOptions& opt) {
  const AutoSequence seq = target_sequence(target);
  const UnionFormulaReport r = union_formula_check(seq, opt.slice.grid(), opt.budget, kDefaultEscapeRadius, opt.workers);
  rep.checks.push_back({"zero-disagreements", r.disagreements.empty(), r.to_json()});
}

void disjointness_suite(VerifyReport& rep, const nlohmann::json& target, const VerifyOptions& opt) {
  const StageState st = StageState::from_json(member(target, "state", rep.suite));
  for (const InvariantCheck& c : check_stage_invariants(st, opt.samples, opt.seed))
    rep.checks.push_back({c.name, c.passed, c.detail});
  if (target.contains("sequence")) {
    const AutoSequence seq = target_sequence(target);
    const long long twice = double_classified(seq, opt.slice.grid(), opt.budget, opt.workers);
    rep.checks.push_back({"slice:double-classified", twice == 0,
                          {{"pixels", twice}, {"grid", opt.slice.resolution * opt.slice.resolution}}});
  }
}

void connectedness_suite(VerifyReport& rep, const nlohmann::json& target, const VerifyOptions& opt) {
  const LinesConfig cfg = LinesConfig::from_json(member(target, "config", rep.suite));
  std::vector<CPoint> excluded;
  for (const auto& p : member(target, "excluded", rep.suite)) excluded.push_back(point_from_json(p));
  const LinesResult r{target_sequence(target), excluded, nullptr};
  const ConnectivityReport c = line_connectivity(r, cfg, opt.samples, opt.budget, opt.workers);
  for (std::size_t k = 0; k < c.runs.size(); ++k) {
    rep.checks.push_back({"line:" + std::to_string(k) + ":one-run", c.runs[k] == 1,
                          {{"runs", c.runs[k]}, {"attracted", c.attracted[k]}, {"samples", opt.samples}}});
    rep.checks.push_back({"line:" + std::to_string(k) + ":excluded-not-attracted", c.excluded_ok[k],
                          {{"point", point_to_json(r.excluded[k])}}});
  }
}

void containment_suite(VerifyReport& rep, const nlohmann::json& target, const VerifyOptions& opt) {
  const VarietiesConfig cfg = VarietiesConfig::from_json(member(target, "config", rep.suite));
  const VarietiesResult r{target_sequence(target), nullptr};
  const ContainmentReport c = variety_containment(r, cfg, std::min(opt.samples, 64), opt.budget, opt.workers);
  rep.checks.push_back({"compacts-attracted", c.attracted == c.sampled && c.sampled > 0,
                        {{"sampled", c.sampled}, {"attracted", c.attracted}}});
  rep.checks.push_back({"excluded-not-attracted", !c.excluded_attracted, c.to_json()});
}

PlanarCompact random_mask(std::mt19937_64& rng, const BBox& box, int res) {
  std::uniform_real_distribution<double> u(-2, 2), rad(0.1, 0.8);
  PlanarCompact k(box, res);
  const int shapes = 1 + static_cast<int>(rng() % 4);
  for (int i = 0; i < shapes; ++i) {
    const cplx c(u(rng), u(rng));
    const double r = rad(rng);
    if (rng() % 2) k.add_annulus(c, r * 0.5, r);
    else k.add_disk(c, r);
  }
  return k;
}

bool joined(const PlanarCompact& k, cplx a, cplx b) {
  const auto lab = k.components();
  const int ca = k.component_of(k.cell_of(a), lab);
  return ca != 0 && ca == k.component_of(k.cell_of(b), lab);
}

void hull_suite(VerifyReport& rep, const VerifyOptions& opt) {
  const BBox box{-3, -3, 3, 3};
  std::mt19937_64 rng(opt.seed + 5);
  int idem_fail = 0, mono_fail = 0;
  for (int i = 0; i < opt.instances; ++i) {
    const PlanarCompact k = random_mask(rng, box, 16);
    const PlanarCompact h = poly_hull(k);
    idem_fail += !(poly_hull(h) == h);
    PlanarCompact bigger = k;
    bigger.unite(random_mask(rng, box, 16));
    mono_fail += !(k.subset_of(h) && h.subset_of(poly_hull(bigger)));
  }
  rep.checks.push_back({"hull-idempotent", idem_fail == 0, {{"instances", opt.instances}, {"failures", idem_fail}}});
  rep.checks.push_back({"hull-monotone", mono_fail == 0, {{"instances", opt.instances}, {"failures", mono_fail}}});

  int ring_fail = 0;
  for (int res : {16, 32, 64}) {
    const PlanarCompact ring = PlanarCompact(box, res).add_annulus(0, 0.5, 1);
    ring_fail += !(poly_hull(ring) == PlanarCompact(box, res).add_disk(0, 1));
  }
  rep.checks.push_back({"annulus-to-disk", ring_fail == 0, {{"resolutions", {16, 32, 64}}, {"failures", ring_fail}}});

  std::uniform_real_distribution<double> u(-2.5, 2.5), rad(0.2, 0.6);
  int attempted = 0, done = 0, limited = 0, failures = 0;
  while (attempted < opt.instances) {
    PlanarCompact k(box, 16);
    std::vector<cplx> centers;
    const int n = 2 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      const cplx c(u(rng) * 0.8, u(rng) * 0.8);
      centers.push_back(c);
      k.add_disk(c, rad(rng));
    }
    if (!k.contains(centers[0]) || !k.contains(centers[1])) continue;
    const PlanarCompact hull = poly_hull(k);
    std::vector<cplx> q;
    const int m = static_cast<int>(rng() % 6);
    for (int i = 0; i < m; ++i) {
      const cplx z(u(rng), u(rng));
      if (!hull.contains(z)) q.push_back(z);
    }
    ++attempted;
    try {
      const PlanarCompact out = connect_avoiding(k, centers[0], centers[1], q);
      ++done;
      bool ok = joined(out, centers[0], centers[1]) && poly_hull(out) == out && k.subset_of(out);
      for (cplx z : q) ok = ok && !out.contains(z);
      failures += !ok;
    } catch (const NoPathAtResolution&) {
      ++limited;
    } catch (const QTooCloseToK&) {
      ++limited;
    }
  }
  rep.checks.push_back({"connect-postconditions", failures == 0,
                        {{"instances", attempted}, {"completed", done}, {"resolution_limited", limited},
                         {"failures", failures}}});
}

CPoint shell_point(std::mt19937_64& g, double lo, double hi) {
  std::normal_distribution<double> n;
  const CPoint p{cplx(n(g), n(g)), cplx(n(g), n(g))};
  std::uniform_real_distribution<double> u(lo, hi);
  return p * cplx(u(g) / p.norm());
}

void mover_suite(VerifyReport& rep, const VerifyOptions& opt) {
  constexpr double kEps = 0.05;
  const std::vector<Ball> keep{{CPoint::zero(2), 1.0}};
  std::mt19937_64 g(opt.seed + 1);
  int ok = 0, reverify_fail = 0;
  nlohmann::json failures = nlohmann::json::array();
  for (int i = 0; i < opt.instances; ++i) {
    MoveRequest r;
    r.keep = keep;
    const int n = 1 + static_cast<int>(g() % 3);
    for (int k = 0; k < n; ++k) {
      r.sources.push_back(shell_point(g, 3, 5));
      r.targets.push_back(shell_point(g, 3, 5));
    }
    r.epsilon = kEps;
    r.seed = opt.seed + static_cast<std::uint64_t>(i);
    try {
      const MoverResult m = build_point_mover_ex(r);
      ++ok;
      const double fresh = identity_deviation(m.map, keep, r.samples_per_ball, opt.seed + 900001 + i);
      bool hit = true;
      for (std::size_t k = 0; k < r.sources.size(); ++k)
        hit = hit && distance(m.map.apply(r.sources[k]), r.targets[k]) <= 1e-9 * (1 + r.targets[k].norm());
      if (!(fresh * kFreshSampleMargin < kEps) || !hit) ++reverify_fail;
    } catch (const Error& e) {
      failures.push_back({{"instance", i}, {"error", std::string(e.what()).substr(0, 200)}});
    }
  }
  const double rate = opt.instances > 0 ? static_cast<double>(ok) / opt.instances : 1.0;
  rep.checks.push_back({"relocation-success-rate", rate >= 0.95,
                        {{"instances", opt.instances}, {"succeeded", ok}, {"rate", rate}, {"failures", failures}}});
  rep.checks.push_back({"independent-reverification", reverify_fail == 0,
                        {{"margin", kFreshSampleMargin}, {"failures", reverify_fail}}});

  MoveRequest a;
  a.keep = keep;
  a.sources = {CPoint{cplx(3), cplx(0)}};
  a.targets = {CPoint{cplx(3), cplx(2)}};
  a.epsilon = 0.1;
  VerifyCheck c{"analytic-instance", false, nullptr};
  try {
    const MoverResult m = build_point_mover_ex(a);
    c.passed = m.damping == 3 && m.sup_error < 0.1 && std::abs(m.sup_error - 2.0 / 27) < 0.05 * 2.0 / 27;
    c.detail = {{"damping", m.damping}, {"sup_error", m.sup_error}, {"bound", 2.0 / 27}};
  } catch (const Error& e) {
    c.detail = {{"error", e.what()}};
  }
  rep.checks.push_back(c);
}

}  // namespace

VerifyReport run_verify(const std::string& suite, const nlohmann::json& target, const VerifyOptions& opt) {
  VerifyReport rep;
  rep.suite = suite;
  if (suite == "certificate") certificate_suite(rep, target, opt);
  else if (suite == "convergence") convergence_suite(rep, target, opt);
  else if (suite == "union-formula") union_suite(rep, target, opt);
  else if (suite == "disjointness") disjointness_suite(rep, target, opt);
  else if (suite == "connectedness") connectedness_suite(rep, target, opt);
  else if (suite == "containment") containment_suite(rep, target, opt);
  else if (suite == "hull-props") hull_suite(rep, opt);
  else if (suite == "mover-props") mover_suite(rep, opt);
  else throw InvalidArgument("unknown suite: " + suite);
  return rep;
}

nlohmann::json disjoint_output(const DisjointConfig& cfg, const BuildResult& r) {
  return {{"kind", "disjoint"},          {"config", cfg.to_json()}, {"sequence", r.sequence.to_json()},
          {"state", r.state.to_json()}, {"history", r.history},    {"log", r.log}};
}

nlohmann::json lines_output(const LinesConfig& cfg, const LinesResult& r) {
  nlohmann::json ex = nlohmann::json::array();
  for (const CPoint& q : r.excluded) ex.push_back(point_to_json(q));
  return {{"kind", "lines"}, {"config", cfg.to_json()}, {"sequence", r.sequence.to_json()}, {"excluded", ex},
          {"log", r.log}};
}

nlohmann::json varieties_output(const VarietiesConfig& cfg, const VarietiesResult& r) {
  return {{"kind", "varieties"}, {"config", cfg.to_json()}, {"sequence", r.sequence.to_json()}, {"log", r.log}};
}

}  // namespace fbd
