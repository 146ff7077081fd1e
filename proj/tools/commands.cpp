#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "config_io.hpp"
#include "fbd/constructions.hpp"
#include "fbd/render.hpp"
#include "fbd/verify.hpp"

namespace fbd::cli {

namespace fs = std::filesystem;

namespace {

fs::path out_dir(const Global& g) {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + g.out);
  return dir;
}

// Sequence from an inline "sequence" member or a "sequence_file" reference (a sequence or a build output).
AutoSequence config_sequence(const ConfigFile& cfg) {
  const nlohmann::json& j = cfg.json;
  if (j.contains("sequence") && j.contains("sequence_file"))
    throw ConfigError(cfg.name + ": give either 'sequence' or 'sequence_file', not both");
  std::optional<AutoSequence> seq;
  if (j.contains("sequence")) {
    with_field_diagnostics(cfg.name + " /sequence", [&] { seq = target_sequence(j.at("sequence")); });
  } else if (j.contains("sequence_file")) {
    const std::string ref = j.at("sequence_file").get<std::string>();
    const nlohmann::json t = load_referenced(cfg, ref);
    with_field_diagnostics(ref, [&] { seq = target_sequence(t); });
  } else {
    throw ConfigError(cfg.name + ": missing 'sequence' or 'sequence_file'");
  }
  return std::move(*seq);
}

// Runs the sampled certificate check; nullopt on success, otherwise the violation text.
std::optional<std::string> certify_sequence(const AutoSequence& seq, int samples, std::uint64_t seed) {
  try {
    seq.verify(samples, seed);
  } catch (const CertificateViolated& e) {
    return std::string(e.what());
  } catch (const FixedPointViolated& e) {
    return std::string(e.what());
  } catch (const InvalidBracket& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

cplx cplx_at(const nlohmann::json& j, const char* key) { return cplx_from_json(j.at(key)); }

}  // namespace

int cmd_certify(const Global& g) {
  const ConfigFile cfg = load_config(g.config);
  const nlohmann::json& j = cfg.json;
  const nlohmann::json arr = nlohmann::json::array();
  reject_unknown(j,
                 {{"map", nullptr}, {"p", arr}, {"rho", 0.0}, {"samples", 0}, {"frame", ""}, {"s", 0.0}, {"r", 0.0},
                  {"sequence", nullptr}, {"sequence_file", ""}, {"seed", 0u}},
                 cfg.name);
  const int samples = j.value("samples", 4000);
  const std::uint64_t seed = g.seed.value_or(j.value("seed", std::uint64_t{0}));
  if (samples < 16) throw ConfigError(cfg.name + " /samples: must be at least 16");
  const fs::path dir = out_dir(g);
  nlohmann::json report;

  if (!j.contains("map")) {
    const AutoSequence seq = config_sequence(cfg);
    const auto violation = certify_sequence(seq, samples, seed);
    report = {{"mode", "sequence"}, {"centers", seq.centers().size()}, {"prefix_maps", seq.prefix_length()},
              {"samples", samples}, {"seed", seed}, {"verified", !violation}};
    if (violation) report["violation"] = *violation;
    write_json(dir / "certificate.json", report);
    if (violation) std::cerr << "certificate violated: " << *violation << "\n";
    return violation ? kViolation : kPass;
  }

  std::optional<AutoMap> map;
  CPoint p;
  double rho = 0;
  std::string frame_kind;
  with_field_diagnostics(cfg.name, [&] {
    map = AutoMap::from_json(j.at("map"));
    p = point_from_json(j.at("p"));
    rho = j.at("rho").get<double>();
    frame_kind = j.value("frame", std::string("adapted"));
    if (p.dim() != map->dim()) throw DimensionMismatch("p and map dimensions differ");
    if (!(rho > 0)) throw InvalidArgument("rho must be positive");
    if (frame_kind != "adapted" && frame_kind != "euclidean")
      throw InvalidArgument("frame must be adapted or euclidean");
    if (j.contains("s") != j.contains("r")) throw InvalidArgument("give both s and r or neither");
  });

  report = {{"mode", "map"}, {"samples", samples}, {"seed", seed}};
  const double residual = distance(map->apply(p), p);
  report["fixed_point_residual"] = residual;
  std::optional<std::string> violation;
  if (residual > kFixedPointTol) violation = "p is not a fixed point";

  const NormFrame frame = frame_kind == "adapted" ? adapted_frame(*map, p) : NormFrame::euclidean(p.dim());
  const BoundsEstimate b = contraction_bounds(*map, p, rho, samples, frame);
  report["bounds"] = {{"s_raw", b.s_raw}, {"r_raw", b.r_raw}, {"s_hat", b.s_hat}, {"r_hat", b.r_hat},
                      {"s_coarse", b.s_coarse}, {"r_coarse", b.r_coarse}};
  ContractionCertificate cert = measure_certificate(*map, p, rho, samples, frame);
  if (j.contains("s")) {
    cert.s = j.at("s").get<double>();
    cert.r = j.at("r").get<double>();
    report["bracket"] = "given";
  } else {
    report["bracket"] = "measured";
  }
  try {
    cert.validate();
  } catch (const InvalidBracket& e) {
    if (!violation) violation = e.what();
  }
  report["certificate"] = cert.to_json();
  report["predicted_ratio"] = cert.predicted_ratio();
  if (!violation) {
    const AutoSequence seq = AutoSequence::constant(*map, cert);
    violation = certify_sequence(seq, samples, seed);
    if (!violation) report["sequence"] = seq.to_json();
  }
  report["verified"] = !violation;
  if (violation) report["violation"] = *violation;
  write_json(dir / "certificate.json", report);
  if (violation) std::cerr << "certificate violated: " << *violation << "\n";
  return violation ? kViolation : kPass;
}

int cmd_render(const Global& g) {
  const ConfigFile cfg = load_config(g.config);
  reject_unknown(cfg.json, RenderJob{}.to_json(), cfg.name, {"sequence", "sequence_file", "verify_samples"});
  RenderJob job;
  with_field_diagnostics(cfg.name, [&] {
    job = RenderJob::from_json(cfg.json);
    if (g.seed) job.seed = *g.seed;
    job.validate();
  });
  if (job.format == "png" && !png_available()) throw ConfigError("built without libpng; set \"format\": \"pgm\"");
  const AutoSequence seq = config_sequence(cfg);
  if (const auto violation = certify_sequence(seq, cfg.json.value("verify_samples", 1000), job.seed)) {
    std::cerr << "sequence does not certify: " << *violation << "\n";
    return kViolation;
  }
  const RenderResult res = run_render(seq, job, g.workers);
  const fs::path dir = out_dir(g);
  const std::string image = "render." + job.format;
  write_bytes(dir / image, job.format == "png" ? res.image.png() : res.image.pgm());
  write_json(dir / "render_summary.json",
             {{"image", image}, {"job", job.to_json()}, {"summary", res.summary.to_json(job.record_timing)}});
  return kPass;
}

int cmd_build(const Global& g, const std::string& kind) {
  const ConfigFile cfg = load_config(g.config);
  const fs::path dir = out_dir(g);
  try {
    if (kind == "disjoint") {
      DisjointConfig c;
      reject_unknown(cfg.json, c.to_json(), cfg.name);
      with_field_diagnostics(cfg.name, [&] {
        c = DisjointConfig::from_json(cfg.json);
        if (g.seed) c.seed = *g.seed;
        c.validate();
      });
      const BuildResult r = build_disjoint_basins(c);
      write_json(dir / "build.json", disjoint_output(c, r));
      write_json(dir / "sequence.json", r.sequence.to_json());
      write_text(dir / "witnesses.csv", witnesses_csv(r.state));
      const auto checks = check_stage_invariants(r.state, c.samples, c.seed);
      nlohmann::json inv = nlohmann::json::array();
      bool ok = true;
      for (const InvariantCheck& ch : checks) {
        inv.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
        if (!ch.passed) {
          ok = false;
          std::cerr << "invariant violated: " << ch.name << " " << ch.detail << "\n";
        }
      }
      write_json(dir / "invariants.json", inv);
      return ok ? kPass : kViolation;
    }
    if (kind == "lines") {
      LinesConfig c;
      reject_unknown(cfg.json, c.to_json(), cfg.name);
      with_field_diagnostics(cfg.name, [&] {
        c = LinesConfig::from_json(cfg.json);
        if (g.seed) c.seed = *g.seed;
        c.validate();
      });
      const LinesResult r = build_line_intersector(c);
      write_json(dir / "build.json", lines_output(c, r));
      write_json(dir / "sequence.json", r.sequence.to_json());
      return kPass;
    }
    if (kind == "varieties") {
      VarietiesConfig c;
      reject_unknown(cfg.json, c.to_json(), cfg.name);
      with_field_diagnostics(cfg.name, [&] {
        c = VarietiesConfig::from_json(cfg.json);
        if (g.seed) c.seed = *g.seed;
        c.validate();
      });
      const VarietiesResult r = build_variety_container(c);
      write_json(dir / "build.json", varieties_output(c, r));
      write_json(dir / "sequence.json", r.sequence.to_json());
      return kPass;
    }
  } catch (const BuildFailed& e) {
    write_json(dir / "failed_state.json", {{"stage", e.stage()}, {"cause", e.cause()}, {"state", e.state()}});
    throw;
  } catch (const NoPathAtResolution& e) {
    // the builder already refined the hull grid twice; a missing path ends the stage
    write_json(dir / "failed_state.json", {{"cause", e.what()}});
    std::cerr << "build failed: " << e.what() << "\n";
    return kStageFailed;
  }
  throw ConfigError("unknown build kind: " + kind);
}

int cmd_hull(const Global& g) {
  const ConfigFile cfg = load_config(g.config);
  const nlohmann::json& j = cfg.json;
  const nlohmann::json arr = nlohmann::json::array();
  reject_unknown(j,
                 {{"input", ""}, {"bbox", arr}, {"resolution", 0}, {"shapes", arr},
                  {"connect", {{"p1", arr}, {"p2", arr}, {"q", arr}}}},
                 cfg.name);
  PlanarCompact k;
  with_field_diagnostics(cfg.name, [&] {
    if (j.contains("input")) {
      if (j.contains("shapes")) throw InvalidArgument("give either 'input' or 'shapes', not both");
      fs::path p(j.at("input").get<std::string>());
      if (p.is_relative()) p = cfg.dir / p;
      k = PlanarCompact::read_pgm(p.string());
      return;
    }
    const auto& b = j.at("bbox");
    k = PlanarCompact({b.at(0), b.at(1), b.at(2), b.at(3)}, j.value("resolution", kDefaultResolution));
    for (const auto& s : j.at("shapes")) {
      if (s.contains("disk")) {
        const auto& d = s.at("disk");
        k.add_disk(cplx_at(d, "center"), d.at("radius").get<double>());
      } else if (s.contains("annulus")) {
        const auto& a = s.at("annulus");
        k.add_annulus(cplx_at(a, "center"), a.at("inner").get<double>(), a.at("outer").get<double>());
      } else if (s.contains("segment")) {
        const auto& a = s.at("segment");
        k.add_segment(cplx_at(a, "a"), cplx_at(a, "b"));
      } else {
        throw InvalidArgument("shape must be disk, annulus or segment");
      }
    }
    k.validate();
  });
  const fs::path dir = out_dir(g);
  const PlanarCompact h = poly_hull(k);
  h.write_pgm((dir / "hull.pgm").string());
  nlohmann::json report = {{"input_cells", k.count()}, {"hull_cells", h.count()},
                           {"input_poly_convex", h == k}, {"grid", k.sidecar()}};
  if (j.contains("connect")) {
    cplx p1, p2;
    std::vector<cplx> q;
    with_field_diagnostics(cfg.name + " /connect", [&] {
      const auto& c = j.at("connect");
      p1 = cplx_at(c, "p1");
      p2 = cplx_at(c, "p2");
      for (const auto& z : c.value("q", nlohmann::json::array())) q.push_back(cplx_from_json(z));
    });
    const ConnectResult r = connect_avoiding_ex(k, p1, p2, q);
    r.k.write_pgm((dir / "connected.pgm").string());
    const auto labels = r.k.components();
    const bool joined = r.k.component_of(r.k.cell_of(p1), labels) != 0 &&
                        r.k.component_of(r.k.cell_of(p1), labels) == r.k.component_of(r.k.cell_of(p2), labels);
    const bool q_out = std::none_of(q.begin(), q.end(), [&](cplx z) { return r.k.contains(z); });
    const bool convex = is_poly_convex(r.k);
    report["connect"] = {{"cells", r.k.count()},           {"path_cells", r.path.size()},
                         {"excised_runs", r.excised_runs}, {"skipped_runs", r.skipped_runs},
                         {"hulled_input", r.hulled_input}, {"unchanged", r.unchanged},
                         {"joined", joined},               {"q_excluded", q_out},
                         {"poly_convex", convex},          {"contains_input", k.subset_of(r.k)}};
    write_json(dir / "hull.json", report);
    return joined && q_out && convex && k.subset_of(r.k) ? kPass : kViolation;
  }
  write_json(dir / "hull.json", report);
  return kPass;
}

int cmd_verify(const Global& g, const std::string& suite, const std::string& target) {
  const auto& suites = verify_suites();
  if (std::find(suites.begin(), suites.end(), suite) == suites.end()) throw ConfigError("unknown suite: " + suite);
  const ConfigFile cfg = load_config(g.config);
  VerifyOptions opt;
  reject_unknown(cfg.json, {{"slice", opt.slice.to_json()}, {"budget", 0}, {"samples", 0}, {"instances", 0}, {"seed", 0u}},
                 cfg.name);
  with_field_diagnostics(cfg.name, [&] {
    const nlohmann::json& j = cfg.json;
    if (j.contains("slice")) opt.slice = SliceSpec::from_json(j.at("slice"));
    opt.budget = j.value("budget", opt.budget);
    opt.samples = j.value("samples", opt.samples);
    opt.instances = j.value("instances", opt.instances);
    opt.seed = j.value("seed", opt.seed);
    if (opt.budget < 1 || opt.samples < 1 || opt.instances < 1)
      throw InvalidArgument("budget, samples and instances must be positive");
  });
  if (g.seed) opt.seed = *g.seed;
  opt.workers = g.workers;
  nlohmann::json t;
  if (!target.empty()) {
    ConfigFile here;
    t = load_referenced(here, target);
  }
  VerifyReport report;
  with_field_diagnostics(target.empty() ? "target" : target, [&] { report = run_verify(suite, t, opt); });
  const fs::path dir = out_dir(g);
  write_json(dir / ("verify_" + suite + ".json"), report.to_json());
  for (const VerifyCheck& c : report.checks)
    if (!c.passed) std::cerr << "check failed: " << c.name << "\n";
  return report.passed() ? kPass : kViolation;
}

}  // namespace fbd::cli
