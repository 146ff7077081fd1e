#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "fbd/error.hpp"

namespace {

using namespace fbd::cli;

// FB_BASIN_WORKERS wins over --workers.
int resolve_workers(int flag) {
  const char* env = std::getenv("FB_BASIN_WORKERS");
  if (!env || !*env) return flag;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw fbd::ConfigError("FB_BASIN_WORKERS must be an integer in [1, 1024]");
  return static_cast<int>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-attracting basins: certify, build, render and verify"};
  app.require_subcommand(1);
  Global g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config seed)");
  app.add_option("--workers", g.workers, "worker threads (FB_BASIN_WORKERS overrides)")->check(CLI::Range(1, 1024));
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  std::function<int()> action;
  auto* certify = app.add_subcommand("certify", "measure or check a contraction certificate");
  certify->fallthrough();
  certify->callback([&] { action = [&] { return cmd_certify(g); }; });

  auto* render = app.add_subcommand("render", "render an attraction-time slice");
  render->fallthrough();
  render->callback([&] { action = [&] { return cmd_render(g); }; });

  auto* build = app.add_subcommand("build", "run a basin construction");
  build->fallthrough();
  build->require_subcommand(1);
  for (const char* kind : {"disjoint", "lines", "varieties"}) {
    auto* sub = build->add_subcommand(kind, std::string(kind) + " construction");
    sub->fallthrough();
    const std::string k = kind;
    sub->callback([&, k] { action = [&, k] { return cmd_build(g, k); }; });
  }

  auto* hull = app.add_subcommand("hull", "polynomial hull and connect-avoiding on a planar compact");
  hull->fallthrough();
  hull->callback([&] { action = [&] { return cmd_hull(g); }; });

  std::string suite, target;
  auto* verify = app.add_subcommand("verify", "run an invariant suite");
  verify->fallthrough();
  verify->add_option("--suite", suite, "suite name")->required();
  verify->add_option("--target", target, "sequence or build output JSON")->check(CLI::ExistingFile);
  verify->callback([&] { action = [&] { return cmd_verify(g, suite, target); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kConfigError;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    g.workers = resolve_workers(g.workers);
    return action();
  } catch (const fbd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fbd::FormatError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fbd::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fbd::StageFailed& e) {
    std::cerr << "build failed: " << e.what() << "\n";
    return kStageFailed;
  } catch (const fbd::Error& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kViolation;
  }
}
