#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbd/constructions.hpp"

namespace fbd {

struct VerifyCheck {
  std::string name;
  bool passed = true;
  nlohmann::json detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  SliceSpec slice;          // grid for union-formula and disjointness
  long long budget = 2000;
  int samples = 1000;       // per-suite sample count (line samples, ball samples, ...)
  int instances = 100;      // randomized instances for hull-props and mover-props
  std::uint64_t seed = 0;
  int workers = 1;
};

/// certificate, convergence, union-formula, disjointness, connectedness, containment, hull-props, mover-props
const std::vector<std::string>& verify_suites();

/// Runs one suite. `target` is a sequence JSON or a build output (see *_output below); the
/// hull-props and mover-props suites ignore it. Throws InvalidArgument for an unknown suite or a
/// target lacking what the suite needs.
VerifyReport run_verify(const std::string& suite, const nlohmann::json& target, const VerifyOptions& opt = {});

/// Build outputs: {"kind", "config", "sequence", ...} with the builder-specific state.
nlohmann::json disjoint_output(const DisjointConfig& cfg, const BuildResult& r);
nlohmann::json lines_output(const LinesConfig& cfg, const LinesResult& r);
nlohmann::json varieties_output(const VarietiesConfig& cfg, const VarietiesResult& r);

/// Sequence part of a target: the target itself, or its "sequence" member.
AutoSequence target_sequence(const nlohmann::json& target);

}  // namespace fbd
