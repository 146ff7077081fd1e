#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fbd::cli {

enum Exit { kPass = 0, kViolation = 1, kConfigError = 2, kStageFailed = 3 };

struct Global {
  std::string config;
  std::optional<std::uint64_t> seed;  // overrides the config seed when given
  int workers = 1;
  std::string out = "out";
};

int cmd_certify(const Global& g);
int cmd_render(const Global& g);
int cmd_build(const Global& g, const std::string& kind);
int cmd_hull(const Global& g);
int cmd_verify(const Global& g, const std::string& suite, const std::string& target);

}  // namespace fbd::cli
