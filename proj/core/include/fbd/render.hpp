#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbd/basin.hpp"
#include "fbd/constructions.hpp"

namespace fbd {

/// Fixed palette of the indexed image.
///   index 0            Undecided, mid-gray (128, 128, 128)
///   index 1            Escaped, near-black (20, 20, 24)
///   index 2 + 31 b + l Attracted to basin b (mod 8) with lightness level l = min(stage, 30)
/// Basin hues are 0, 120, 240, 60, 180, 300, 30, 210 degrees at saturation 0.75; lightness falls
/// linearly from 0.78 at stage 0 to 0.28 at level 30.
namespace palette {
inline constexpr int kUndecided = 0;
inline constexpr int kEscaped = 1;
inline constexpr int kBasinHues = 8;
inline constexpr int kStageLevels = 31;
inline constexpr int kSize = 2 + kBasinHues * kStageLevels;  // 250
std::array<std::uint8_t, 3> rgb(int index);
int index_of(const BasinVerdict& v);
}  // namespace palette

struct RenderJob {
  SliceSpec slice;
  long long budget = 200;
  double escape_radius = kDefaultEscapeRadius;
  std::string palette = "basin-stage";  // the only policy
  std::string format = "png";           // "png" or "pgm"
  std::uint64_t seed = 0;
  bool record_timing = false;  // wall-clock seconds in the summary (breaks byte-identical reruns)

  void validate() const;
  nlohmann::json to_json() const;
  static RenderJob from_json(const nlohmann::json& j);
};

struct IndexedImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major palette indices, row 0 on top

  std::vector<std::uint8_t> png() const;  // 8-bit indexed PNG; throws Error when built without libpng
  std::vector<std::uint8_t> pgm() const;  // binary P5, gray = palette luminance
};

struct RenderSummary {
  long long pixels = 0;
  long long escaped = 0;
  long long undecided = 0;
  std::vector<long long> attracted;  // per basin
  double seconds = 0;
  nlohmann::json to_json(bool with_timing) const;
};

struct RenderResult {
  IndexedImage image;
  RenderSummary summary;
  std::vector<BasinVerdict> verdicts;  // row-major
};

/// Classifies every pixel of the slice in row bands across `workers` threads.
RenderResult run_render(const AutoSequence& seq, const RenderJob& job, int workers = 1);

bool png_available();

}  // namespace fbd
