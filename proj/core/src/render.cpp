#include "fbd/render.hpp"

#include <chrono>
#include <cmath>

#ifdef FBD_HAVE_PNG
#include <png.h>
#endif

#include "parallel.hpp"

namespace fbd {

namespace palette {

namespace {

constexpr double kHues[kBasinHues] = {0, 120, 240, 60, 180, 300, 30, 210};
constexpr double kSaturation = 0.75;
constexpr double kLightFirst = 0.78;
constexpr double kLightLast = 0.28;

std::array<std::uint8_t, 3> hsl(double h, double s, double l) {
  const double c = (1 - std::abs(2 * l - 1)) * s;
  const double hp = h / 60;
  const double x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = l - c / 2;
  auto q = [&](double v) { return static_cast<std::uint8_t>(std::lround(255 * std::clamp(v + m, 0.0, 1.0))); };
  return {q(r), q(g), q(b)};
}

}  // namespace

std::array<std::uint8_t, 3> rgb(int index) {
  if (index == kUndecided) return {128, 128, 128};
  if (index == kEscaped) return {20, 20, 24};
  if (index < 0 || index >= kSize) throw InvalidArgument("palette index out of range");
  const int basin = (index - 2) / kStageLevels, level = (index - 2) % kStageLevels;
  const double l = kLightFirst + (kLightLast - kLightFirst) * level / (kStageLevels - 1);
  return hsl(kHues[basin], kSaturation, l);
}

int index_of(const BasinVerdict& v) {
  switch (v.kind) {
    case BasinVerdict::Kind::Undecided: return kUndecided;
    case BasinVerdict::Kind::Escaped: return kEscaped;
    case BasinVerdict::Kind::Attracted: break;
  }
  const int level = static_cast<int>(std::min<long long>(v.stage, kStageLevels - 1));
  return 2 + (v.basin % kBasinHues) * kStageLevels + level;
}

}  // namespace palette

void RenderJob::validate() const {
  slice.validate();
  if (budget < 1) throw InvalidArgument("budget must be at least 1");
  if (!(escape_radius > 0)) throw InvalidArgument("escape_radius must be positive");
  if (palette != "basin-stage") throw InvalidArgument("unknown palette policy: " + palette);
  if (format != "png" && format != "pgm") throw InvalidArgument("format must be png or pgm");
}

nlohmann::json RenderJob::to_json() const {
  return {{"slice", slice.to_json()}, {"budget", budget},   {"escape_radius", escape_radius},
          {"palette", palette},       {"format", format},   {"seed", seed},
          {"record_timing", record_timing}};
}

RenderJob RenderJob::from_json(const nlohmann::json& j) {
  RenderJob r;
  if (j.contains("slice")) r.slice = SliceSpec::from_json(j.at("slice"));
  r.budget = j.value("budget", r.budget);
  r.escape_radius = j.value("escape_radius", r.escape_radius);
  r.palette = j.value("palette", r.palette);
  r.format = j.value("format", r.format);
  r.seed = j.value("seed", r.seed);
  r.record_timing = j.value("record_timing", r.record_timing);
  return r;
}

bool png_available() {
#ifdef FBD_HAVE_PNG
  return true;
#else
  return false;
#endif
}

std::vector<std::uint8_t> IndexedImage::png() const {
#ifdef FBD_HAVE_PNG
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw Error("png encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> colors(palette::kSize);
  for (int i = 0; i < palette::kSize; ++i) {
    const auto c = palette::rgb(i);
    colors[i] = {c[0], c[1], c[2]};
  }
  png_set_PLTE(png, info, colors.data(), palette::kSize);
  png_write_info(png, info);
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
#else
  throw Error("built without libpng; use the pgm format");
#endif
}

std::vector<std::uint8_t> IndexedImage::pgm() const {
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  std::array<std::uint8_t, palette::kSize> gray{};
  for (int i = 0; i < palette::kSize; ++i) {
    const auto c = palette::rgb(i);
    gray[i] = static_cast<std::uint8_t>(std::lround(0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]));
  }
  out.reserve(out.size() + pixels.size());
  for (std::uint8_t p : pixels) out.push_back(gray[p]);
  return out;
}

nlohmann::json RenderSummary::to_json(bool with_timing) const {
  nlohmann::json j = {{"pixels", pixels}, {"attracted", attracted}, {"escaped", escaped}, {"undecided", undecided}};
  if (with_timing) j["seconds"] = seconds;
  return j;
}

RenderResult run_render(const AutoSequence& seq, const RenderJob& job, int workers) {
  job.validate();
  const auto start = std::chrono::steady_clock::now();
  const int n = job.slice.resolution;
  const std::size_t total = static_cast<std::size_t>(n) * n;
  RenderResult res;
  res.verdicts.resize(total);
  res.image.width = res.image.height = n;
  res.image.pixels.resize(total);
  constexpr std::size_t kBandRows = 4;
  const std::size_t bands = (static_cast<std::size_t>(n) + kBandRows - 1) / kBandRows;
  detail::parallel_for(bands, workers, [&](std::size_t band) {
    const std::size_t lo = band * kBandRows, hi = std::min<std::size_t>(lo + kBandRows, n);
    for (std::size_t row = lo; row < hi; ++row)
      for (int col = 0; col < n; ++col) {
        const std::size_t k = row * n + col;
        res.verdicts[k] = classify(seq, job.slice.point(col, static_cast<int>(row)), job.budget, job.escape_radius);
        res.image.pixels[k] = static_cast<std::uint8_t>(palette::index_of(res.verdicts[k]));
      }
  });
  RenderSummary& s = res.summary;
  s.pixels = static_cast<long long>(total);
  s.attracted.assign(seq.centers().size(), 0);
  for (const BasinVerdict& v : res.verdicts) {
    if (v.kind == BasinVerdict::Kind::Escaped) ++s.escaped;
    else if (v.kind == BasinVerdict::Kind::Undecided) ++s.undecided;
    else ++s.attracted[v.basin];
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace fbd
