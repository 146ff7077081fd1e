#include <set>

#include "doctest.h"
#include "fbd/render.hpp"
#include "support.hpp"

using namespace fbd;
using fbd::test::pt;

TEST_CASE("palette layout") {
  CHECK(palette::rgb(palette::kUndecided) == std::array<std::uint8_t, 3>{128, 128, 128});
  BasinVerdict v;
  CHECK(palette::index_of(v) == palette::kUndecided);
  v.kind = BasinVerdict::Kind::Escaped;
  CHECK(palette::index_of(v) == palette::kEscaped);
  v.kind = BasinVerdict::Kind::Attracted;
  v.basin = 1;
  v.stage = 0;
  const int early = palette::index_of(v);
  v.stage = 1000;
  const int late = palette::index_of(v);
  CHECK(late - early == palette::kStageLevels - 1);
  std::set<std::array<std::uint8_t, 3>> seen;
  for (int i = 0; i < palette::kSize; ++i) seen.insert(palette::rgb(i));
  CHECK(seen.size() == static_cast<std::size_t>(palette::kSize));
  CHECK_THROWS_AS(palette::rgb(palette::kSize), InvalidArgument);
}

TEST_CASE("half-scale attracts every pixel") {
  const AutoSequence seq = AutoSequence::constant(AutoMap::half_scale(2), half_scale_certificate(CPoint::zero(2), 0.5));
  RenderJob job;
  job.slice.resolution = 32;
  const RenderResult r = run_render(seq, job, 2);
  CHECK(r.summary.attracted[0] == 32 * 32);
  CHECK(r.summary.escaped == 0);
  CHECK(r.summary.undecided == 0);
}

AutoSequence henon_sequence() {
  const AutoMap h = AutoMap::henon(0.1, 0.18);
  const CPoint p = pt({0.2, 0.2});
  return AutoSequence::constant(h, measure_certificate(h, p, 0.01, 4000, adapted_frame(h, p)));
}

TEST_CASE("henon slice is mixed and byte-identical across reruns and worker counts") {
  const AutoSequence seq = henon_sequence();
  RenderJob job;
  job.slice.origin = pt({0, 0.2});
  job.slice.extent = 3;
  job.slice.resolution = 128;
  const RenderResult a = run_render(seq, job, 1), b = run_render(seq, job, 4), c = run_render(seq, job, 4);
  CHECK(a.summary.attracted[0] > 0);
  CHECK(a.summary.escaped > 0);
  CHECK(a.image.pixels == b.image.pixels);
  CHECK(b.image.pgm() == c.image.pgm());
  if (png_available()) {
    const auto png = b.image.png();
    CHECK(png == c.image.png());
    REQUIRE(png.size() > 8);
    CHECK(png[1] == 'P');
    CHECK(png[2] == 'N');
    CHECK(png[3] == 'G');
  }
  CHECK(a.summary.to_json(false) == c.summary.to_json(false));
  CHECK_FALSE(a.summary.to_json(false).contains("seconds"));
}

TEST_CASE("disjoint builder render shows three basins") {
  DisjointConfig c;
  c.m = 3;
  c.stages = 4;
  c.seed = 42;
  const BuildResult r = build_disjoint_basins(c);
  RenderJob job;
  job.slice.extent = 4;
  job.slice.resolution = 200;
  job.budget = 2000;
  const RenderResult img = run_render(r.sequence, job, 4);
  std::set<int> hues;
  for (std::uint8_t p : img.image.pixels)
    if (p >= 2) hues.insert((p - 2) / palette::kStageLevels);
  CHECK(hues.size() >= 3);
  CHECK(double_classified(r.sequence, job.slice.grid(), 2000, 4) == 0);
}

TEST_CASE("pgm header and job validation") {
  IndexedImage img;
  img.width = 2;
  img.height = 1;
  img.pixels = {0, 1};
  const auto pgm = img.pgm();
  CHECK(std::string(pgm.begin(), pgm.begin() + 11) == "P5\n2 1\n255\n");
  CHECK(pgm.size() == 13);
  CHECK(pgm[11] == 128);
  RenderJob job;
  job.budget = 0;
  CHECK_THROWS_AS(job.validate(), InvalidArgument);
  job.budget = 10;
  job.format = "gif";
  CHECK_THROWS_AS(job.validate(), InvalidArgument);
  CHECK(RenderJob::from_json(RenderJob{}.to_json()).to_json() == RenderJob{}.to_json());
}
