// Render throughput regression: speedup at w workers must be within 20% of linear, w = min(8, cores).
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <thread>

#include "fbd/render.hpp"

using namespace fbd;

namespace {

double seconds(const AutoSequence& seq, const RenderJob& job, int workers) {
  double best = 1e300;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    run_render(seq, job, workers);
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main() {
  const int cores = static_cast<int>(std::thread::hardware_concurrency());
  const int w = std::min(8, cores);
  if (w < 2) {
    std::printf("SKIP render scaling: %d hardware thread(s)\n", cores);
    return 77;
  }
  const CPoint p{cplx(0.2, 0), cplx(0.2, 0)};
  const AutoMap h = AutoMap::henon(0.1, 0.18);
  const AutoSequence seq = AutoSequence::constant(h, measure_certificate(h, p, 0.01, 4000, adapted_frame(h, p)));
  RenderJob job;
  job.slice.origin = CPoint{cplx(0, 0), cplx(0.2, 0)};
  job.slice.extent = 3;
  job.slice.resolution = 1024;
  job.format = "pgm";
  const double t1 = seconds(seq, job, 1), tw = seconds(seq, job, w);
  const double speedup = t1 / tw;
  const bool ok = speedup >= 0.8 * w;
  std::printf("%s render scaling: 1 worker %.3f s, %d workers %.3f s, speedup %.2f (need >= %.2f)\n",
              ok ? "PASS" : "FAIL", t1, w, tw, speedup, 0.8 * w);
  return ok ? 0 : 1;
}
