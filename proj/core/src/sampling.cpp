#include "fbd/sampling.hpp"

#include <numbers>
#include <random>

namespace fbd {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Cranley-Patterson shift per coordinate, deterministic in seed.
std::vector<double> shifts(int n, std::uint64_t seed) {
  std::vector<double> s(n, 0.0);
  if (seed == 0) return s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : s) x = u(rng);
  return s;
}

double frac(double x) { return x - std::floor(x); }

// Gaussian pair from two uniforms (kept away from 0 to avoid log(0)).
std::pair<double, double> box_muller(double u1, double u2) {
  u1 = std::max(u1, 1e-300);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

CPoint direction_from(int dim, std::uint64_t index, const std::vector<double>& shift) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    CPoint v(dim);
    for (int k = 0; k < dim; ++k) {
      const double u1 = frac(radical_inverse(index + 1 + attempt * 7919, kPrimes[2 * k]) + shift[2 * k]);
      const double u2 = frac(radical_inverse(index + 1 + attempt * 7919, kPrimes[2 * k + 1]) + shift[2 * k + 1]);
      auto [a, b] = box_muller(u1, u2);
      v[k] = {a, b};
    }
    const double n = v.norm();
    if (n > 1e-12) return v * (1.0 / n);
  }
}

}  // namespace

CPoint halton_direction(int dim, std::uint64_t index, std::uint64_t seed) {
  return direction_from(dim, index, shifts(2 * dim + 1, seed));
}

std::vector<CPoint> shell_samples(int dim, double rho, int n, std::uint64_t seed, int shells) {
  const auto sh = shifts(2 * dim + 1, seed);
  std::vector<CPoint> out;
  out.reserve(n);
  for (int m = 0; m < n; ++m) {
    // contiguous index blocks per shell keep each shell's directions low-discrepancy
    const int shell = 1 + static_cast<int>((static_cast<long long>(m) * shells) / n);
    out.push_back(direction_from(dim, static_cast<std::uint64_t>(m), sh) * (rho * shell / shells));
  }
  return out;
}

std::vector<CPoint> volume_samples(int dim, double rho, int n, std::uint64_t seed) {
  const auto sh = shifts(2 * dim + 1, seed);
  std::vector<CPoint> out;
  out.reserve(n);
  for (int m = 0; m < n; ++m) {
    const double u = frac(radical_inverse(static_cast<std::uint64_t>(m) + 1, kPrimes[2 * dim]) + sh[2 * dim]);
    const double radius = rho * std::pow(u, 1.0 / (2.0 * dim));
    out.push_back(direction_from(dim, static_cast<std::uint64_t>(m), sh) * radius);
  }
  return out;
}

std::vector<CPoint> sphere_samples(int dim, double rho, int n, std::uint64_t seed) {
  const auto sh = shifts(2 * dim + 1, seed);
  std::vector<CPoint> out;
  out.reserve(n);
  for (int m = 0; m < n; ++m) out.push_back(direction_from(dim, static_cast<std::uint64_t>(m), sh) * rho);
  return out;
}

}  // namespace fbd
