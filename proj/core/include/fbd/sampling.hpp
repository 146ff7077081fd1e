#pragma once

#include <cstdint>
#include <vector>

#include "fbd/cpoint.hpp"

namespace fbd {

/// Quasi-uniform direction on the unit sphere of C^dim (= S^{2 dim - 1}) from a
/// Halton point, optionally Cranley-Patterson shifted by `seed`.
CPoint halton_direction(int dim, std::uint64_t index, std::uint64_t seed = 0);

/// Radial-shell samples of the closed ball of radius rho about the origin:
/// shell radii rho * i / shells (i = 1..shells), quasi-uniform directions.
/// `seed` selects an independent (shifted) sample set.
std::vector<CPoint> shell_samples(int dim, double rho, int n, std::uint64_t seed = 0, int shells = 16);

/// Volume-uniform quasi-random samples of the open ball of radius rho about the origin.
std::vector<CPoint> volume_samples(int dim, double rho, int n, std::uint64_t seed = 0);

/// Points on the sphere of radius rho.
std::vector<CPoint> sphere_samples(int dim, double rho, int n, std::uint64_t seed = 0);

}  // namespace fbd
