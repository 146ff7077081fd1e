#pragma once

#include <random>
#include <vector>

#include "fbd/automap.hpp"

namespace fbd::test {

inline std::vector<CPoint> random_points(int dim, double radius, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<CPoint> out;
  while (static_cast<int>(out.size()) < n) {
    CPoint z(dim);
    for (int k = 0; k < dim; ++k) z[k] = {u(rng), u(rng)};
    if (z.norm() <= 1.0) out.push_back(z * radius);
  }
  return out;
}

inline CPoint pt(std::initializer_list<cplx> c) { return CPoint(c); }

// (z, w) -> (z/2 + w^2, w/2): halve, then shear by 4 w^2 so the sheared term reads w^2 in the original w
inline AutoMap quadratic_test_map() {
  return AutoMap::compose({AutoMap::half_scale(2), AutoMap::shear(2, 0, 1, Poly::dense({0, 0, 4}))});
}

inline AutoMap henon_example() { return AutoMap::henon(0.1, 0.18); }

}  // namespace fbd::test
