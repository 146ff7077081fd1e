#include "fbd/cpoint.hpp"

#include <utility>

namespace fbd {

cplx CMatrix::det() const {
  CMatrix m = *this;
  cplx d = 1.0;
  for (int col = 0; col < dim_; ++col) {
    int piv = col;
    for (int r = col + 1; r < dim_; ++r)
      if (std::abs(m.a_[r][col]) > std::abs(m.a_[piv][col])) piv = r;
    if (m.a_[piv][col] == cplx(0)) return 0.0;
    if (piv != col) {
      std::swap(m.a_[piv], m.a_[col]);
      d = -d;
    }
    d *= m.a_[col][col];
    for (int r = col + 1; r < dim_; ++r) {
      cplx f = m.a_[r][col] / m.a_[col][col];
      for (int c = col; c < dim_; ++c) m.a_[r][c] -= f * m.a_[col][c];
    }
  }
  return d;
}

CMatrix CMatrix::inverse(double tol) const {
  CMatrix m = *this;
  CMatrix inv = identity(dim_);
  const double scale = std::max(max_abs(), 1e-300);
  for (int col = 0; col < dim_; ++col) {
    int piv = col;
    for (int r = col + 1; r < dim_; ++r)
      if (std::abs(m.a_[r][col]) > std::abs(m.a_[piv][col])) piv = r;
    if (std::abs(m.a_[piv][col]) <= tol * scale) throw SingularDifferential("matrix is singular");
    std::swap(m.a_[piv], m.a_[col]);
    std::swap(inv.a_[piv], inv.a_[col]);
    const cplx p = m.a_[col][col];
    for (int c = 0; c < dim_; ++c) {
      m.a_[col][c] /= p;
      inv.a_[col][c] /= p;
    }
    for (int r = 0; r < dim_; ++r) {
      if (r == col) continue;
      const cplx f = m.a_[r][col];
      if (f == cplx(0)) continue;
      for (int c = 0; c < dim_; ++c) {
        m.a_[r][c] -= f * m.a_[col][c];
        inv.a_[r][c] -= f * inv.a_[col][c];
      }
    }
  }
  return inv;
}

Eigen2 eigen2(const CMatrix& m) {
  if (m.dim() != 2) throw DimensionMismatch("eigen2 requires a 2x2 matrix");
  const cplx a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const cplx tr = a + d;
  const cplx disc = std::sqrt((a - d) * (a - d) + 4.0 * b * c);
  Eigen2 e{{(tr + disc) / 2.0, (tr - disc) / 2.0}, CMatrix(2)};
  for (int k = 0; k < 2; ++k) {
    const cplx l = e.lambda[k];
    // pick the better-conditioned of the two null-space candidates
    CPoint v1{b, l - a};
    CPoint v2{l - d, c};
    CPoint v = v1.norm() >= v2.norm() ? v1 : v2;
    if (v.norm() == 0) v = (k == 0) ? CPoint{1.0, 0.0} : CPoint{0.0, 1.0};
    v *= 1.0 / v.norm();
    e.vectors(0, k) = v[0];
    e.vectors(1, k) = v[1];
  }
  return e;
}

}  // namespace fbd
