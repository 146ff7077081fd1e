#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>

#include "fbd/error.hpp"

namespace fbd {

using cplx = std::complex<double>;

/// Largest ambient dimension supported by the fixed-capacity point and matrix types.
inline constexpr int kMaxDim = 4;

/// A point of C^k, k <= kMaxDim, stored inline.
class CPoint {
 public:
  CPoint() = default;
  explicit CPoint(int dim) : dim_(dim) { check_dim(dim); }
  CPoint(std::initializer_list<cplx> coords) : dim_(static_cast<int>(coords.size())) {
    check_dim(dim_);
    int i = 0;
    for (const cplx& c : coords) c_[i++] = c;
  }
  explicit CPoint(std::span<const cplx> coords) : dim_(static_cast<int>(coords.size())) {
    check_dim(dim_);
    for (int i = 0; i < dim_; ++i) c_[i] = coords[i];
  }

  static CPoint zero(int dim) { return CPoint(dim); }

  int dim() const { return dim_; }
  cplx& operator[](int i) { return c_[i]; }
  const cplx& operator[](int i) const { return c_[i]; }
  std::span<const cplx> coords() const { return {c_.data(), static_cast<std::size_t>(dim_)}; }

  CPoint& operator+=(const CPoint& o) {
    for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  CPoint& operator-=(const CPoint& o) {
    for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  CPoint& operator*=(cplx s) {
    for (int i = 0; i < dim_; ++i) c_[i] *= s;
    return *this;
  }
  friend CPoint operator+(CPoint a, const CPoint& b) { return a += b; }
  friend CPoint operator-(CPoint a, const CPoint& b) { return a -= b; }
  friend CPoint operator*(CPoint a, cplx s) { return a *= s; }
  friend CPoint operator*(cplx s, CPoint a) { return a *= s; }
  friend CPoint operator-(CPoint a) { return a *= -1.0; }
  friend bool operator==(const CPoint& a, const CPoint& b) {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

  double norm_sq() const {
    double s = 0;
    for (int i = 0; i < dim_; ++i) s += std::norm(c_[i]);
    return s;
  }
  double norm() const { return std::sqrt(norm_sq()); }
  bool finite() const {
    for (int i = 0; i < dim_; ++i)
      if (!std::isfinite(c_[i].real()) || !std::isfinite(c_[i].imag())) return false;
    return true;
  }

 private:
  static void check_dim(int d) {
    if (d < 1 || d > kMaxDim) throw DimensionMismatch("point dimension must be in [1, 4]");
  }
  std::array<cplx, kMaxDim> c_{};
  int dim_ = 0;
};

/// Hermitian inner product <a, b> = sum a_i conj(b_i).
inline cplx inner(const CPoint& a, const CPoint& b) {
  cplx s = 0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

inline double distance(const CPoint& a, const CPoint& b) { return (a - b).norm(); }

/// Dense k x k complex matrix, k <= kMaxDim.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw DimensionMismatch("matrix dimension must be in [1, 4]");
  }
  CMatrix(int dim, std::initializer_list<cplx> row_major) : CMatrix(dim) {
    if (static_cast<int>(row_major.size()) != dim * dim)
      throw DimensionMismatch("matrix initializer size");
    int i = 0;
    for (const cplx& v : row_major) {
      a_[i / dim][i % dim] = v;
      ++i;
    }
  }
  static CMatrix identity(int dim) {
    CMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.a_[i][i] = 1.0;
    return m;
  }
  static CMatrix scalar(int dim, cplx s) {
    CMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.a_[i][i] = s;
    return m;
  }

  int dim() const { return dim_; }
  cplx& operator()(int r, int c) { return a_[r][c]; }
  const cplx& operator()(int r, int c) const { return a_[r][c]; }

  CPoint operator*(const CPoint& x) const {
    if (x.dim() != dim_) throw DimensionMismatch("matrix-vector dimension mismatch");
    CPoint y(dim_);
    for (int r = 0; r < dim_; ++r) {
      cplx s = 0;
      for (int c = 0; c < dim_; ++c) s += a_[r][c] * x[c];
      y[r] = s;
    }
    return y;
  }
  CMatrix operator*(const CMatrix& b) const {
    if (b.dim_ != dim_) throw DimensionMismatch("matrix-matrix dimension mismatch");
    CMatrix m(dim_);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) {
        cplx s = 0;
        for (int k = 0; k < dim_; ++k) s += a_[r][k] * b.a_[k][c];
        m.a_[r][c] = s;
      }
    return m;
  }
  CMatrix operator-(const CMatrix& b) const {
    CMatrix m(dim_);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) m.a_[r][c] = a_[r][c] - b.a_[r][c];
    return m;
  }
  CMatrix operator*(cplx s) const {
    CMatrix m = *this;
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) m.a_[r][c] *= s;
    return m;
  }
  CMatrix adjoint() const {
    CMatrix m(dim_);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) m.a_[r][c] = std::conj(a_[c][r]);
    return m;
  }
  double max_abs() const {
    double m = 0;
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) m = std::max(m, std::abs(a_[r][c]));
    return m;
  }

  /// Determinant by Gaussian elimination with partial pivoting.
  cplx det() const;
  /// Inverse; throws SingularDifferential if the pivot falls below tol * max|a|.
  CMatrix inverse(double tol = 1e-14) const;

 private:
  std::array<std::array<cplx, kMaxDim>, kMaxDim> a_{};
  int dim_ = 0;
};

/// Eigen-decomposition of a 2x2 matrix: columns of `vectors` are unit eigenvectors.
struct Eigen2 {
  cplx lambda[2];
  CMatrix vectors;
};
Eigen2 eigen2(const CMatrix& m);

}  // namespace fbd
