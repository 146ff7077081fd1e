#pragma once

#include <span>
#include <vector>

#include "fbd/cpoint.hpp"

namespace fbd {

/// Hard cap on polynomial degree accepted anywhere in the library.
inline constexpr int kMaxPolyDegree = 64;

/// Root factor ((x - at) * inv_scale)^mult.
struct RootFactor {
  cplx at;
  int mult = 1;
  double inv_scale = 1.0;
  friend bool operator==(const RootFactor&, const RootFactor&) = default;
};

/// Value and first derivative of a polynomial at a point.
struct PolyJet {
  cplx value;
  cplx deriv;
};

/// Univariate complex polynomial in factored Newton form:
///
///   P(x) = prod_m ((x - r_m) s_m)^{e_m} * sum_i c_i prod_{l<i} (x - x_l)
///
/// A plain coefficient list is the special case with no root factors and all
/// Newton nodes at zero. The factored form keeps evaluation exact at the root
/// factors and well conditioned near them, which matters for shears that must
/// be flat on small balls around prescribed centers.
class Poly {
 public:
  Poly() = default;

  /// Monomial coefficients c_0 + c_1 x + ... .
  static Poly dense(std::vector<cplx> coeffs);
  static Poly constant(cplx c) { return dense({c}); }
  /// General factored form; `coeffs.size() == nodes.size() + 1` or nodes empty (treated as zeros).
  static Poly factored(std::vector<RootFactor> roots, std::vector<cplx> nodes, std::vector<cplx> coeffs);
  /// Newton interpolant through (nodes[i], values[i]); nodes must be distinct.
  static Poly interpolate(std::span<const cplx> nodes, std::span<const cplx> values);
  /// Hermite interpolant matching value and first derivative at each (distinct) node.
  static Poly hermite(std::span<const cplx> nodes, std::span<const cplx> values, std::span<const cplx> derivs);
  /// roots * q where q interpolates values / roots at the nodes, so the product matches `values`
  /// exactly at `nodes` and vanishes to the requested order at each root.
  static Poly damped_interpolate(std::vector<RootFactor> roots, std::span<const cplx> nodes,
                                 std::span<const cplx> values);

  int degree() const;
  bool is_zero() const;

  cplx operator()(cplx x) const;
  PolyJet jet(cplx x) const;
  /// P(x + d) - P(x) evaluated without cancellation in d.
  cplx diff(cplx x, cplx d) const;

  const std::vector<RootFactor>& roots() const { return roots_; }
  const std::vector<cplx>& nodes() const { return nodes_; }
  const std::vector<cplx>& coeffs() const { return coeffs_; }

  friend bool operator==(const Poly&, const Poly&) = default;

 private:
  std::vector<RootFactor> roots_;
  std::vector<cplx> nodes_;   // size coeffs_.size() - 1
  std::vector<cplx> coeffs_;  // Newton coefficients, at least one entry
  void validate() const;
};

/// exp(z) - 1 without cancellation for small |z|.
cplx cexpm1(cplx z);

}  // namespace fbd
