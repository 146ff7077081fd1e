#include <cmath>

#include "doctest.h"
#include "fbd/certificate.hpp"
#include "fbd/sampling.hpp"
#include "support.hpp"

using namespace fbd;
using fbd::test::pt;

namespace {

std::vector<AutoMap> variant_zoo() {
  return {
      AutoMap::half_scale(2),
      AutoMap::shear(2, 0, 1, Poly::dense({0, 0, 1})),
      AutoMap::shear(3, 2, 0, Poly::dense({cplx(0.3, 1), 0, cplx(0, -0.5), 0.25})),
      AutoMap::overshear(2, 1, 0, Poly::dense({0.1, cplx(0, 0.2)}), Poly::dense({0, 1, 0.5})),
      AutoMap::henon(0.1, 0.18),
      AutoMap::henon(cplx(0.3, -0.2), cplx(-1, 0.5)),
      AutoMap::affine(CMatrix(2, {2, 1, 0, cplx(0, 1)}), pt({1, cplx(0, -2)})),
      AutoMap::compose({AutoMap::henon(0.5, 0.1), AutoMap::shear(2, 1, 0, Poly::dense({0, 0, 0.2}))}),
  };
}

CMatrix fd_jacobian(const AutoMap& f, const CPoint& z, double h) {
  const int k = z.dim();
  CMatrix j(k);
  for (int c = 0; c < k; ++c) {
    CPoint e = CPoint::zero(k);
    e[c] = h;
    const CPoint d = f.apply(z + e) - f.apply(z - e);
    for (int r = 0; r < k; ++r) j(r, c) = d[r] / (2 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("apply examples") {
  CHECK(AutoMap::half_scale(2).apply(pt({1, 0})) == pt({0.5, 0}));
  CHECK(AutoMap::shear(2, 0, 1, Poly::dense({0, 0, 1})).apply(pt({0, 2})) == pt({4, 2}));
  CHECK(distance(fbd::test::henon_example().apply(pt({0.2, 0.2})), pt({0.2, 0.2})) < 1e-15);
}

TEST_CASE("composition applies first element first") {
  const AutoMap f = AutoMap::henon(0.3, 0.1), g = AutoMap::shear(2, 0, 1, Poly::dense({0, 0, 1}));
  const AutoMap fg = AutoMap::compose({f, g});
  for (const CPoint& z : fbd::test::random_points(2, 2, 20, 1)) CHECK(distance(fg.apply(z), g.apply(f.apply(z))) < 1e-14);
  CHECK_THROWS_AS(AutoMap::compose({f, AutoMap::half_scale(3)}), DimensionMismatch);
  CHECK_THROWS_AS(f.apply(CPoint(3)), DimensionMismatch);
}

TEST_CASE("apply_inverse examples") {
  CHECK(AutoMap::half_scale(2).apply_inverse(pt({0.5, 0})) == pt({1, 0}));
  const AutoMap h = AutoMap::henon(0.1, 0.18);
  const CPoint zp = pt({3, -1});
  // (z', w') -> (w', (w'^2 + c - z') / a)
  const CPoint expected = pt({-1, (1.0 + 0.18 - 3.0) / 0.1});
  CHECK(distance(h.apply_inverse(zp), expected) < 1e-12);
  CHECK(distance(h.apply(h.apply_inverse(zp)), zp) < 1e-12 * zp.norm());
  const AutoMap s = AutoMap::shear(2, 1, 0, Poly::dense({1, 0, 3})), t = AutoMap::henon(0.5, 0.2);
  const AutoMap st = AutoMap::compose({s, t});
  for (const CPoint& z : fbd::test::random_points(2, 3, 50, 2)) {
    CHECK(distance(st.apply_inverse(z), s.apply_inverse(t.apply_inverse(z))) < 1e-10 * (1 + z.norm()));
    CHECK(distance(st.inverse().apply(st.apply(z)), z) < 1e-10 * (1 + z.norm()));
  }
}

TEST_CASE("round-trip on every variant") {
  for (const AutoMap& m : variant_zoo())
    for (const CPoint& z : fbd::test::random_points(m.dim(), 10, 200, 3)) {
      CAPTURE(m.type_name());
      CHECK(distance(m.apply_inverse(m.apply(z)), z) < 1e-10 * (1 + z.norm()));
    }
}

TEST_CASE("jacobian examples and finite-difference consistency") {
  CHECK((AutoMap::half_scale(3).jacobian_at(pt({1, 2, 3})) - CMatrix::scalar(3, 0.5)).max_abs() == 0);
  CHECK((AutoMap::shear(2, 0, 1, Poly::dense({0, 0, 1})).jacobian_at(pt({0, 2})) - CMatrix(2, {1, 4, 0, 1})).max_abs() <
        1e-15);
  CHECK((fbd::test::henon_example().jacobian_at(pt({0.2, 0.2})) - CMatrix(2, {0.4, -0.1, 1, 0})).max_abs() < 1e-15);
  for (const AutoMap& m : variant_zoo())
    for (const CPoint& z : fbd::test::random_points(m.dim(), 1.5, 20, 4)) {
      CAPTURE(m.type_name());
      CHECK((fd_jacobian(m, z, 1e-6) - m.jacobian_at(z)).max_abs() < 1e-4);
    }
}

TEST_CASE("volume law for shears, overshears and Henon maps") {
  for (const CPoint& z : fbd::test::random_points(2, 2, 20, 5)) {
    CHECK(std::abs(std::abs(AutoMap::shear(2, 0, 1, Poly::dense({1, 2, 3})).jacobian_at(z).det()) - 1) < 1e-12);
    const Poly h = Poly::dense({0.2, cplx(0, 0.7)});
    const double expect = std::abs(std::exp(h(z[0])));
    CHECK(std::abs(std::abs(AutoMap::overshear(2, 1, 0, h, Poly::dense({0, 1})).jacobian_at(z).det()) - expect) <
          1e-12 * expect);
    const cplx a(0.3, -0.4);
    CHECK(std::abs(std::abs(AutoMap::henon(a, 1.0).jacobian_at(z).det()) - std::abs(a)) < 1e-12);
  }
  CHECK_THROWS_AS(AutoMap::henon(0, 1), InvalidArgument);
}

TEST_CASE("contraction bounds") {
  const auto hs = contraction_bounds(AutoMap::half_scale(2), CPoint::zero(2), 0.3, 1000);
  CHECK(hs.s_raw == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hs.r_raw == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hs.s_hat <= hs.r_hat);

  const AutoMap h = fbd::test::henon_example();
  const CPoint p = pt({0.2, 0.2});
  const NormFrame frame = adapted_frame(h, p);
  const auto hb = contraction_bounds(h, p, 0.01, 4000, frame);
  CHECK(hb.s_raw == doctest::Approx(std::sqrt(0.1)).epsilon(0.05));
  CHECK(hb.r_raw == doctest::Approx(std::sqrt(0.1)).epsilon(0.05));

  const auto qb = contraction_bounds(fbd::test::quadratic_test_map(), CPoint::zero(2), 0.05, 4000);
  CHECK(qb.s_hat >= 0.45);
  CHECK(qb.r_hat <= 0.55);
  CHECK(std::abs(qb.r_raw - qb.r_coarse) < 0.01);

  CHECK_THROWS_AS(contraction_bounds(h, CPoint::zero(2), 0.01, 1000), FixedPointViolated);
  CHECK_THROWS_AS(contraction_bounds(h, p, 0.01, 999), InvalidArgument);
}

TEST_CASE("second-order constant") {
  CHECK(lemma1_constant(AutoMap::half_scale(2), CPoint::zero(2), 0.5, 1000) < 1e-12);
  // A^{-1} F - id = (2 w^2, 0), sup of 2|w|^2 / ||(z, w)||^2 is 2
  const double c = lemma1_constant(fbd::test::quadratic_test_map(), CPoint::zero(2), 0.05, 4000);
  CHECK(c >= 2.0 * 0.98);
  CHECK(c <= 2.0 * 1.05 + 1e-9);
  const AutoMap h = fbd::test::henon_example();
  const CPoint p = pt({0.2, 0.2});
  const double c1 = lemma1_constant(h, p, 0.01, 2000), c2 = lemma1_constant(h, p, 0.01, 4000);
  CHECK(c1 > 0);
  CHECK(std::isfinite(c1));
  CHECK(std::abs(c2 - c1) <= 0.1 * c1);
  CHECK(lemma1_constant(h, p, 0.005, 2000) <= lemma1_constant(h, p, 0.01, 2000) * 1.05);
  CHECK_THROWS_AS(lemma1_constant(h, CPoint::zero(2), 0.01, 1000), FixedPointViolated);
}

TEST_CASE("schwarz delta") {
  CHECK(schwarz_delta(1, 0.4, 0.6) == doctest::Approx(0.1));
  CHECK(schwarz_delta(0.5, 0.4, 0.6) == doctest::Approx(0.05));
  CHECK_THROWS_AS(schwarz_delta(1, 0.3, 0.6), InvalidBracket);  // r^2 = 0.36 >= 0.3
  CHECK_THROWS_AS(schwarz_delta(1, 0.45, 0.8), InvalidBracket);
  CHECK_THROWS_AS(schwarz_delta(1, 0.6, 0.7), InvalidBracket);
}

TEST_CASE("schwarz delta guarantee on random perturbations") {
  const double rho = 1, s = 0.4, r = 0.6, delta = schwarz_delta(rho, s, r);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    // shears after A perturb it by c1 (w/2)^2 and c3 z'^2, both vanishing to second order at 0
    const cplx c1(u(rng), u(rng)), c3(u(rng), u(rng));
    const double scale = 0.99 * delta / (std::abs(c1) + std::abs(c3));
    const AutoMap f = AutoMap::compose({AutoMap::half_scale(2), AutoMap::shear(2, 0, 1, Poly::dense({0, 0, c1 * scale})),
                                        AutoMap::shear(2, 1, 0, Poly::dense({0, 0, c3 * scale}))});
    REQUIRE(half_scale_deviation(f, CPoint::zero(2), rho, 1000) < delta);
    const ContractionCertificate cert = half_scale_certificate(CPoint::zero(2), rho, s, r);
    auto [lo, hi] = sampled_ratio_range(f, cert, 1000);
    CHECK(lo >= s);
    CHECK(hi <= r);
  }
}

TEST_CASE("compose_range") {
  const std::vector<AutoMap> maps{AutoMap::henon(0.2, 0.1), AutoMap::shear(2, 0, 1, Poly::dense({0, 1, 1}))};
  const CPoint z = pt({cplx(0.3, 0.1), -0.7});
  CHECK(compose_range(maps, 1, 0).apply(z) == z);
  CHECK(compose_range(maps, 1, 1).apply(z) == maps[0].apply(z));
  CHECK(distance(compose_range(maps, 1, 2).apply(z), maps[1].apply(maps[0].apply(z))) < 1e-15);
  CHECK_THROWS_AS(compose_range(maps, 0, 1), IndexOutOfRange);
  CHECK_THROWS_AS(compose_range(maps, 1, 3), IndexOutOfRange);
}

TEST_CASE("json round-trip is deterministic") {
  for (const AutoMap& m : variant_zoo()) {
    const std::string a = m.to_json().dump();
    const AutoMap back = AutoMap::from_json(nlohmann::json::parse(a));
    CHECK(back.to_json().dump() == a);
    for (const CPoint& z : fbd::test::random_points(m.dim(), 2, 5, 6)) CHECK(back.apply(z) == m.apply(z));
  }
  CHECK(AutoMap::half_scale(2).to_json()["type"] == "halfscale");
  CHECK_THROWS(AutoMap::from_json(nlohmann::json{{"type", "nope"}}));
}

TEST_CASE("certificate json and validation") {
  ContractionCertificate c = half_scale_certificate(pt({1, 2}), 0.5);
  const ContractionCertificate back = ContractionCertificate::from_json(c.to_json());
  CHECK(back.delta == c.delta);
  CHECK(back.p == c.p);
  c.s = 0.3;
  CHECK_THROWS_AS(c.validate(), InvalidBracket);
  c.unsafe = true;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("sampling") {
  const auto shells = shell_samples(2, 0.7, 1600);
  double lo = 1e9, hi = 0;
  for (const CPoint& v : shells) {
    lo = std::min(lo, v.norm());
    hi = std::max(hi, v.norm());
  }
  CHECK(lo == doctest::Approx(0.7 / 16));
  CHECK(hi == doctest::Approx(0.7));
  const auto a = shell_samples(2, 1, 100, 5), b = shell_samples(2, 1, 100, 5), c = shell_samples(2, 1, 100, 6);
  CHECK(a[7] == b[7]);
  CHECK(!(a[7] == c[7]));
  for (const CPoint& v : volume_samples(3, 2, 100)) CHECK(v.norm() <= 2);
}
