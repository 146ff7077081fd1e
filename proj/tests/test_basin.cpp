#include <cmath>

#include "doctest.h"
#include "fbd/basin.hpp"
#include "fbd/sampling.hpp"
#include "support.hpp"

using namespace fbd;
using fbd::test::pt;

namespace {

const CPoint kHenonP = pt({0.2, 0.2});

AutoSequence henon_sequence() {
  const AutoMap h = fbd::test::henon_example();
  return AutoSequence::constant(h, measure_certificate(h, kHenonP, 0.01, 4000, adapted_frame(h, kHenonP)));
}

AutoSequence half_sequence() {
  return AutoSequence::constant(AutoMap::half_scale(2), half_scale_certificate(CPoint::zero(2), 0.5));
}

AutoSequence quadratic_sequence() {
  ContractionCertificate c;
  c.p = CPoint::zero(2);
  c.rho = 0.05;
  c.s = 0.45;
  c.r = 0.55;
  c.delta = 0.05;
  c.lemma1_C = 2.1;
  return AutoSequence::constant(fbd::test::quadratic_test_map(), c);
}

std::vector<CPoint> slice_grid(const CPoint& center, double half_width, int n) {
  std::vector<CPoint> g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      CPoint z = center;
      z[0] += cplx(-half_width + 2 * half_width * (i + 0.5) / n, -half_width + 2 * half_width * (j + 0.5) / n);
      g.push_back(z);
    }
  return g;
}

}  // namespace

TEST_CASE("sequence construction and certificate soundness") {
  const AutoSequence seq = henon_sequence();
  CHECK_NOTHROW(seq.verify(1000));
  CHECK_NOTHROW(quadratic_sequence().verify(1000));
  CHECK(seq.map_at(7).type_name() == "henon");
  CHECK_THROWS_AS(seq.map_at(0), IndexOutOfRange);
  ContractionCertificate bad = seq.centers()[0].cert;
  bad.r = 0.9;
  CHECK_THROWS_AS(AutoSequence::constant(fbd::test::henon_example(), bad), InvalidBracket);
  bad = seq.centers()[0].cert;
  bad.p = CPoint::zero(2);
  CHECK_THROWS_AS(AutoSequence::constant(fbd::test::henon_example(), bad).verify(), FixedPointViolated);
  const AutoSequence back = AutoSequence::from_json(seq.to_json());
  CHECK(back.to_json().dump() == seq.to_json().dump());
}

TEST_CASE("classify examples") {
  const AutoSequence seq = henon_sequence();
  const double delta = seq.centers()[0].cert.delta;
  const BasinVerdict at_p = classify(seq, kHenonP);
  CHECK(at_p.attracted());
  CHECK(at_p.stage == 0);
  CHECK(classify(seq, kHenonP + pt({delta / 2, 0})).stage == 0);
  const BasinVerdict far = classify(seq, pt({5, 0}), kDefaultBudget, 1e3);
  CHECK(far.kind == BasinVerdict::Kind::Escaped);
  CHECK(far.stage <= 5);
  CHECK(classify(seq, pt({0.25, 0.2}), 0).kind == BasinVerdict::Kind::Undecided);
  CHECK_THROWS_AS(classify(seq, kHenonP, 10, 0.1), InvalidArgument);
}

TEST_CASE("classify_all is deterministic across worker counts") {
  const AutoSequence seq = henon_sequence();
  const auto grid = slice_grid(kHenonP, 1.0, 40);
  const auto a = classify_all(seq, grid, 500, 1e3, 1), b = classify_all(seq, grid, 500, 1e3, 3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(a[i].kind == b[i].kind);
    CHECK(a[i].stage == b[i].stage);
  }
}

TEST_CASE("classify is monotone in the budget") {
  const AutoSequence seq = henon_sequence();
  const auto grid = slice_grid(kHenonP, 1.5, 30);
  for (const CPoint& z : grid) {
    const BasinVerdict small = classify(seq, z, 3), large = classify(seq, z, 300);
    if (!small.decided()) continue;
    CHECK(large.kind == small.kind);
    CHECK(large.stage == small.stage);
  }
}

TEST_CASE("phi_eval examples") {
  const AutoSequence henon = henon_sequence();
  CHECK(distance(phi_eval(henon, kHenonP).value, kHenonP) < 1e-15);
  const AutoSequence half = half_sequence();
  for (const CPoint& z : fbd::test::random_points(2, 3, 20, 1)) CHECK(distance(phi_eval(half, z).value, z) < 1e-14);

  // functional equation A(Phi(z)) = Phi(F(z))
  const AutoSequence quad = quadratic_sequence();
  const AutoMap f = fbd::test::quadratic_test_map();
  const CPoint z = pt({0.01, 0.01});
  const CPoint lhs = phi_eval(quad, z).value * 0.5;
  const CPoint rhs = phi_eval(quad, f.apply(z)).value;
  CHECK(distance(lhs, rhs) < 1e-9);
  // closed form for this map: Phi(z, w) = (z + 4 w^2, w)
  CHECK(distance(phi_eval(quad, z).value, pt({0.01 + 4e-4, 0.01})) < 1e-15);

  CHECK_THROWS_AS(phi_eval(henon, pt({5, 0})), NotInBasin);
}

TEST_CASE("functional equation on samples of the capture ball") {
  for (const AutoSequence& seq : {henon_sequence(), quadratic_sequence()}) {
    const ContractionCertificate& c = seq.centers()[0].cert;
    const AutoMap& f = seq.map_at(1);
    const CMatrix a = f.jacobian_at(c.p);
    double worst = 0;
    for (const CPoint& v : volume_samples(2, c.delta, 1000, 3)) {
      const CPoint z = c.p + c.frame.metric_inv * v;
      const CPoint lhs = c.p + a * (phi_eval(seq, z).value - c.p);
      worst = std::max(worst, distance(lhs, phi_eval(seq, f.apply(z)).value));
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("differential of phi at the center") {
  const PhiDifferential half = dphi_at_p(half_sequence());
  CHECK((half.d - CMatrix::identity(2)).max_abs() < 1e-12);
  const PhiDifferential hen = dphi_at_p(henon_sequence(), 1e-5);
  CHECK((hen.d - CMatrix::identity(2)).max_abs() < 1e-5);
  CHECK(hen.richardson_gap < 1e-5);
  CHECK(std::abs(hen.d.det() - 1.0) < 1e-4);
  CHECK(std::abs(dphi_at_p(quadratic_sequence(), 1e-6).d.det() - 1.0) < 1e-4);
}

TEST_CASE("convergence report") {
  const ConvergenceReport half = convergence_report(half_sequence(), 100, 20);
  CHECK(half.exact);
  for (double d : half.stage_diffs) CHECK(d == 0);

  const ConvergenceReport quad = convergence_report(quadratic_sequence(), 200, 25);
  CHECK(quad.fitted_ratio <= 0.55 * 0.55 / 0.45);
  CHECK(quad.fitted_ratio == doctest::Approx(0.5).epsilon(0.05));
  CHECK(quad.observed_eps > 0);
  CHECK(quad.observed_R >= quad.observed_eps);

  const AutoSequence henon = henon_sequence();
  const ConvergenceReport hr = convergence_report(henon, 200, 25);
  CHECK(hr.fitted_ratio <= hr.predicted_ratio * 1.1);
  CHECK(hr.observed_eps > 0);
  const ConvergenceReport dense = convergence_report(henon, 800, 25);
  CHECK(dense.observed_eps <= hr.observed_eps * (1 + 1e-12));
  CHECK(dense.observed_eps >= hr.observed_eps * 0.95);

  const auto json = hr.to_json();
  CHECK(json["passes"] == true);
  CHECK(hr.to_csv().rfind("j,stage_diff\n", 0) == 0);
}

TEST_CASE("ratio violation carries the report") {
  // claim a bracket far tighter than the real ratios; the fit then exceeds the prediction
  ContractionCertificate c;
  c.p = CPoint::zero(2);
  c.rho = 0.05;
  c.s = 0.2;
  c.r = 0.3;
  c.delta = 0.05;
  const AutoSequence lying = AutoSequence::constant(fbd::test::quadratic_test_map(), c);
  try {
    convergence_report(lying, 100, 20);
    FAIL("expected RatioViolation");
  } catch (const RatioViolation& e) {
    CHECK(e.report().fitted_ratio > e.report().predicted_ratio * 1.1);
  }
}

TEST_CASE("union formula") {
  const AutoSequence seq = henon_sequence();
  const ContractionCertificate& c = seq.centers()[0].cert;
  CHECK(union_formula_check(seq, {kHenonP}, 10).disagreements.empty());
  std::vector<CPoint> ball;
  for (const CPoint& v : volume_samples(2, c.delta * 0.999, 1000, 4)) ball.push_back(c.p + c.frame.metric_inv * v);
  const UnionFormulaReport in_ball = union_formula_check(seq, ball, 10);
  CHECK(in_ball.n_attracted == 1000);
  CHECK(in_ball.n_union_members == 1000);
  const auto grid = slice_grid(kHenonP, 1.5, 200);
  const UnionFormulaReport sweep = union_formula_check(seq, grid, 2000, 1e3, 2);
  CHECK(sweep.disagreements.empty());
  CHECK(sweep.n_attracted > 0);
  CHECK(sweep.n_decided > sweep.n_attracted);
}

TEST_CASE("sequence equivalence") {
  const AutoSequence seq = henon_sequence();
  const auto grid = slice_grid(kHenonP, 1.5, 60);
  CHECK(sequence_equiv_check(seq, seq, grid, 1000).fraction() == 1.0);
  const AutoMap h = fbd::test::henon_example();
  const AutoSequence twice({}, {h, h}, seq.centers());
  CHECK(sequence_equiv_check(seq, twice, grid, 1000).fraction() == 1.0);
}

TEST_CASE("increasing limit driver") {
  const AutoMap h = AutoMap::henon(0.5, 0.3);
  const StagedMap same{[h](const CPoint& z) { return h.apply(z); }, [h](const CPoint& z) { return h.apply_inverse(z); }};
  const auto pts = fbd::test::random_points(2, 1, 50, 8);
  const IncreasingLimit constant({same, same, same, same}, {1, 0.5, 0.25, 0.125}, {pts, pts, pts}, {pts, pts, pts},
                                 1.0);
  const CPoint z = pt({0.3, cplx(0, 0.2)});
  CHECK(constant.forward(z, 1.0).value == h.apply(z));
  CHECK(constant.inverse(z, 1.0).value == h.apply_inverse(z));
  CHECK(constant.injectivity_spot_check(pts) == 1.0);

  CHECK_THROWS_AS(IncreasingLimit({same, same, same}, {1, 1, 1}, {pts, pts}, {pts, pts}, 1.0), InvalidArgument);
  const StagedMap shifted{[h](const CPoint& z) { return h.apply(z) + pt({1, 0}); },
                          [h](const CPoint& z) { return h.apply_inverse(z); }};
  CHECK_THROWS_AS(IncreasingLimit({same, shifted}, {1, 0.5}, {pts}, {pts}, 1.0), SupplierBoundViolated);

  // truncations of the limit map of a basin sequence, with a schedule read off the convergence report
  const AutoSequence quad = quadratic_sequence();
  const ConvergenceReport rep = convergence_report(quad, 100, 30);
  const AutoMap f = fbd::test::quadratic_test_map();
  std::vector<StagedMap> sup;
  std::vector<double> rho;
  for (int j = 0; j < 30; ++j) {
    sup.push_back({[f, j](const CPoint& z) {
                     CPoint y = z;
                     for (int i = 0; i < j; ++i) y = f.apply(y);
                     return y * std::pow(2.0, j);
                   },
                   [f, j](const CPoint& z) {
                     CPoint y = z * std::pow(0.5, j);
                     for (int i = 0; i < j; ++i) y = f.apply_inverse(y);
                     return y;
                   }});
    rho.push_back(j == 0 ? 1.0 : 2.0 * rep.stage_diffs[j - 1] + 1e-15);
  }
  // the truncations satisfy the bounds on B_delta; the inverses on the images, checked at the same points
  std::vector<CPoint> ball;
  for (const CPoint& v : shell_samples(2, 0.05, 100, 9)) ball.push_back(v);
  std::vector<std::vector<CPoint>> fsets(29, ball), isets(29, std::vector<CPoint>{});
  const IncreasingLimit lim(sup, rho, fsets, isets, 1e-6);
  for (const CPoint& z : fbd::test::random_points(2, 0.04, 20, 10)) {
    const LimitValue v = lim.forward(z, 1e-6);
    CHECK(distance(v.value, phi_eval(quad, z).value) <= v.tail_bound + 1e-14);
  }
}
