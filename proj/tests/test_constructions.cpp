#include <variant>

#include "doctest.h"
#include "fbd/constructions.hpp"
#include "support.hpp"

using namespace fbd;
using fbd::test::pt;

namespace {

bool is_half_scale(const AutoMap& f) { return std::holds_alternative<HalfScale>(f.variant()); }

const BuildResult& three_basins() {
  static const BuildResult r = [] {
    DisjointConfig c;
    c.m = 3;
    c.stages = 3;
    c.seed = 42;
    return build_disjoint_basins(c);
  }();
  return r;
}

}  // namespace

TEST_CASE("slice geometry") {
  SliceSpec s;
  s.resolution = 4;
  s.validate();
  const CPoint top_left = s.point(0, 0);
  CHECK(top_left[0].real() < 0);
  CHECK(top_left[0].imag() > 0);
  CHECK(s.grid().size() == 16);
  CHECK(SliceSpec::from_json(s.to_json()).to_json() == s.to_json());
  SliceSpec bad = s;
  bad.axis_v = s.axis_u * cplx(2.0);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = s;
  bad.resolution = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("one stage of the disjoint builder is the half-scale map") {
  DisjointConfig c;
  c.m = 2;
  c.stages = 1;
  const BuildResult r = build_disjoint_basins(c);
  REQUIRE(r.state.maps.size() == 1);
  CHECK(is_half_scale(r.state.maps[0]));
  REQUIRE(r.state.centers.size() == 1);
  CHECK(r.state.centers[0].norm() == 0);
  CHECK(r.state.radii[0] == 0.5);
}

TEST_CASE("disjoint builder keeps every stage invariant") {
  const BuildResult& r = three_basins();
  CHECK(r.state.stage == 3);
  CHECK(r.state.centers.size() == 3);
  for (const InvariantCheck& c : check_stage_invariants(r.state, 1000, 5)) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
  for (const Witness& w : r.state.witnesses) {
    CHECK(distance(r.state.forward(w.point), r.state.centers[w.basin]) < r.state.radii[w.basin]);
    const BasinVerdict v = classify(r.sequence, w.point);
    CHECK(v.attracted());
    CHECK(v.basin == w.basin);
  }
  for (std::size_t i = 0; i < r.state.preimages.size(); ++i) {
    const BasinVerdict v = classify(r.sequence, r.state.preimages[i]);
    CHECK(v.attracted());
    CHECK(v.basin == static_cast<int>(i));
  }
}

TEST_CASE("disjoint basins never share a slice point") {
  const BuildResult& r = three_basins();
  SliceSpec s;
  s.resolution = 60;
  CHECK(double_classified(r.sequence, s.grid(), 2000, 2) == 0);
}

TEST_CASE("stage state round-trips and is deterministic") {
  const BuildResult& r = three_basins();
  const StageState back = StageState::from_json(r.state.to_json());
  CHECK(back.to_json() == r.state.to_json());
  DisjointConfig c;
  c.m = 3;
  c.stages = 3;
  c.seed = 42;
  CHECK(build_disjoint_basins(c).sequence.to_json() == r.sequence.to_json());
}

TEST_CASE("a duplicated center fails the disjoint-balls invariant") {
  StageState s = three_basins().state;
  s.centers.push_back(s.centers[0]);
  s.radii.push_back(s.radii[0]);
  s.preimages.push_back(s.preimages[0]);
  s.center_stage.push_back(s.center_stage[0]);
  bool found = false;
  for (const InvariantCheck& c : check_stage_invariants(s, 200, 1))
    if (c.name == "a:disjoint-balls") {
      found = true;
      CHECK_FALSE(c.passed);
    }
  CHECK(found);
}

TEST_CASE("disjoint builder validates its configuration") {
  DisjointConfig c;
  c.m = 5;
  CHECK_THROWS_AS(build_disjoint_basins(c), InvalidArgument);
  c.m = 3;
  c.stages = 13;
  CHECK_THROWS_AS(build_disjoint_basins(c), InvalidArgument);
  c.stages = 3;
  c.eps_schedule = {0.5, 0.6, 0.1};
  CHECK_THROWS_AS(build_disjoint_basins(c), InvalidArgument);
}

TEST_CASE("tuck without scaling or expulsion stays near the identity") {
  const std::vector<CPoint> anchors = {pt({0.5, 0}), pt({0, 0.5}), pt({-0.3, 0.2})};
  const TuckResult t = tuck_step_ex(anchors, 0, {}, 40, 0.02);
  CHECK(t.s == 0);
  const AutoMap f = t.composed();
  CHECK(identity_deviation(f, {{CPoint::zero(2), t.keep_radius}}, 2000, 3) < 0.02);
}

TEST_CASE("tuck with s = 2 brings anchors of B_4 into the unit ball") {
  const std::vector<CPoint> anchors = {pt({3.2, 0}), pt({0, -3.5}), pt({cplx(1, 1), cplx(-1, 2)})};
  const std::vector<CPoint> expel = {pt({9, 9})};
  const TuckResult t = tuck_step_ex(anchors, 2, expel, 40);
  CHECK(t.factors.size() == 2);
  const AutoMap f = t.composed();
  for (const CPoint& a : anchors) CHECK(f.apply(a).norm() < 1);
  CHECK(f.apply(expel[0]).norm() > 40 * 4 * 0.25 * 0.9);
}

TEST_CASE("tuck rejects an expel point inside the anchors' hull") {
  const std::vector<CPoint> anchors = {pt({1, 0}), pt({-1, 0})};
  CHECK_THROWS_AS(tuck_step(anchors, 1, {pt({0.1, 0})}, 40), InvalidArgument);
}

TEST_CASE("henon-like tail fixes the origin with differential I/2") {
  const AutoMap f = henon_like_tail(0.2);
  CHECK(f.apply(CPoint::zero(2)).norm() == 0);
  const CMatrix d = f.jacobian_at(CPoint::zero(2));
  CHECK(std::abs(d(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(d(1, 1) - 0.5) < 1e-12);
  CHECK(std::abs(d(0, 1)) < 1e-12);
  CHECK(std::abs(d(1, 0)) < 1e-12);
  CPoint z = pt({10, 10});
  for (int i = 0; i < 10 && z.finite() && z.norm() < 1e100; ++i) z = f.apply(z);
  CHECK(!(z.norm() < 10));
}

TEST_CASE("one line and one stage give the half-scale map") {
  LinesConfig c;
  c.lines = {LineSpec{}};
  c.stages = 1;
  const LinesResult r = build_line_intersector(c);
  REQUIRE(r.sequence.maps().size() == 1);
  CHECK(is_half_scale(r.sequence.maps()[0]));
  REQUIRE(r.excluded.size() == 1);
  CHECK(r.sequence.maps()[0].apply(r.excluded[0]).norm() > 1);
}

TEST_CASE("two transverse lines meet the basin in one run each") {
  LinesConfig c;
  c.lines = {LineSpec{}, LineSpec{pt({0.3, 0}), pt({0.4, 1})}};
  c.stages = 6;
  c.seed = 7;
  const LinesResult r = build_line_intersector(c);
  const ConnectivityReport rep = line_connectivity(r, c, 1000, kDefaultBudget, 2);
  INFO(rep.to_json().dump());
  CHECK(rep.passes());
  for (const CPoint& q : r.excluded) CHECK_FALSE(classify(r.sequence, q).attracted());
}

TEST_CASE("one axis and one stage give the half-scale map") {
  VarietiesConfig c;
  c.varieties = {VarietySpec{}};
  c.stages = 1;
  const VarietiesResult r = build_variety_container(c);
  REQUIRE(r.sequence.maps().size() == 1);
  CHECK(is_half_scale(r.sequence.maps()[0]));
}

TEST_CASE("two axes are contained in the basin and the excluded point is not") {
  VarietiesConfig c;
  VarietySpec z, w;
  w.axis = 1;
  c.varieties = {z, w};
  c.stages = 6;
  const VarietiesResult r = build_variety_container(c);
  const ContainmentReport rep = variety_containment(r, c, 64, kDefaultBudget, 2);
  INFO(rep.to_json().dump());
  CHECK(rep.passes());
  CHECK(rep.sampled > 0);
}

TEST_CASE("excluded point inside the closed ball of radius 2 is rejected") {
  VarietiesConfig c;
  c.varieties = {VarietySpec{}};
  c.excluded = pt({1.5, 1});
  CHECK_THROWS_AS(build_variety_container(c), InvalidArgument);
  c.excluded = pt({7, 0});
  CHECK_THROWS_AS(build_variety_container(c), InvalidArgument);
}
