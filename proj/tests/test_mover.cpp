#include <random>

#include "doctest.h"
#include "fbd/mover.hpp"
#include "support.hpp"

using namespace fbd;
using fbd::test::pt;

TEST_CASE("moving with an empty keep set uses plain shears") {
  MoveRequest r;
  r.sources = {pt({0, 0})};
  r.targets = {pt({1, 1})};
  const MoverResult m = build_point_mover_ex(r);
  CHECK(distance(m.map.apply(r.sources[0]), r.targets[0]) < 1e-12);
  CHECK(m.damping == 0);
  CHECK(m.attempts == 1);
}

TEST_CASE("moving past a keep ball") {
  MoveRequest r;
  r.keep = {{CPoint::zero(2), 1.0}};
  r.sources = {pt({3, 0})};
  r.targets = {pt({3, 2})};
  r.epsilon = 0.1;
  const MoverResult m = build_point_mover_ex(r);
  CHECK(distance(m.map.apply(r.sources[0]), r.targets[0]) < 1e-9);
  CHECK(m.damping == 3);
  CHECK(m.sup_error < 0.1);
  CHECK(m.sup_error == doctest::Approx(2.0 / 27).epsilon(0.05));
  CHECK(identity_deviation(m.map, r.keep, 20000, 99) < 0.1);
}

TEST_CASE("sources equal to targets give the identity") {
  MoveRequest r;
  r.keep = {{CPoint::zero(2), 1.0}};
  r.sources = r.targets = {pt({3, 0}), pt({0, 3})};
  const AutoMap f = build_point_mover(r);
  const CPoint z = pt({0.3, -0.2});
  CHECK(f.apply(z) == z);
}

TEST_CASE("mover holds fixed points and several keep balls") {
  MoveRequest r;
  r.keep = {{pt({0, 0}), 0.5}, {pt({3, 3}), 0.5}};
  r.sources = {pt({1.5, -1}), pt({-1.5, 2})};
  r.targets = {pt({-1, 1.5}), pt({2, -1.5})};
  r.fixed_points = {pt({-2, -2})};
  r.epsilon = 0.05;
  const MoverResult m = build_point_mover_ex(r);
  for (std::size_t i = 0; i < r.sources.size(); ++i)
    CHECK(distance(m.map.apply(r.sources[i]), r.targets[i]) <= 1e-9 * (1 + r.targets[i].norm()));
  CHECK(distance(m.map.apply(r.fixed_points[0]), r.fixed_points[0]) <= 1e-12);
  CHECK(identity_deviation(m.map, r.keep, 20000, 1234) < r.epsilon);
  // the inverse undoes the move
  CHECK(distance(m.map.apply_inverse(r.targets[0]), r.sources[0]) < 1e-8);
}

TEST_CASE("mover is deterministic") {
  MoveRequest r;
  r.keep = {{pt({0, 0}), 1.0}};
  r.sources = {pt({2, 2})};
  r.targets = {pt({-2, 3})};
  r.seed = 17;
  CHECK(build_point_mover(r).to_json().dump() == build_point_mover(r).to_json().dump());
  CHECK(MoveRequest::from_json(r.to_json()).to_json() == r.to_json());
}

TEST_CASE("mover failures") {
  MoveRequest r;
  r.keep = {{pt({0, 0}), 1.0}};
  r.sources = {pt({3, 0})};
  r.targets = {pt({3, 2})};
  r.epsilon = 1e-30;
  r.max_degree = 8;
  r.max_retries = 1;
  r.unitary_retry = false;
  CHECK_THROWS_AS(build_point_mover(r), MoverFailed);

  MoveRequest inside = r;
  inside.sources = {pt({0.2, 0})};
  CHECK_THROWS_AS(build_point_mover(inside), InvalidArgument);

  MoveRequest clash;
  clash.sources = {pt({1, 0})};
  clash.targets = {pt({2, 0})};
  clash.fixed_points = {pt({5, 0})};
  clash.max_retries = 1;
  clash.unitary_retry = false;
  CHECK_THROWS_AS(build_point_mover(clash), GeneralPositionViolated);
  clash.unitary_retry = true;
  clash.max_retries = 8;
  const AutoMap f = build_point_mover(clash);
  CHECK(distance(f.apply(clash.sources[0]), clash.targets[0]) < 1e-9);
  CHECK(distance(f.apply(clash.fixed_points[0]), clash.fixed_points[0]) < 1e-12);
}

TEST_CASE("contractor fast paths") {
  JetRequest j;
  j.centers = {CPoint::zero(2)};
  j.rho = {0.5};
  j.delta = {0.5};
  const AutoMap f = build_multicenter_contractor(j, 0.01);
  CHECK(f.apply(pt({1, 2})) == pt({0.5, 1}));
  j.centers = {pt({1, -1})};
  const AutoMap g = build_multicenter_contractor(j, 0.01);
  CHECK(distance(g.apply(pt({3, 1})), pt({2, 0})) < 1e-15);
}

TEST_CASE("two-center contractor") {
  JetRequest j;
  j.centers = {pt({0, 0}), pt({4, 4})};
  j.rho = {0.2, 0.2};
  j.delta = {0.02, 0.02};
  const MoverResult m = build_multicenter_contractor_ex(j, 0.02);
  for (const CPoint& q : j.centers) CHECK(distance(m.map.apply(q), q) < 1e-14);
  CHECK(m.sup_error < 0.02);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(m.rho[i] <= 0.2);
    CHECK(contractor_deviation(m.map, j.centers[i], m.rho[i], 20000, 5) < std::min(0.02, m.delta[i]));
    const CMatrix d = m.map.jacobian_at(j.centers[i]);
    CHECK(std::abs(d(0, 0) - 0.5) < 1e-12);
    CHECK(std::abs(d(1, 1) - 0.5) < 1e-12);
    CHECK(std::abs(d(0, 1)) < 1e-12);
    CHECK(std::abs(d(1, 0)) < 1e-12);
  }
  // orbits starting in a ball contract towards its center
  const CPoint z0 = pt({0.05, -0.03});
  CPoint z = z0;
  for (int n = 1; n <= 10; ++n) {
    z = m.map.apply(z);
    CHECK(z.norm() <= std::pow(0.6, n) * z0.norm());
  }
  const CPoint w = pt({1.7, 0.4});
  CHECK(distance(m.map.apply_inverse(m.map.apply(w)), w) < 1e-10);
  CHECK(build_multicenter_contractor(j, 0.02).to_json().dump() == m.map.to_json().dump());
}

TEST_CASE("contractor general position") {
  JetRequest j;
  j.centers = {pt({0, 0}), pt({0, 4})};
  j.rho = {0.2, 0.2};
  j.delta = {0.02, 0.02};
  CHECK_THROWS_AS(build_multicenter_contractor(j, 0.02), GeneralPositionViolated);
  j.unitary_retry = true;
  const MoverResult m = build_multicenter_contractor_ex(j, 0.02);
  CHECK(m.conjugated);
  for (const CPoint& q : j.centers) CHECK(distance(m.map.apply(q), q) < 1e-12);
  CHECK(JetRequest::from_json(j.to_json()).to_json() == j.to_json());
}

TEST_CASE("random unitary") {
  const CMatrix u = random_unitary(3);
  const CMatrix p = u * u.adjoint();
  CHECK(std::abs(p(0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(p(0, 1)) < 1e-14);
  CHECK(std::abs(p(1, 1) - 1.0) < 1e-14);
}
