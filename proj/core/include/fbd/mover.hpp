#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "fbd/automap.hpp"
#include "fbd/hull.hpp"

namespace fbd {

/// Relocate `sources` to `targets` while staying within epsilon of the identity on the keep balls
/// and fixing `fixed_points`. k = 2.
struct MoveRequest {
  std::vector<Ball> keep;
  std::vector<CPoint> sources;
  std::vector<CPoint> targets;
  std::vector<CPoint> fixed_points;
  double epsilon = 0.1;
  int max_degree = kMaxPolyDegree;
  int max_retries = 8;
  int samples_per_ball = 10000;
  std::uint64_t seed = 0;
  bool unitary_retry = true;  // retry in a random unitary frame (applied as conjugation) on general-position failures

  void validate() const;
  nlohmann::json to_json() const;
  static MoveRequest from_json(const nlohmann::json& j);
};

/// Prescribe the jet (value q_i, differential A = I/2) at every center.
struct JetRequest {
  std::vector<CPoint> centers;
  std::vector<double> rho;
  std::vector<double> delta;  // delta(rho_i); rescaled with rho_i when rho_i is halved
  int samples_per_ball = 10000;
  int max_halvings = 12;
  std::uint64_t seed = 0;
  bool unitary_retry = false;
  double delta_fraction = 1;  // per-ball bound is min(epsilon, delta_fraction * delta_i)

  void validate() const;
  nlohmann::json to_json() const;
  static JetRequest from_json(const nlohmann::json& j);
};

struct MoverResult {
  AutoMap map = AutoMap::identity(2);
  double sup_error = 0;        // sampled bound that was certified
  double fresh_sup_error = 0;  // same bound on an independent sample set
  int damping = 0;             // largest damping exponent used
  int attempts = 0;
  bool conjugated = false;
  std::vector<double> rho;     // final radii (contractor)
  std::vector<double> delta;   // final capture radii (contractor)
  int halvings = 0;
  nlohmann::json diagnostic() const;
};

/// Margin applied to the verification on an independent sample set.
inline constexpr double kFreshSampleMargin = 1.2;

/// Composition of damped shears moving sources to targets (1e-9), fixing fixed points, and within
/// epsilon of the identity on the keep balls. Throws MoverFailed (with diagnostic JSON) or
/// GeneralPositionViolated.
MoverResult build_point_mover_ex(const MoveRequest& req);
AutoMap build_point_mover(const MoveRequest& req);

/// Two overshear layers fixing every center with differential I/2 there, within epsilon of
/// A(z - q_i) + q_i on each B_rho_i(q_i) (rho_i halved as needed).
MoverResult build_multicenter_contractor_ex(const JetRequest& req, double epsilon);
AutoMap build_multicenter_contractor(const JetRequest& req, double epsilon);

/// Sampled sup of ||F(z) - A(z - q) - q|| over B_rho(q).
double contractor_deviation(const AutoMap& f, const CPoint& q, double rho, int n, std::uint64_t seed);

/// Sampled sup of ||F(z) - z|| over the balls.
double identity_deviation(const AutoMap& f, const std::vector<Ball>& balls, int n_per_ball, std::uint64_t seed);

/// Haar-random unitary 2x2 matrix from a seed.
CMatrix random_unitary(std::uint64_t seed);

}  // namespace fbd
