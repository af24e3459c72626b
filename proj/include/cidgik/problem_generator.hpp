#pragma once

// Random feasible IK problems: sample joint angles uniformly, reject samples
// that violate the workspace, and use the reached pose as the goal.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cidgik/distance_graph.hpp"
#include "cidgik/errors.hpp"
#include "cidgik/kinematic_model.hpp"
#include "cidgik/random.hpp"
#include "cidgik/workspace.hpp"

namespace cidgik {

inline constexpr std::size_t kMaxRejectionDraws = 10000;

struct GeneratedProblem {
  std::string environment;
  std::uint64_t seed = 0;
  WorkspaceSpec workspace;
  std::vector<Goal> goals;
  Configuration ground_truth;  ///< collision-free and reaching the goals exactly
  std::size_t draws = 0;
  QcqpInstance qcqp;
};

/// One goal per end-effector at the pose reached by `theta`.
inline std::vector<Goal> goals_from_configuration(const RobotModel& robot, const Configuration& theta) {
  const KinematicState state = forward_kinematics(robot, theta);
  std::vector<Goal> goals;
  for (std::size_t e = 0; e < state.end_effectors.size(); ++e)
    goals.push_back({static_cast<int>(e), state.end_effectors[e].position, state.end_effectors[e].direction});
  return goals;
}

inline GeneratedProblem generate(const RobotModel& robot, const WorkspaceSpec& workspace, std::uint64_t seed,
                                 std::string environment = "custom") {
  SplitMix64 rng(seed);
  const auto n = static_cast<Eigen::Index>(robot.num_joints());
  GeneratedProblem out;
  out.environment = std::move(environment);
  out.seed = seed;
  out.workspace = workspace;
  for (std::size_t draw = 1; draw <= kMaxRejectionDraws; ++draw) {
    Eigen::VectorXd theta(n);
    for (Eigen::Index i = 0; i < n; ++i) theta[i] = rng.angle();
    const Configuration candidate(theta);
    if (config_violates_workspace(robot, candidate, workspace)) continue;
    out.ground_truth = candidate;
    out.draws = draw;
    out.goals = goals_from_configuration(robot, candidate);
    out.qcqp = assemble_qcqp(robot, out.goals, workspace);
    return out;
  }
  throw InputError("environment '" + out.environment + "' too cluttered: no valid configuration in " +
                   std::to_string(kMaxRejectionDraws) + " draws");
}

/// Problem in a named environment preset; the preset is built with the same seed.
inline GeneratedProblem generate(const RobotModel& robot, std::string_view environment, std::uint64_t seed) {
  return generate(robot, make_environment(environment, robot, seed), seed, std::string(environment));
}

/// Problems for seeds base_seed, base_seed + 1, ...
inline std::vector<GeneratedProblem> batch(const RobotModel& robot, std::string_view environment, std::size_t count,
                                           std::uint64_t base_seed) {
  if (count < 1) throw InputError("empty campaign");
  std::vector<GeneratedProblem> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate(robot, environment, base_seed + i));
  return out;
}

}  // namespace cidgik
