#pragma once

// Convex iteration for rank-d solutions: alternate a linear-cost SDP with the
// closed-form cost update C = U U^T, where U spans the eigenvectors beyond the
// d largest, until the excess rank h(Z) vanishes.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cidgik/conic_solver.hpp"
#include "cidgik/distance_graph.hpp"
#include "cidgik/errors.hpp"
#include "cidgik/kinematic_model.hpp"
#include "cidgik/sdp_relaxation.hpp"
#include "cidgik/workspace.hpp"

namespace cidgik {

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& Z) {
  if (Z.rows() != Z.cols()) throw InputError("matrix must be square");
  if ((Z - Z.transpose()).norm() > 1e-9 * std::max(1.0, Z.norm())) throw InputError("matrix must be symmetric");
}

/// Eigenpairs in descending order, eigenvectors signed so their first nonzero
/// component is positive.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> descending_eigensystem(const Eigen::MatrixXd& Z) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Z);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues().reverse();
  Eigen::MatrixXd Q = eig.eigenvectors().rowwise().reverse();
  for (Eigen::Index c = 0; c < Q.cols(); ++c) {
    for (Eigen::Index r = 0; r < Q.rows(); ++r) {
      if (std::abs(Q(r, c)) > 1e-12) {
        if (Q(r, c) < 0.0) Q.col(c) *= -1.0;
        break;
      }
    }
  }
  return {lambda, Q};
}

}  // namespace detail

/// h(Z): sum of the eigenvalues beyond the d largest.
inline double excess_rank(const Eigen::MatrixXd& Z, int d) {
  detail::require_symmetric(Z);
  if (d < 0 || d > Z.rows()) throw InputError("rank target out of range");
  const Eigen::VectorXd lambda = descending_eigenvalues(Z);
  return lambda.tail(lambda.size() - d).sum();
}

struct RankDirection {
  Eigen::MatrixXd C;  ///< orthogonal projector onto the trailing eigenspace, trace side - d
};

/// Minimizer of tr(C Z) over 0 <= C <= I, tr(C) = side - d.
inline RankDirection direction_matrix(const Eigen::MatrixXd& Z, int d) {
  detail::require_symmetric(Z);
  if (d < 0 || d > Z.rows()) throw InputError("rank target out of range");
  const auto [lambda, Q] = detail::descending_eigensystem(Z);
  const Eigen::MatrixXd U = Q.rightCols(Q.cols() - d);
  return {U * U.transpose()};
}

// ---------------------------------------------------------------------------
// Verification against the original problem

struct Verification {
  bool success = false;
  double position_error = 0.0;   ///< max over goals, meters
  double direction_error = 0.0;  ///< max over goals with a direction, radians
  double max_penetration = 0.0;  ///< deepest sphere violation over joint points, meters
  double plane_violation = 0.0;  ///< meters
  std::vector<std::string> failures;  ///< subset of {"position", "direction", "collision", "plane"}
};

inline constexpr double kPositionTolerance = 0.01;
inline constexpr double kDirectionTolerance = 0.01;
inline constexpr double kPenetrationTolerance = 0.01;
inline constexpr double kPlaneTolerance = 0.01;

/// Checks a configuration with forward kinematics alone: end-effector goals,
/// spheres over every joint point (keep-in spheres over unanchored joints only)
/// and plane constraints.
inline Verification verify_solution(const RobotModel& robot, const std::vector<Goal>& goals,
                                    const WorkspaceSpec& workspace, const Configuration& theta) {
  Verification v;
  const KinematicState state = forward_kinematics(robot, theta);
  for (const auto& goal : goals) {
    const Pose& achieved = state.end_effectors.at(static_cast<std::size_t>(goal.end_effector));
    Pose target{goal.position, goal.direction.value_or(Eigen::VectorXd())};
    const PoseError err = pose_error(achieved, target);
    v.position_error = std::max(v.position_error, err.position);
    if (goal.direction) v.direction_error = std::max(v.direction_error, err.direction);
  }
  const JointPoints points = joint_points(robot, theta);
  for (Eigen::Index c = 0; c < points.points.cols(); ++c) {
    const Eigen::VectorXd x = points.points.col(c);
    const bool variable = static_cast<std::size_t>(c) < points.num_variable_columns;
    for (const auto& s : workspace.spheres)
      if (s.sense == SphereSense::keep_out || variable)
        v.max_penetration = std::max(v.max_penetration, sphere_penetration(x, s));
    if (!variable) continue;
    for (const auto& spec : workspace.planes)
      if (spec.vertex == "all" || spec.vertex == robot.label(points.ids[static_cast<std::size_t>(c)]))
        v.plane_violation = std::max(v.plane_violation, plane_violation(x, spec.plane));
  }
  if (!(v.position_error < kPositionTolerance)) v.failures.push_back("position");
  if (!(v.direction_error < kDirectionTolerance)) v.failures.push_back("direction");
  if (!(v.max_penetration < kPenetrationTolerance)) v.failures.push_back("collision");
  if (!(v.plane_violation < kPlaneTolerance)) v.failures.push_back("plane");
  v.success = v.failures.empty();
  return v;
}

// ---------------------------------------------------------------------------
// The outer loop

struct CidgikOptions {
  int max_iterations = 10;
  double h_tolerance = 1e-6;
  SolverSettings solver;
  bool warm_start = true;
  /// Stop when an inner solve runs out of iterations this far from feasibility:
  /// later cost matrices cannot repair an empty relaxation.
  double abandon_residual = 1e-3;
};

enum class CidgikStatus { converged, max_iterations, infeasible };

inline std::string to_string(CidgikStatus s) {
  switch (s) {
    case CidgikStatus::converged: return "converged";
    case CidgikStatus::max_iterations: return "max_iterations";
    case CidgikStatus::infeasible: return "infeasible";
  }
  return "?";
}

struct IterationRecord {
  double h = 0.0;  ///< on the PSD iterate returned by the solver
  SolveStatus solver_status = SolveStatus::max_iters;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;  ///< tr(C Z)
  int solver_iterations = 0;
  double solve_time = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  CidgikStatus status = CidgikStatus::max_iterations;
  std::optional<InfeasibilityCertificate> certificate;
  std::size_t best_index = 0;  ///< record whose iterate was returned
};

/// Convex iteration on a raw SDP: returns the trace and the best-h iterate.
struct RankResult {
  IterationTrace trace;
  Eigen::MatrixXd Z;
  double solve_time = 0.0;
};

inline RankResult convex_iteration(const SdpInstance& sdp, const CidgikOptions& options = {}) {
  if (options.max_iterations < 1) throw InputError("convex iteration needs at least one iteration");
  if (!(options.h_tolerance > 0.0)) throw InputError("rank tolerance must be positive");
  const auto start = std::chrono::steady_clock::now();
  const ConicSolver solver(sdp, options.solver);
  RankResult out;
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(sdp.side, sdp.side);
  std::optional<SolverState> state;
  double best_h = std::numeric_limits<double>::infinity();
  for (int k = 0; k < options.max_iterations; ++k) {
    SolveResult result = solver.solve(C, options.warm_start && state ? &*state : nullptr);
    state = result.state;
    IterationRecord rec;
    rec.solver_status = result.status;
    rec.primal_residual = result.primal_residual;
    rec.dual_residual = result.dual_residual;
    rec.objective = result.objective;
    rec.solver_iterations = result.iterations;
    rec.solve_time = result.wall_time;
    if (result.status == SolveStatus::infeasible) {
      rec.h = std::numeric_limits<double>::quiet_NaN();
      out.trace.records.push_back(rec);
      out.trace.status = CidgikStatus::infeasible;
      out.trace.certificate = result.certificate;
      if (out.Z.size() == 0) {
        out.Z = result.solution.Z;
        out.trace.best_index = out.trace.records.size() - 1;
      }
      break;
    }
    rec.h = excess_rank(result.solution.Z, sdp.dimension);
    out.trace.records.push_back(rec);
    if (rec.h < best_h || out.Z.size() == 0) {
      best_h = rec.h;
      out.Z = result.solution.Z;
      out.trace.best_index = out.trace.records.size() - 1;
    }
    if (rec.h < options.h_tolerance && result.status == SolveStatus::optimal) {
      out.Z = result.solution.Z;
      out.trace.best_index = out.trace.records.size() - 1;
      out.trace.status = CidgikStatus::converged;
      break;
    }
    if (result.status == SolveStatus::max_iters && result.primal_residual > options.abandon_residual) break;
    C = direction_matrix(result.solution.Z, sdp.dimension).C;
  }
  out.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct CidgikResult {
  CidgikStatus status = CidgikStatus::max_iterations;
  Eigen::MatrixXd X;  ///< d x num_points (graph variables then aux points)
  Configuration theta;
  double gram_gap = 0.0;
  double reconstruction_residual = 0.0;
  std::vector<int> degenerate_joints;
  Verification verification;
  IterationTrace trace;
  double setup_time = 0.0;  ///< lifting, seconds
  double solve_time = 0.0;  ///< convex iteration, seconds

  std::vector<double> h_trace() const {
    std::vector<double> h;
    for (const auto& r : trace.records) h.push_back(r.h);
    return h;
  }
  int solver_iterations() const {
    int total = 0;
    for (const auto& r : trace.records) total += r.solver_iterations;
    return total;
  }
};

/// Solves the IK problem: lift, run convex iteration, read the points off the
/// best iterate, recover joint angles and check them by forward kinematics.
inline CidgikResult cidgik_solve(const QcqpInstance& qcqp, const CidgikOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  const SdpInstance sdp = lift(qcqp);
  CidgikResult out;
  out.setup_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  RankResult rank = convex_iteration(sdp, options);
  out.trace = std::move(rank.trace);
  out.status = out.trace.status;
  out.solve_time = rank.solve_time;

  const ExtractedPoints points = extract_points(sdp, rank.Z);
  out.X = points.X;
  out.gram_gap = points.gram_gap;
  const auto& graph = qcqp.graph;
  const Eigen::MatrixXd joint_matrix = joint_point_matrix(graph, out.X.leftCols(graph.num_variables));
  const auto anchors = goal_points(graph);
  const Reconstruction rec = reconstruct_angles(graph.robot, joint_matrix, anchors);
  out.theta = rec.theta;
  out.reconstruction_residual = rec.residual;
  out.degenerate_joints = rec.degenerate_joints;
  out.verification = verify_solution(graph.robot, graph.goals, qcqp.workspace, out.theta);
  return out;
}

}  // namespace cidgik
