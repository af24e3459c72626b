#pragma once

// Workspace constraint types: spheres to avoid or stay inside, planes, and the
// named obstacle environments used for benchmarking.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cidgik/errors.hpp"
#include "cidgik/kinematic_model.hpp"
#include "cidgik/random.hpp"

namespace cidgik {

enum class SphereSense { keep_out, keep_in };

struct Sphere {
  Eigen::VectorXd center;
  double radius = 1.0;
  SphereSense sense = SphereSense::keep_out;

  Sphere() = default;
  Sphere(Eigen::VectorXd c, double r, SphereSense s = SphereSense::keep_out)
      : center(std::move(c)), radius(r), sense(s) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("sphere radius must be positive");
    if (!center.allFinite()) throw InputError("sphere center must be finite");
  }
};

enum class PlaneRelation { on, above };

/// Points satisfy x.n = offset (on) or x.n >= offset (above).
struct Plane {
  Eigen::VectorXd normal;
  double offset = 0.0;
  PlaneRelation relation = PlaneRelation::on;

  Plane() = default;
  Plane(Eigen::VectorXd n, double c, PlaneRelation r) : normal(std::move(n)), offset(c), relation(r) {
    if (std::abs(normal.norm() - 1.0) > 1e-9) throw InputError("plane normal must have unit norm");
  }
};

/// Point on the segment between graph vertices `from` and `to`:
/// y = (1 - alpha) x_from + alpha x_to.
struct AuxPoint {
  int from = 0;
  int to = 0;
  double alpha = 0.5;
};

/// Squared-distance violation of a sphere constraint, zero when satisfied.
inline double sphere_violation(const Eigen::VectorXd& x, const Sphere& s) {
  if (x.size() != s.center.size()) throw InputError("point and sphere dimensions differ");
  const double squared = (x - s.center).squaredNorm();
  const double r2 = s.radius * s.radius;
  return s.sense == SphereSense::keep_out ? std::max(0.0, r2 - squared) : std::max(0.0, squared - r2);
}

/// Same constraint measured as a depth in meters.
inline double sphere_penetration(const Eigen::VectorXd& x, const Sphere& s) {
  const double distance = (x - s.center).norm();
  return s.sense == SphereSense::keep_out ? std::max(0.0, s.radius - distance)
                                          : std::max(0.0, distance - s.radius);
}

inline double plane_violation(const Eigen::VectorXd& x, const Plane& plane) {
  const double value = x.dot(plane.normal) - plane.offset;
  return plane.relation == PlaneRelation::on ? std::abs(value) : std::max(0.0, -value);
}

/// Plane constraint applied to one vertex (a point label such as "p_elbow")
/// or to every variable point ("all").
struct PlaneSpec {
  std::string vertex = "all";
  Plane plane;
};

/// Aux point between two labelled points.
struct AuxSpec {
  std::string from;
  std::string to;
  double alpha = 0.5;
};

/// Everything about the environment of an IK problem except the goals.
struct WorkspaceSpec {
  std::vector<Sphere> spheres;
  std::vector<PlaneSpec> planes;
  std::optional<double> self_collision_eps;  ///< squared-distance threshold between joint locations
  std::vector<AuxSpec> aux_points;
};

/// True iff some joint point (all columns of joint_points) is strictly inside a
/// keep-out sphere. Only joint locations are checked, not the links between them.
inline bool config_in_collision(const RobotModel& robot, const Configuration& theta,
                                const std::vector<Sphere>& spheres) {
  if (spheres.empty()) return false;
  const JointPoints points = joint_points(robot, theta);
  for (Eigen::Index c = 0; c < points.points.cols(); ++c)
    for (const auto& s : spheres)
      if (s.sense == SphereSense::keep_out && sphere_violation(points.points.col(c), s) > 0.0) return true;
  return false;
}

/// Broader check used when sampling problems: keep-out spheres on every joint
/// point, keep-in spheres and planes on the points of unanchored joints.
inline bool config_violates_workspace(const RobotModel& robot, const Configuration& theta,
                                      const WorkspaceSpec& workspace) {
  if (config_in_collision(robot, theta, workspace.spheres)) return true;
  const JointPoints points = joint_points(robot, theta);
  for (std::size_t c = 0; c < points.num_variable_columns; ++c) {
    const Eigen::VectorXd x = points.points.col(static_cast<Eigen::Index>(c));
    for (const auto& s : workspace.spheres)
      if (s.sense == SphereSense::keep_in && sphere_violation(x, s) > 0.0) return true;
    for (const auto& spec : workspace.planes) {
      if (spec.vertex != "all" && spec.vertex != robot.label(points.ids[c])) continue;
      if (plane_violation(x, spec.plane) > 1e-12) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Environment presets

inline constexpr std::array<std::string_view, 5> kEnvironmentNames = {"free", "octahedron", "cube",
                                                                      "icosahedron", "table"};

/// Unit-circumradius vertices of the named Platonic solid.
inline std::vector<Eigen::Vector3d> platonic_vertices(std::string_view name) {
  std::vector<Eigen::Vector3d> out;
  if (name == "octahedron") {
    for (int axis = 0; axis < 3; ++axis)
      for (double sign : {1.0, -1.0}) {
        Eigen::Vector3d v = Eigen::Vector3d::Zero();
        v[axis] = sign;
        out.push_back(v);
      }
  } else if (name == "cube") {
    for (double x : {1.0, -1.0})
      for (double y : {1.0, -1.0})
        for (double z : {1.0, -1.0}) out.push_back(Eigen::Vector3d(x, y, z) / std::sqrt(3.0));
  } else if (name == "icosahedron") {
    const double phi = std::numbers::phi;
    for (double a : {1.0, -1.0})
      for (double b : {phi, -phi}) {
        out.push_back(Eigen::Vector3d(0.0, a, b));
        out.push_back(Eigen::Vector3d(a, b, 0.0));
        out.push_back(Eigen::Vector3d(b, 0.0, a));
      }
    for (auto& v : out) v.normalize();
  } else {
    throw InputError("unknown Platonic solid '" + std::string(name) + "'");
  }
  return out;
}

struct EnvironmentOptions {
  std::size_t table_obstacles = 100;
  double table_radius_fraction = 0.05;  ///< sphere radius as a fraction of the robot's reach
};

/// Builds a named environment around the robot's base.
///   free         no constraints
///   octahedron,  keep-out spheres of radius 0.25 reach on the solid's vertices
///   cube,        at distance 0.5 reach from the base
///   icosahedron
///   table        plane through the base (all variable points above it) plus
///                seeded random spheres in a box above it
inline WorkspaceSpec make_environment(std::string_view name, const RobotModel& robot, std::uint64_t seed = 0,
                                      const EnvironmentOptions& options = {}) {
  WorkspaceSpec spec;
  if (name == "free") return spec;
  const bool known = std::find(kEnvironmentNames.begin(), kEnvironmentNames.end(), name) != kEnvironmentNames.end();
  if (!known) throw InputError("unknown environment '" + std::string(name) + "'");
  if (robot.dimension() != 3) throw InputError("environment '" + std::string(name) + "' needs a 3D robot");

  const double reach = robot.reach();
  const Eigen::Vector3d base = robot.base_point();
  if (name != "table") {
    for (const auto& v : platonic_vertices(name))
      spec.spheres.emplace_back(Eigen::VectorXd(base + 0.5 * reach * v), 0.25 * reach);
    return spec;
  }

  spec.planes.push_back({"all", Plane(Eigen::Vector3d::UnitZ(), base.z(), PlaneRelation::above)});
  const JointPoints fixed = joint_points(robot, Configuration::zeros(robot.num_joints()));
  const double radius = options.table_radius_fraction * reach;
  SplitMix64 rng(seed ^ 0x7AB1E5EEDULL);
  std::size_t draws = 0;
  while (spec.spheres.size() < options.table_obstacles) {
    if (++draws > 100 * options.table_obstacles + 1000)
      throw InputError("could not place table obstacles away from the base");
    const Eigen::Vector3d center(base.x() + rng.uniform(-reach, reach), base.y() + rng.uniform(-reach, reach),
                                 base.z() + rng.uniform(radius, reach));
    bool blocks_base = false;
    for (std::size_t c = fixed.num_variable_columns; c < fixed.ids.size(); ++c)
      blocks_base = blocks_base ||
                    (to_3d(fixed.points.col(static_cast<Eigen::Index>(c))) - center).norm() <= radius;
    if (!blocks_base) spec.spheres.emplace_back(Eigen::VectorXd(center), radius);
  }
  return spec;
}

}  // namespace cidgik
