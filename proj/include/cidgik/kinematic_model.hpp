#pragma once

// Revolute joint trees: forward kinematics, the configuration-invariant
// placement of axis points, and recovery of joint angles from points.

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cidgik/errors.hpp"

namespace cidgik {

/// Distance below which two points at the zero configuration are the same point.
inline constexpr double kCoincidenceTolerance = 1e-9;
/// Maximum triple product |(a_i x a_j) . (p_j - p_i)| for coplanar axes (scaled by offset).
inline constexpr double kCoplanarTolerance = 1e-9;
/// Allowed deviation of axis and rotation norms from one.
inline constexpr double kUnitNormTolerance = 1e-12;

inline Eigen::Quaterniond quaternion_from_rpy(const Eigen::Vector3d& rpy) {
  // Fixed-axis roll, pitch, yaw: R = Rz(yaw) Ry(pitch) Rx(roll).
  return Eigen::Quaterniond(Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()));
}

struct Joint {
  std::string name;
  int parent = -1;  ///< index of the parent joint, -1 for the fixed base
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  ///< meters, in the parent link frame
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();          ///< source of `rotation`, kept for serialization
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  ///< unit, in the joint frame
};

/// A tool point rigidly attached to the link of `parent`. `direction` is a unit
/// vector in that link frame; it defines the pointing direction of the pose.
struct EndEffector {
  int parent = 0;
  Eigen::Vector3d tip = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
};

/// Joint angles in radians, one per joint (indexed like RobotModel::joints()).
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(Eigen::VectorXd theta) : theta_(std::move(theta)) {
    if (!theta_.allFinite()) throw InputError("configuration contains non-finite angles");
  }
  static Configuration zeros(std::size_t n) {
    return Configuration(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  }

  const Eigen::VectorXd& theta() const { return theta_; }
  double operator[](std::size_t i) const { return theta_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const { return static_cast<std::size_t>(theta_.size()); }

 private:
  Eigen::VectorXd theta_;
};

/// End-effector position and pointing direction, both in R^d.
struct Pose {
  Eigen::VectorXd position;
  Eigen::VectorXd direction;
};

/// Identifies one point attached to the robot: the axis points p/q of a joint,
/// or the tip/direction points of an end-effector.
enum class PointKind { p = 0, q = 1, tip = 2, dir = 3 };

struct PointId {
  PointKind kind = PointKind::p;
  int index = 0;  ///< joint index for p/q, end-effector index for tip/dir
  friend auto operator<=>(const PointId&, const PointId&) = default;
};

inline std::string to_string(PointKind kind) {
  switch (kind) {
    case PointKind::p: return "p";
    case PointKind::q: return "q";
    case PointKind::tip: return "tip";
    case PointKind::dir: return "dir";
  }
  return "?";
}

/// Lifts a d-vector (d = 2 or 3) into R^3 with z = 0 for planar data.
inline Eigen::Vector3d to_3d(const Eigen::VectorXd& v) {
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(3, v.size()); ++i) out[i] = v[i];
  return out;
}

inline Eigen::VectorXd from_3d(const Eigen::Vector3d& v, int dimension) {
  return v.head(dimension);
}

struct KinematicState {
  std::vector<Eigen::Isometry3d> joint_frames;  ///< joint frames before their own rotation
  std::vector<Eigen::Isometry3d> link_frames;   ///< joint frames after rotating by theta_i
  std::vector<Pose> end_effectors;
};

class RobotModel {
 public:
  RobotModel() = default;

  /// Validates the joint tree and the geometric assumptions of the distance model.
  /// Throws ModelError describing the first violation found.
  RobotModel(int dimension, std::vector<Joint> joints, std::vector<EndEffector> end_effectors)
      : dimension_(dimension), joints_(std::move(joints)), end_effectors_(std::move(end_effectors)) {
    validate_topology();
    validate_units();
    compute_zero_frames();
    classify_anchors();
    validate_geometry();
  }

  int dimension() const { return dimension_; }
  std::size_t num_joints() const { return joints_.size(); }
  const std::vector<Joint>& joints() const { return joints_; }
  const Joint& joint(std::size_t i) const { return joints_.at(i); }
  const std::vector<EndEffector>& end_effectors() const { return end_effectors_; }
  const std::vector<int>& topological_order() const { return order_; }
  const std::vector<int>& children(std::size_t i) const { return children_.at(i); }
  bool anchored(std::size_t i) const { return anchored_.at(i); }
  bool has_q_points() const { return dimension_ == 3; }

  std::size_t num_unanchored() const {
    return static_cast<std::size_t>(std::count(anchored_.begin(), anchored_.end(), false));
  }

  int joint_index(std::string_view name) const {
    for (std::size_t i = 0; i < joints_.size(); ++i)
      if (joints_[i].name == name) return static_cast<int>(i);
    throw InputError("unknown joint '" + std::string(name) + "'");
  }

  /// Column order of joint_points(): p (and q in 3D) of unanchored joints in
  /// topological order, then the same for anchored joints.
  std::vector<PointId> point_ids() const {
    std::vector<PointId> ids;
    for (bool want_anchored : {false, true}) {
      for (int j : order_) {
        if (anchored_[j] != want_anchored) continue;
        ids.push_back({PointKind::p, j});
        if (has_q_points()) ids.push_back({PointKind::q, j});
      }
    }
    return ids;
  }

  std::string label(PointId id) const {
    if (id.kind == PointKind::p || id.kind == PointKind::q)
      return to_string(id.kind) + "_" + joints_.at(id.index).name;
    return to_string(id.kind) + "_" + std::to_string(id.index);
  }

  /// Zero-configuration world frame of joint i (before its rotation).
  const Eigen::Isometry3d& zero_frame(std::size_t i) const { return zero_frames_.at(i); }

  Eigen::Vector3d world_axis_at_zero(std::size_t i) const {
    return zero_frames_.at(i).linear() * joints_.at(i).axis;
  }

  /// Position of the first root joint, the center for environment presets.
  Eigen::Vector3d base_point() const { return zero_frames_.at(order_.front()).translation(); }

  /// Upper bound on the distance from the base point to any end-effector tip:
  /// the largest sum of link offsets along a root-to-tip path.
  double reach() const {
    double best = 0.0;
    for (const auto& ee : end_effectors_) {
      double length = ee.tip.norm();
      for (int j = ee.parent; j >= 0 && joints_[j].parent >= 0; j = joints_[j].parent)
        length += joints_[j].translation.norm();
      best = std::max(best, length);
    }
    return best;
  }

 private:
  void validate_topology() {
    if (dimension_ != 2 && dimension_ != 3) throw ModelError("dimension must be 2 or 3");
    if (joints_.empty()) throw ModelError("robot has no joints");
    const int n = static_cast<int>(joints_.size());
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < n; ++k)
        if (joints_[i].name == joints_[k].name)
          throw ModelError("duplicate joint name '" + joints_[i].name + "'");
      const int parent = joints_[i].parent;
      if (parent == i) throw ModelError("non-tree topology: joint '" + joints_[i].name + "' is its own parent");
      if (parent < -1 || parent >= n)
        throw ModelError("joint '" + joints_[i].name + "' has an invalid parent index");
    }
    for (int i = 0; i < n; ++i) {
      int steps = 0;
      for (int j = joints_[i].parent; j >= 0; j = joints_[j].parent)
        if (++steps > n) throw ModelError("non-tree topology: cycle through joint '" + joints_[i].name + "'");
    }
    children_.assign(joints_.size(), {});
    std::vector<int> roots;
    for (int i = 0; i < n; ++i) {
      if (joints_[i].parent < 0) roots.push_back(i);
      else children_[joints_[i].parent].push_back(i);
    }
    order_.clear();
    std::vector<int> frontier = roots;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const int j = frontier[head];
      order_.push_back(j);
      frontier.insert(frontier.end(), children_[j].begin(), children_[j].end());
    }
    for (const auto& ee : end_effectors_)
      if (ee.parent < 0 || ee.parent >= n) throw ModelError("end-effector has an invalid parent joint");
  }

  void validate_units() {
    for (auto& joint : joints_) {
      if (!joint.translation.allFinite() || !joint.axis.allFinite() || !joint.rotation.coeffs().allFinite())
        throw ModelError("joint '" + joint.name + "' has non-finite geometry");
      if (std::abs(joint.axis.norm() - 1.0) > kUnitNormTolerance)
        throw ModelError("joint '" + joint.name + "' axis is not a unit vector");
      if (std::abs(joint.rotation.norm() - 1.0) > kUnitNormTolerance)
        throw ModelError("joint '" + joint.name + "' rotation is not a unit quaternion");
    }
    for (const auto& ee : end_effectors_) {
      if (!ee.tip.allFinite() || !ee.direction.allFinite())
        throw ModelError("end-effector has non-finite geometry");
      if (std::abs(ee.direction.norm() - 1.0) > kUnitNormTolerance)
        throw ModelError("end-effector direction is not a unit vector");
    }
  }

  void compute_zero_frames() {
    zero_frames_.assign(joints_.size(), Eigen::Isometry3d::Identity());
    for (int j : order_) {
      const Joint& joint = joints_[j];
      const Eigen::Isometry3d parent =
          joint.parent < 0 ? Eigen::Isometry3d::Identity() : zero_frames_[joint.parent];
      Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
      origin.translate(joint.translation);
      origin.rotate(joint.rotation);
      zero_frames_[j] = parent * origin;
    }
  }

  // A joint is anchored when its axis line cannot move: it hangs off the base,
  // or its axis is collinear with an anchored parent's axis.
  void classify_anchors() {
    anchored_.assign(joints_.size(), false);
    for (int j : order_) {
      const int parent = joints_[j].parent;
      if (parent < 0) {
        anchored_[j] = true;
        continue;
      }
      anchored_[j] = anchored_[parent] && collinear_axes(parent, j);
    }
  }

  bool collinear_axes(int i, int j) const {
    const Eigen::Vector3d ai = world_axis_at_zero(i);
    const Eigen::Vector3d aj = world_axis_at_zero(j);
    const Eigen::Vector3d offset = zero_frames_[j].translation() - zero_frames_[i].translation();
    const Eigen::Vector3d radial = offset - ai.dot(offset) * ai;
    return ai.cross(aj).norm() < kCoincidenceTolerance && radial.norm() < kCoincidenceTolerance;
  }

  void validate_geometry() {
    if (dimension_ == 2) {
      for (std::size_t j = 0; j < joints_.size(); ++j) {
        const Eigen::Vector3d a = world_axis_at_zero(j);
        if (std::abs(std::abs(a.z()) - 1.0) > kCoplanarTolerance)
          throw ModelError("planar robot joint '" + joints_[j].name + "' axis is not perpendicular to the plane");
        if (std::abs(zero_frames_[j].translation().z()) > kCoplanarTolerance)
          throw ModelError("planar robot joint '" + joints_[j].name + "' lies outside the plane");
      }
      for (const auto& ee : end_effectors_) {
        const Eigen::Isometry3d& frame = zero_frames_[ee.parent];
        if (std::abs((frame * ee.tip).z()) > kCoplanarTolerance ||
            std::abs((frame.linear() * ee.direction).z()) > kCoplanarTolerance)
          throw ModelError("planar robot end-effector leaves the plane");
      }
      return;
    }
    for (std::size_t j = 0; j < joints_.size(); ++j) {
      const int i = joints_[j].parent;
      if (i < 0) continue;
      const Eigen::Vector3d ai = world_axis_at_zero(i);
      const Eigen::Vector3d aj = world_axis_at_zero(j);
      const Eigen::Vector3d offset = zero_frames_[j].translation() - zero_frames_[i].translation();
      if (std::abs(ai.cross(aj).dot(offset)) > kCoplanarTolerance * std::max(1.0, offset.norm()))
        throw ModelError("non-coplanar axes between joints '" + joints_[i].name + "' and '" + joints_[j].name + "'");
    }
    for (const auto& ee : end_effectors_) {
      const Eigen::Vector3d axis = joints_[ee.parent].axis;
      if (std::abs(axis.cross(ee.direction).dot(ee.tip)) > kCoplanarTolerance * std::max(1.0, ee.tip.norm()))
        throw ModelError("non-coplanar axes: end-effector direction on joint '" + joints_[ee.parent].name +
                         "' is skew to the joint axis");
    }
  }

  int dimension_ = 3;
  std::vector<Joint> joints_;
  std::vector<EndEffector> end_effectors_;
  std::vector<int> order_;
  std::vector<std::vector<int>> children_;
  std::vector<bool> anchored_;
  std::vector<Eigen::Isometry3d> zero_frames_;
};

// ---------------------------------------------------------------------------
// Robot description documents

namespace detail {

inline Eigen::Vector3d vector3(const nlohmann::json& value, const char* what) {
  if (!value.is_array() || (value.size() != 3 && value.size() != 2))
    throw ModelError(std::string(what) + " must be an array of 2 or 3 numbers");
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) throw ModelError(std::string(what) + " must contain numbers");
    out[static_cast<Eigen::Index>(i)] = value[i].get<double>();
  }
  return out;
}

inline nlohmann::json to_json_array(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace detail

inline RobotModel robot_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ModelError("robot document must be a JSON object");
  if (!doc.contains("dimension") || !doc["dimension"].is_number_integer())
    throw ModelError("robot document needs an integer 'dimension'");
  if (!doc.contains("joints") || !doc["joints"].is_array())
    throw ModelError("robot document needs a 'joints' array");
  const int dimension = doc["dimension"].get<int>();

  std::vector<Joint> joints;
  std::vector<std::string> parent_names;
  for (const auto& entry : doc["joints"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
      throw ModelError("every joint needs a string 'name'");
    Joint joint;
    joint.name = entry["name"].get<std::string>();
    parent_names.push_back(entry.value("parent", std::string("base")));
    if (entry.contains("translation")) joint.translation = detail::vector3(entry["translation"], "translation");
    if (entry.contains("rotation_rpy")) joint.rpy = detail::vector3(entry["rotation_rpy"], "rotation_rpy");
    joint.rotation = quaternion_from_rpy(joint.rpy);
    if (entry.contains("axis")) {
      const Eigen::Vector3d axis = detail::vector3(entry["axis"], "axis");
      if (axis.norm() < 1e-9) throw ModelError("joint '" + joint.name + "' has a zero axis");
      joint.axis = axis.normalized();
    } else if (dimension == 3) {
      throw ModelError("joint '" + joint.name + "' needs an 'axis'");
    }
    joints.push_back(std::move(joint));
  }
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < joints.size(); ++i)
      if (joints[i].name == name) return static_cast<int>(i);
    throw ModelError("unknown parent joint '" + name + "'");
  };
  for (std::size_t i = 0; i < joints.size(); ++i)
    joints[i].parent = parent_names[i] == "base" ? -1 : index_of(parent_names[i]);

  std::vector<EndEffector> end_effectors;
  if (doc.contains("end_effectors")) {
    if (!doc["end_effectors"].is_array()) throw ModelError("'end_effectors' must be an array");
    for (const auto& entry : doc["end_effectors"]) {
      if (!entry.is_object() || !entry.contains("parent") || !entry["parent"].is_string())
        throw ModelError("every end-effector needs a string 'parent'");
      EndEffector ee;
      ee.parent = index_of(entry["parent"].get<std::string>());
      if (entry.contains("tip")) ee.tip = detail::vector3(entry["tip"], "tip");
      if (entry.contains("direction")) {
        const Eigen::Vector3d dir = detail::vector3(entry["direction"], "direction");
        if (dir.norm() < 1e-9) throw ModelError("end-effector direction is zero");
        ee.direction = dir.normalized();
      } else {
        ee.direction = dimension == 3 ? joints[ee.parent].axis : Eigen::Vector3d::UnitX();
      }
      end_effectors.push_back(ee);
    }
  }
  return RobotModel(dimension, std::move(joints), std::move(end_effectors));
}

/// Parses a robot description document (JSON text).
inline RobotModel load_robot(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError(std::string("robot document is not valid JSON: ") + e.what());
  }
  return robot_from_json(doc);
}

inline nlohmann::json robot_to_json(const RobotModel& robot) {
  nlohmann::json doc;
  doc["dimension"] = robot.dimension();
  doc["joints"] = nlohmann::json::array();
  for (const auto& joint : robot.joints()) {
    doc["joints"].push_back({{"name", joint.name},
                             {"parent", joint.parent < 0 ? std::string("base") : robot.joint(joint.parent).name},
                             {"translation", detail::to_json_array(joint.translation)},
                             {"rotation_rpy", detail::to_json_array(joint.rpy)},
                             {"axis", detail::to_json_array(joint.axis)}});
  }
  doc["end_effectors"] = nlohmann::json::array();
  for (const auto& ee : robot.end_effectors()) {
    doc["end_effectors"].push_back({{"parent", robot.joint(ee.parent).name},
                                    {"tip", detail::to_json_array(ee.tip)},
                                    {"direction", detail::to_json_array(ee.direction)}});
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Kinematics

inline void check_configuration(const RobotModel& robot, const Configuration& theta) {
  if (theta.size() != robot.num_joints())
    throw InputError("configuration has " + std::to_string(theta.size()) + " angles, robot has " +
                     std::to_string(robot.num_joints()) + " joints");
}

inline KinematicState forward_kinematics(const RobotModel& robot, const Configuration& theta) {
  check_configuration(robot, theta);
  KinematicState state;
  state.joint_frames.assign(robot.num_joints(), Eigen::Isometry3d::Identity());
  state.link_frames.assign(robot.num_joints(), Eigen::Isometry3d::Identity());
  for (int j : robot.topological_order()) {
    const Joint& joint = robot.joint(j);
    const Eigen::Isometry3d parent =
        joint.parent < 0 ? Eigen::Isometry3d::Identity() : state.link_frames[joint.parent];
    Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();
    origin.translate(joint.translation);
    origin.rotate(joint.rotation);
    state.joint_frames[j] = parent * origin;
    state.link_frames[j] = state.joint_frames[j] * Eigen::AngleAxisd(theta[j], joint.axis);
  }
  const int d = robot.dimension();
  for (const auto& ee : robot.end_effectors()) {
    const Eigen::Isometry3d& link = state.link_frames[ee.parent];
    state.end_effectors.push_back({from_3d(link * ee.tip, d), from_3d(link.linear() * ee.direction, d)});
  }
  return state;
}

/// World position of an attached point for the given kinematic state.
inline Eigen::Vector3d point_position(const RobotModel& robot, const KinematicState& state, PointId id) {
  switch (id.kind) {
    case PointKind::p: return state.joint_frames.at(id.index).translation();
    case PointKind::q:
      return state.joint_frames.at(id.index).translation() +
             state.joint_frames.at(id.index).linear() * robot.joint(id.index).axis;
    case PointKind::tip: {
      const auto& ee = robot.end_effectors().at(id.index);
      return state.link_frames[ee.parent] * ee.tip;
    }
    case PointKind::dir: {
      const auto& ee = robot.end_effectors().at(id.index);
      return state.link_frames[ee.parent] * ee.tip + state.link_frames[ee.parent].linear() * ee.direction;
    }
  }
  return Eigen::Vector3d::Zero();
}

struct JointPoints {
  Eigen::MatrixXd points;     ///< d x ids.size(), columns ordered like ids
  std::vector<PointId> ids;   ///< RobotModel::point_ids()
  std::size_t num_variable_columns = 0;  ///< leading columns that belong to unanchored joints
};

inline JointPoints joint_points(const RobotModel& robot, const Configuration& theta) {
  const KinematicState state = forward_kinematics(robot, theta);
  JointPoints out;
  out.ids = robot.point_ids();
  out.points.resize(robot.dimension(), static_cast<Eigen::Index>(out.ids.size()));
  for (std::size_t c = 0; c < out.ids.size(); ++c) {
    out.points.col(static_cast<Eigen::Index>(c)) = from_3d(point_position(robot, state, out.ids[c]), robot.dimension());
    if (!robot.anchored(out.ids[c].index)) ++out.num_variable_columns;
  }
  return out;
}

/// Groups of points that move as one rigid body. Group 0 is the base; group
/// j + 1 is the link of joint j: its own axis points, the axis points of its
/// children and the points of end-effectors mounted on it.
inline std::vector<std::vector<PointId>> rigid_groups(const RobotModel& robot) {
  const bool with_q = robot.has_q_points();
  auto add_axis_points = [&](std::vector<PointId>& group, int j) {
    group.push_back({PointKind::p, j});
    if (with_q) group.push_back({PointKind::q, j});
  };
  std::vector<std::vector<PointId>> groups(robot.num_joints() + 1);
  for (int j : robot.topological_order()) {
    if (robot.joint(j).parent < 0) add_axis_points(groups[0], j);
    auto& group = groups[static_cast<std::size_t>(j) + 1];
    add_axis_points(group, j);
    for (int child : robot.children(j)) add_axis_points(group, child);
  }
  for (std::size_t e = 0; e < robot.end_effectors().size(); ++e) {
    auto& group = groups[static_cast<std::size_t>(robot.end_effectors()[e].parent) + 1];
    group.push_back({PointKind::tip, static_cast<int>(e)});
    group.push_back({PointKind::dir, static_cast<int>(e)});
  }
  return groups;
}

struct PointDistance {
  PointId a;
  PointId b;
  double squared = 0.0;
  /// Both points of a child joint lie on the parent's axis: the pair carries no
  /// information about the parent's angle.
  bool degenerate = false;
};

/// Squared distances between every pair of points sharing a rigid body,
/// evaluated at the zero configuration. They hold at every configuration.
inline std::vector<PointDistance> nominal_distances(const RobotModel& robot) {
  const KinematicState zero = forward_kinematics(robot, Configuration::zeros(robot.num_joints()));
  const auto groups = rigid_groups(robot);
  std::map<std::pair<PointId, PointId>, PointDistance> table;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& group = groups[g];
    // Axis points lying on the owning joint's axis line; a pair made only of
    // such points (and involving a child) cannot observe the owner's angle.
    std::vector<bool> on_axis(group.size(), false);
    const int owner = static_cast<int>(g) - 1;
    if (g > 0) {
      const Eigen::Vector3d origin = zero.joint_frames[owner].translation();
      const Eigen::Vector3d axis = zero.joint_frames[owner].linear() * robot.joint(owner).axis;
      for (std::size_t k = 0; k < group.size(); ++k) {
        if (group[k].kind != PointKind::p && group[k].kind != PointKind::q) continue;
        const Eigen::Vector3d u = point_position(robot, zero, group[k]) - origin;
        on_axis[k] = (u - axis.dot(u) * axis).norm() < kCoincidenceTolerance;
      }
    }
    for (std::size_t a = 0; a < group.size(); ++a) {
      for (std::size_t b = a + 1; b < group.size(); ++b) {
        const PointId lo = std::min(group[a], group[b]);
        const PointId hi = std::max(group[a], group[b]);
        if (lo == hi) continue;
        const double squared =
            (point_position(robot, zero, lo) - point_position(robot, zero, hi)).squaredNorm();
        auto& entry = table[{lo, hi}];
        entry.a = lo;
        entry.b = hi;
        entry.squared = squared;
        const bool involves_child = group[a].index != owner || group[b].index != owner;
        entry.degenerate = entry.degenerate || (on_axis[a] && on_axis[b] && involves_child);
      }
    }
  }
  std::vector<PointDistance> out;
  out.reserve(table.size());
  for (auto& [key, value] : table) out.push_back(value);
  return out;
}

/// Known positions of an end-effector's tip and (optionally) direction point.
struct EndEffectorPoints {
  int end_effector = 0;
  Eigen::VectorXd tip;
  std::optional<Eigen::VectorXd> dir;
};

struct Reconstruction {
  Configuration theta;
  double residual = 0.0;  ///< max column distance between joint_points(theta) and the input
  std::vector<int> degenerate_joints;  ///< joints whose angle could not be observed (set to 0)
};

/// Recovers joint angles from points laid out like joint_points(). Works root to
/// leaves: each joint's angle is the rotation about its world axis that best
/// aligns the zero-angle positions of the points it carries with the given ones.
inline Reconstruction reconstruct_angles(const RobotModel& robot, const Eigen::MatrixXd& points,
                                         std::span<const EndEffectorPoints> end_effector_points = {}) {
  const std::vector<PointId> ids = robot.point_ids();
  if (points.cols() != static_cast<Eigen::Index>(ids.size()) || points.rows() != robot.dimension())
    throw InputError("point matrix does not match the robot's joint point layout");

  std::map<PointId, Eigen::Vector3d> given;
  for (std::size_t c = 0; c < ids.size(); ++c) given[ids[c]] = to_3d(points.col(static_cast<Eigen::Index>(c)));
  for (const auto& ee : end_effector_points) {
    given[{PointKind::tip, ee.end_effector}] = to_3d(ee.tip);
    if (ee.dir) given[{PointKind::dir, ee.end_effector}] = to_3d(*ee.dir);
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(robot.num_joints()));
  std::vector<Eigen::Isometry3d> link(robot.num_joints(), Eigen::Isometry3d::Identity());
  Reconstruction out;
  for (int j : robot.topological_order()) {
    const Joint& joint = robot.joint(j);
    const Eigen::Isometry3d parent = joint.parent < 0 ? Eigen::Isometry3d::Identity() : link[joint.parent];
    Eigen::Isometry3d frame = Eigen::Isometry3d::Identity();
    frame.translate(joint.translation);
    frame.rotate(joint.rotation);
    frame = parent * frame;
    const Eigen::Vector3d center = frame.translation();
    const Eigen::Vector3d axis = frame.linear() * joint.axis;

    double sin_sum = 0.0;
    double cos_sum = 0.0;
    auto accumulate = [&](const Eigen::Vector3d& reference, PointId id) {
      const auto it = given.find(id);
      if (it == given.end()) return;
      Eigen::Vector3d u0 = reference - center;
      Eigen::Vector3d u = it->second - center;
      u0 -= axis.dot(u0) * axis;
      u -= axis.dot(u) * axis;
      sin_sum += axis.dot(u0.cross(u));
      cos_sum += u0.dot(u);
    };
    for (int child : robot.children(j)) {
      const Joint& c = robot.joint(child);
      const Eigen::Vector3d p0 = frame * c.translation;
      accumulate(p0, {PointKind::p, child});
      if (robot.has_q_points()) accumulate(p0 + frame.linear() * (c.rotation * c.axis), {PointKind::q, child});
    }
    for (std::size_t e = 0; e < robot.end_effectors().size(); ++e) {
      const auto& ee = robot.end_effectors()[e];
      if (ee.parent != j) continue;
      const Eigen::Vector3d tip0 = frame * ee.tip;
      accumulate(tip0, {PointKind::tip, static_cast<int>(e)});
      accumulate(tip0 + frame.linear() * ee.direction, {PointKind::dir, static_cast<int>(e)});
    }
    if (std::hypot(sin_sum, cos_sum) < kCoincidenceTolerance) {
      theta[j] = 0.0;
      out.degenerate_joints.push_back(j);
    } else {
      theta[j] = std::atan2(sin_sum, cos_sum);
    }
    link[j] = frame * Eigen::AngleAxisd(theta[j], joint.axis);
  }
  out.theta = Configuration(theta);
  const JointPoints rebuilt = joint_points(robot, out.theta);
  out.residual = (rebuilt.points - points).colwise().norm().maxCoeff();
  return out;
}

struct PoseError {
  double position = 0.0;   ///< meters
  double direction = 0.0;  ///< radians
};

inline PoseError pose_error(const Pose& achieved, const Pose& goal) {
  if (achieved.position.size() != goal.position.size())
    throw InputError("pose dimensions differ");
  PoseError err;
  err.position = (achieved.position - goal.position).norm();
  if (achieved.direction.size() > 0 && goal.direction.size() > 0) {
    const double c = achieved.direction.normalized().dot(goal.direction.normalized());
    err.direction = std::acos(std::clamp(c, -1.0, 1.0));
  }
  return err;
}

}  // namespace cidgik
