#pragma once

// The distance-geometric IK model: a weighted DAG over the robot's attached
// points and goal anchors, and the feasibility QCQP built on top of it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cidgik/errors.hpp"
#include "cidgik/kinematic_model.hpp"
#include "cidgik/workspace.hpp"

namespace cidgik {

/// End-effector target: a tip position and, optionally, a pointing direction.
struct Goal {
  int end_effector = 0;
  Eigen::VectorXd position;
  std::optional<Eigen::VectorXd> direction;
};

/// Directed edge tail -> head carrying a squared distance. tail < head always.
struct Edge {
  int tail = 0;
  int head = 0;
  double squared_length = 0.0;
};

/// Vertices 0..num_variables-1 are unknown points (the columns of X), the
/// remaining ones are anchors (the columns of `anchors`).
struct DistanceGraph {
  RobotModel robot;
  std::vector<Goal> goals;
  int dimension = 3;
  int num_variables = 0;
  Eigen::MatrixXd anchors;  ///< d x m
  std::vector<Edge> edges;
  std::vector<std::string> labels;            ///< one per vertex
  std::map<PointId, int> point_vertex;        ///< attached point -> vertex (merged points share one)
  std::map<std::string, int> label_vertex;    ///< every point label -> vertex

  int num_anchors() const { return static_cast<int>(anchors.cols()); }
  int num_vertices() const { return num_variables + num_anchors(); }
  bool is_anchor(int v) const { return v >= num_variables; }
  Eigen::VectorXd anchor(int v) const { return anchors.col(v - num_variables); }

  int vertex(std::string_view label) const {
    const auto it = label_vertex.find(std::string(label));
    if (it == label_vertex.end()) throw InputError("unknown vertex '" + std::string(label) + "'");
    return it->second;
  }
};

namespace detail {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

inline void validate_goals(const RobotModel& robot, std::vector<Goal>& goals) {
  const auto d = static_cast<Eigen::Index>(robot.dimension());
  std::vector<bool> seen(robot.end_effectors().size(), false);
  for (auto& goal : goals) {
    if (goal.end_effector < 0 || goal.end_effector >= static_cast<int>(robot.end_effectors().size()))
      throw InputError("goal for unknown end-effector " + std::to_string(goal.end_effector));
    if (seen[goal.end_effector]) throw InputError("two goals for end-effector " + std::to_string(goal.end_effector));
    seen[goal.end_effector] = true;
    if (goal.position.size() != d || !goal.position.allFinite())
      throw InputError("goal position must be a finite vector of the robot's dimension");
    if (goal.direction) {
      if (goal.direction->size() != d || std::abs(goal.direction->norm() - 1.0) > 1e-6)
        throw InputError("goal direction must be a unit vector of the robot's dimension");
      goal.direction->normalize();
    }
  }
}

}  // namespace detail

/// Builds the distance graph for reaching `goals`. Anchors are the points of
/// anchored joints followed by, per goal, the tip position and (if a direction
/// is given) the point one meter along it. Points that coincide on a rigid body
/// are merged into one vertex.
inline DistanceGraph build_graph(const RobotModel& robot, std::vector<Goal> goals) {
  detail::validate_goals(robot, goals);
  const int d = robot.dimension();
  const KinematicState zero = forward_kinematics(robot, Configuration::zeros(robot.num_joints()));

  struct RawPoint {
    PointId id;
    bool fixed = false;
    Eigen::Vector3d at_zero;
    Eigen::Vector3d fixed_position;
  };
  std::vector<RawPoint> raw;
  std::map<PointId, int> raw_index;
  for (const PointId& id : robot.point_ids()) {
    const Eigen::Vector3d at_zero = point_position(robot, zero, id);
    raw_index[id] = static_cast<int>(raw.size());
    raw.push_back({id, robot.anchored(id.index), at_zero, at_zero});
  }
  for (const auto& goal : goals) {
    const PointId tip{PointKind::tip, goal.end_effector};
    raw_index[tip] = static_cast<int>(raw.size());
    raw.push_back({tip, true, point_position(robot, zero, tip), to_3d(goal.position)});
    if (goal.direction) {
      const PointId dir{PointKind::dir, goal.end_effector};
      raw_index[dir] = static_cast<int>(raw.size());
      raw.push_back({dir, true, point_position(robot, zero, dir), to_3d(goal.position + *goal.direction)});
    }
  }

  const auto groups = rigid_groups(robot);
  detail::DisjointSets sets(raw.size());
  for (const auto& group : groups)
    for (std::size_t a = 0; a < group.size(); ++a)
      for (std::size_t b = a + 1; b < group.size(); ++b) {
        const auto ia = raw_index.find(group[a]);
        const auto ib = raw_index.find(group[b]);
        if (ia == raw_index.end() || ib == raw_index.end()) continue;
        if ((raw[ia->second].at_zero - raw[ib->second].at_zero).norm() < kCoincidenceTolerance)
          sets.unite(ia->second, ib->second);
      }

  // A merged set is an anchor if any member is fixed.
  std::vector<int> root_fixed(raw.size(), -1);
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (!raw[r].fixed) continue;
    const int root = sets.find(static_cast<int>(r));
    if (root_fixed[root] < 0) {
      root_fixed[root] = static_cast<int>(r);
    } else if ((raw[root_fixed[root]].fixed_position - raw[r].fixed_position).norm() > kCoincidenceTolerance) {
      throw InputError("goal for " + robot.label(raw[r].id) + " conflicts with the fixed base geometry");
    }
  }

  DistanceGraph graph;
  graph.robot = robot;
  graph.goals = goals;
  graph.dimension = d;
  std::vector<int> root_vertex(raw.size(), -1);
  std::vector<int> anchor_roots;
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const int root = sets.find(static_cast<int>(r));
    if (root_vertex[root] >= 0 || root_vertex[root] == -2) continue;
    if (root_fixed[root] >= 0) {
      root_vertex[root] = -2;  // numbered after all variables
      anchor_roots.push_back(root);
    } else {
      root_vertex[root] = graph.num_variables++;
      graph.labels.push_back(robot.label(raw[r].id));
    }
  }
  if (graph.num_variables == 0) throw InputError("robot has no unanchored joints: nothing to solve");
  graph.anchors.resize(d, static_cast<Eigen::Index>(anchor_roots.size()));
  for (std::size_t k = 0; k < anchor_roots.size(); ++k) {
    const int root = anchor_roots[k];
    root_vertex[root] = graph.num_variables + static_cast<int>(k);
    graph.anchors.col(static_cast<Eigen::Index>(k)) = from_3d(raw[root_fixed[root]].fixed_position, d);
    graph.labels.push_back(robot.label(raw[root_fixed[root]].id));
  }
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const int v = root_vertex[sets.find(static_cast<int>(r))];
    graph.point_vertex[raw[r].id] = v;
    graph.label_vertex[robot.label(raw[r].id)] = v;
  }

  std::map<std::pair<int, int>, double> edge_table;
  for (const auto& group : groups)
    for (std::size_t a = 0; a < group.size(); ++a)
      for (std::size_t b = a + 1; b < group.size(); ++b) {
        const auto ia = raw_index.find(group[a]);
        const auto ib = raw_index.find(group[b]);
        if (ia == raw_index.end() || ib == raw_index.end()) continue;
        const int va = graph.point_vertex[group[a]];
        const int vb = graph.point_vertex[group[b]];
        if (va == vb || (graph.is_anchor(va) && graph.is_anchor(vb))) continue;
        const double squared = (raw[ia->second].at_zero - raw[ib->second].at_zero).squaredNorm();
        edge_table.try_emplace({std::min(va, vb), std::max(va, vb)}, squared);
      }
  for (const auto& [key, squared] : edge_table) graph.edges.push_back({key.first, key.second, squared});

  // Every variable must be tied, possibly through other variables, to an anchor.
  std::vector<std::vector<int>> adjacent(static_cast<std::size_t>(graph.num_vertices()));
  for (const auto& e : graph.edges) {
    adjacent[e.tail].push_back(e.head);
    adjacent[e.head].push_back(e.tail);
  }
  std::vector<bool> reached(adjacent.size(), false);
  std::queue<int> frontier;
  for (int v = graph.num_variables; v < graph.num_vertices(); ++v) {
    reached[v] = true;
    frontier.push(v);
  }
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop();
    for (int w : adjacent[v])
      if (!reached[w]) {
        reached[w] = true;
        frontier.push(w);
      }
  }
  for (int v = 0; v < graph.num_variables; ++v)
    if (!reached[v]) throw ModelError("disconnected variable vertex " + graph.labels[v]);
  return graph;
}

/// Incidence matrix with -1 at the tail and +1 at the head of every edge.
inline Eigen::MatrixXd incidence_matrix(const DistanceGraph& graph) {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(graph.num_vertices(), static_cast<Eigen::Index>(graph.edges.size()));
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    B(graph.edges[e].tail, static_cast<Eigen::Index>(e)) = -1.0;
    B(graph.edges[e].head, static_cast<Eigen::Index>(e)) = 1.0;
  }
  return B;
}

/// Squared edge lengths in edge order (the vector l).
inline Eigen::VectorXd edge_weights(const DistanceGraph& graph) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(graph.edges.size()));
  for (std::size_t e = 0; e < graph.edges.size(); ++e) l[static_cast<Eigen::Index>(e)] = graph.edges[e].squared_length;
  return l;
}

// ---------------------------------------------------------------------------
// Feasibility QCQP

struct PlaneConstraint {
  int vertex = 0;
  Plane plane;
};

/// ||x_i - x_j||^2 >= eps between two points (vertex ids or aux ids).
struct SelfCollision {
  int i = 0;
  int j = 0;
  double eps = 0.0;
};

struct ConstraintCounts {
  std::size_t distance_equalities = 0;
  std::size_t plane_equalities = 0;
  std::size_t aux_ties = 0;
  std::size_t obstacle_inequalities = 0;
  std::size_t self_collision_inequalities = 0;
  std::size_t plane_inequalities = 0;

  std::size_t equalities() const { return distance_equalities + plane_equalities + aux_ties; }
  std::size_t inequalities() const {
    return obstacle_inequalities + self_collision_inequalities + plane_inequalities;
  }
};

/// Point ids used by workspace constraints: graph vertices come first, then
/// aux points at graph.num_vertices() + k.
struct QcqpInstance {
  DistanceGraph graph;
  std::vector<Sphere> obstacles;  ///< applied to every variable and aux point
  std::vector<PlaneConstraint> planes;
  std::vector<SelfCollision> self_collision;
  std::vector<AuxPoint> aux_points;
  WorkspaceSpec workspace;  ///< the workspace it was built from, kept for verification

  int dimension() const { return graph.dimension; }
  /// Columns of the full point matrix: graph variables then aux points.
  int num_points() const { return graph.num_variables + static_cast<int>(aux_points.size()); }
  int aux_id(std::size_t k) const { return graph.num_vertices() + static_cast<int>(k); }
  bool is_aux(int id) const { return id >= graph.num_vertices(); }
  bool is_fixed(int id) const { return !is_aux(id) && graph.is_anchor(id); }
  /// Column of X holding a variable or aux point.
  int column(int id) const {
    return is_aux(id) ? graph.num_variables + (id - graph.num_vertices()) : id;
  }

  ConstraintCounts counts() const {
    ConstraintCounts c;
    c.distance_equalities = graph.edges.size();
    c.aux_ties = aux_points.size();
    for (const auto& p : planes)
      (p.plane.relation == PlaneRelation::on ? c.plane_equalities : c.plane_inequalities) += 1;
    c.obstacle_inequalities = obstacles.size() * static_cast<std::size_t>(num_points());
    c.self_collision_inequalities = self_collision.size();
    return c;
  }
};

/// Appends an aux point on an existing edge. Throws for alpha outside (0, 1)
/// or an edge whose endpoints are both fixed.
inline void add_aux_point(QcqpInstance& instance, const AuxPoint& aux) {
  if (!(aux.alpha > 0.0 && aux.alpha < 1.0)) throw InputError("aux point alpha must lie in (0, 1)");
  const int lo = std::min(aux.from, aux.to);
  const int hi = std::max(aux.from, aux.to);
  const auto& g = instance.graph;
  if (lo < 0 || hi >= g.num_vertices()) throw InputError("aux point refers to an unknown vertex");
  if (g.is_anchor(lo) && g.is_anchor(hi)) throw InputError("aux point between two anchors is a constant");
  const bool exists = std::any_of(g.edges.begin(), g.edges.end(),
                                  [&](const Edge& e) { return e.tail == lo && e.head == hi; });
  if (!exists) throw InputError("aux point must lie on an existing distance edge");
  instance.aux_points.push_back(aux);
}

/// Appends ||x_i - x_j||^2 >= eps. A repeated pair keeps the larger threshold.
inline void add_self_collision(QcqpInstance& instance, int i, int j, double eps) {
  if (!(eps > 0.0)) throw InputError("self-collision threshold must be positive");
  if (i == j) throw InputError("self-collision needs two distinct points");
  const int total = instance.graph.num_vertices() + static_cast<int>(instance.aux_points.size());
  if (i < 0 || j < 0 || i >= total || j >= total) throw InputError("self-collision refers to an unknown point");
  if (instance.is_fixed(i) && instance.is_fixed(j)) throw InputError("self-collision between two anchors");
  if (i > j) std::swap(i, j);
  for (auto& existing : instance.self_collision) {
    if (existing.i == i && existing.j == j) {
      existing.eps = std::max(existing.eps, eps);
      return;
    }
  }
  instance.self_collision.push_back({i, j, eps});
}

/// Assembles the full feasibility problem for `goals` in `workspace`.
inline QcqpInstance assemble_qcqp(const RobotModel& robot, std::vector<Goal> goals, const WorkspaceSpec& workspace) {
  QcqpInstance instance;
  instance.graph = build_graph(robot, std::move(goals));
  instance.workspace = workspace;
  const auto& g = instance.graph;
  for (const auto& s : workspace.spheres) {
    if (s.center.size() != g.dimension) throw InputError("obstacle dimension does not match the robot");
    instance.obstacles.push_back(s);
  }
  for (const auto& spec : workspace.planes) {
    if (spec.plane.normal.size() != g.dimension) throw InputError("plane dimension does not match the robot");
    if (spec.vertex == "all") {
      for (int v = 0; v < g.num_variables; ++v) instance.planes.push_back({v, spec.plane});
    } else {
      const int v = g.vertex(spec.vertex);
      if (g.is_anchor(v)) throw InputError("plane constraint on fixed point '" + spec.vertex + "'");
      instance.planes.push_back({v, spec.plane});
    }
  }
  for (const auto& aux : workspace.aux_points)
    add_aux_point(instance, {g.vertex(aux.from), g.vertex(aux.to), aux.alpha});
  if (workspace.self_collision_eps) {
    // Joint locations of non-adjacent joints.
    const int n = static_cast<int>(robot.num_joints());
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (robot.joint(a).parent == b || robot.joint(b).parent == a) continue;
        const int va = g.point_vertex.at({PointKind::p, a});
        const int vb = g.point_vertex.at({PointKind::p, b});
        if (va == vb || (g.is_anchor(va) && g.is_anchor(vb))) continue;
        add_self_collision(instance, va, vb, *workspace.self_collision_eps);
      }
  }
  return instance;
}

/// Position of a graph vertex or aux point, reading variables from X
/// (d x num_points()).
inline Eigen::VectorXd point_of(const QcqpInstance& instance, const Eigen::MatrixXd& X, int id) {
  if (instance.is_fixed(id)) return instance.graph.anchor(id);
  return X.col(instance.column(id));
}

/// Appends aux point columns computed from their ties when X holds only the
/// graph variables.
inline Eigen::MatrixXd complete_points(const QcqpInstance& instance, const Eigen::MatrixXd& X) {
  const int nv = instance.graph.num_variables;
  if (X.rows() != instance.dimension()) throw InputError("point matrix has the wrong dimension");
  if (X.cols() == instance.num_points()) return X;
  if (X.cols() != nv) throw InputError("point matrix has the wrong number of columns");
  Eigen::MatrixXd full(X.rows(), instance.num_points());
  full.leftCols(nv) = X;
  for (std::size_t k = 0; k < instance.aux_points.size(); ++k) {
    const auto& aux = instance.aux_points[k];
    full.col(nv + static_cast<Eigen::Index>(k)) =
        (1.0 - aux.alpha) * point_of(instance, full, aux.from) + aux.alpha * point_of(instance, full, aux.to);
  }
  return full;
}

struct Residuals {
  double equality = 0.0;    ///< max |distance^2 - l| over edges, and aux tie errors
  double inequality = 0.0;  ///< max squared-distance violation of spheres and self-collision
  double plane = 0.0;       ///< max plane violation (meters)
};

inline Residuals residuals(const QcqpInstance& instance, const Eigen::MatrixXd& X_in) {
  const Eigen::MatrixXd X = complete_points(instance, X_in);
  Residuals r;
  for (const auto& e : instance.graph.edges) {
    const double squared = (point_of(instance, X, e.tail) - point_of(instance, X, e.head)).squaredNorm();
    r.equality = std::max(r.equality, std::abs(squared - e.squared_length));
  }
  for (std::size_t k = 0; k < instance.aux_points.size(); ++k) {
    const auto& aux = instance.aux_points[k];
    const Eigen::VectorXd tie = (1.0 - aux.alpha) * point_of(instance, X, aux.from) +
                                aux.alpha * point_of(instance, X, aux.to) - X.col(instance.column(instance.aux_id(k)));
    r.equality = std::max(r.equality, tie.norm());
  }
  for (const auto& s : instance.obstacles)
    for (Eigen::Index c = 0; c < X.cols(); ++c) r.inequality = std::max(r.inequality, sphere_violation(X.col(c), s));
  for (const auto& sc : instance.self_collision) {
    const double squared = (point_of(instance, X, sc.i) - point_of(instance, X, sc.j)).squaredNorm();
    r.inequality = std::max(r.inequality, sc.eps - squared);
  }
  for (const auto& p : instance.planes) r.plane = std::max(r.plane, plane_violation(X.col(p.vertex), p.plane));
  return r;
}

/// Reads the joint point matrix (RobotModel::point_ids() layout) out of the
/// graph's variables and anchors.
inline Eigen::MatrixXd joint_point_matrix(const DistanceGraph& graph, const Eigen::MatrixXd& X) {
  const auto ids = graph.robot.point_ids();
  Eigen::MatrixXd out(graph.dimension, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t c = 0; c < ids.size(); ++c) {
    const int v = graph.point_vertex.at(ids[c]);
    out.col(static_cast<Eigen::Index>(c)) = graph.is_anchor(v) ? graph.anchor(v) : Eigen::VectorXd(X.col(v));
  }
  return out;
}

/// Places the graph variables at the joint points of a configuration.
inline Eigen::MatrixXd variables_from_configuration(const DistanceGraph& graph, const Configuration& theta) {
  const JointPoints points = joint_points(graph.robot, theta);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(graph.dimension, graph.num_variables);
  for (std::size_t c = 0; c < points.ids.size(); ++c) {
    const int v = graph.point_vertex.at(points.ids[c]);
    if (!graph.is_anchor(v)) X.col(v) = points.points.col(static_cast<Eigen::Index>(c));
  }
  return X;
}

/// Goal anchor positions in the form reconstruct_angles() expects.
inline std::vector<EndEffectorPoints> goal_points(const DistanceGraph& graph) {
  std::vector<EndEffectorPoints> out;
  for (const auto& goal : graph.goals) {
    EndEffectorPoints ee{goal.end_effector, goal.position, std::nullopt};
    if (goal.direction) ee.dir = goal.position + *goal.direction;
    out.push_back(ee);
  }
  return out;
}

}  // namespace cidgik
