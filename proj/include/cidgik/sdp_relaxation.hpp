#pragma once

// Lifting of the feasibility QCQP to a semidefinite program over
// Z = [X I]^T [X I]. Every constraint becomes tr(A Z) = a or tr(B Z) <= b.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cidgik/distance_graph.hpp"
#include "cidgik/errors.hpp"

namespace cidgik {

/// One stored entry of a symmetric matrix, always with row <= col.
struct SymmetricEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
  friend bool operator==(const SymmetricEntry&, const SymmetricEntry&) = default;
};

/// A symmetric constraint matrix kept as its upper triangle (row-major order)
/// together with the right-hand side.
struct SymmetricConstraint {
  std::vector<SymmetricEntry> entries;
  double rhs = 0.0;
  std::string tag;

  /// tr(A Z) for a symmetric Z.
  double trace_with(const Eigen::MatrixXd& Z) const {
    double sum = 0.0;
    for (const auto& e : entries) sum += (e.row == e.col ? 1.0 : 2.0) * e.value * Z(e.row, e.col);
    return sum;
  }

  Eigen::MatrixXd dense(int side) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(side, side);
    for (const auto& e : entries) {
      A(e.row, e.col) = e.value;
      A(e.col, e.row) = e.value;
    }
    return A;
  }
};

/// Accumulates symmetric entries and emits them sorted, merged, without zeros.
class ConstraintBuilder {
 public:
  void add(int i, int j, double value) {
    if (i > j) std::swap(i, j);
    entries_[{i, j}] += value;
  }

  /// Adds s * v v^T for a sparse vector v given as (index, value) pairs.
  void add_outer(const std::vector<std::pair<int, double>>& v, double s = 1.0) {
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a; b < v.size(); ++b) {
        const auto& [i, vi] = v[a];
        const auto& [j, vj] = v[b];
        if (a == b || i != j) add(i, j, s * vi * vj);
        else add(i, j, 2.0 * s * vi * vj);
      }
  }

  SymmetricConstraint build(double rhs, std::string tag) const {
    SymmetricConstraint c;
    c.rhs = rhs;
    c.tag = std::move(tag);
    for (const auto& [key, value] : entries_)
      if (value != 0.0) c.entries.push_back({key.first, key.second, value});
    return c;
  }

 private:
  std::map<std::pair<int, int>, double> entries_;
};

/// Semidefinite feasibility data over Z of side num_points + dimension. The
/// point columns come first; the trailing d x d corner holds the identity.
struct SdpInstance {
  int side = 0;
  int dimension = 0;
  int num_points = 0;
  std::vector<SymmetricConstraint> equalities;    ///< tr(A Z) = a
  std::vector<SymmetricConstraint> inequalities;  ///< tr(B Z) <= b
  /// side x k; every feasible Z satisfies Z v = 0 for each column v. May be empty.
  Eigen::MatrixXd kernel;

  int corner() const { return num_points; }
};

namespace detail {

using SparseVector = std::vector<std::pair<int, double>>;

/// Coefficients h with [X I] h equal to the point `id` (a variable column or a
/// constant anchor stored in the corner coordinates).
inline SparseVector homogeneous(const QcqpInstance& q, int id) {
  if (q.is_fixed(id)) {
    const Eigen::VectorXd w = q.graph.anchor(id);
    SparseVector v;
    for (int r = 0; r < q.dimension(); ++r)
      if (w[r] != 0.0) v.emplace_back(q.num_points() + r, w[r]);
    return v;
  }
  return {{q.column(id), 1.0}};
}

/// Matrix with tr(M Z(X)) = ||x_a - x_b||^2 (points are variables or anchors).
/// Constant terms go to the last corner diagonal entry as ||w_a - w_b||^2.
inline ConstraintBuilder squared_distance(const QcqpInstance& q, int a, int b) {
  ConstraintBuilder builder;
  SparseVector variable_part;
  Eigen::VectorXd constant = Eigen::VectorXd::Zero(q.dimension());
  const int first_corner = q.num_points();
  for (const auto& [id, sign] : {std::pair{a, 1.0}, std::pair{b, -1.0}}) {
    for (const auto& [k, value] : homogeneous(q, id)) {
      if (k >= first_corner) constant[k - first_corner] += sign * value;
      else variable_part.emplace_back(k, sign * value);
    }
  }
  builder.add_outer(variable_part);
  for (const auto& [k, value] : variable_part)
    for (int r = 0; r < q.dimension(); ++r)
      if (constant[r] != 0.0) builder.add(k, first_corner + r, value * constant[r]);
  const double c2 = constant.squaredNorm();
  if (c2 != 0.0) builder.add(q.num_points() + q.dimension() - 1, q.num_points() + q.dimension() - 1, c2);
  return builder;
}

/// Matrix with tr(P Z(X)) = x^T n for a variable column k.
inline ConstraintBuilder linear_form(const QcqpInstance& q, int k, const Eigen::VectorXd& n, double scale) {
  ConstraintBuilder builder;
  for (int r = 0; r < q.dimension(); ++r)
    if (n[r] != 0.0) builder.add(k, q.num_points() + r, scale * 0.5 * n[r]);
  return builder;
}

inline std::string vertex_name(const QcqpInstance& q, int id) {
  if (q.is_aux(id)) return "aux_" + std::to_string(id - q.graph.num_vertices());
  return q.graph.labels[id];
}

/// Vectors v with Z v = 0 on the whole feasible set. All pairwise distances in
/// a rigid group are fixed, so an affine relation sum c_i p_i = 0 (sum c_i = 0)
/// among the group's nominal points gives v^T Z v = ||sum c_i x_i||^2 = 0. Aux
/// ties pin v^T Z v = 0 directly.
inline Eigen::MatrixXd known_kernel(const QcqpInstance& q) {
  const auto& g = q.graph;
  const int d = q.dimension();
  const int side = q.num_points() + d;
  const KinematicState zero = forward_kinematics(g.robot, Configuration::zeros(g.robot.num_joints()));
  std::vector<Eigen::VectorXd> columns;
  auto dense = [&](const SparseVector& h, double scale, Eigen::VectorXd& v) {
    for (const auto& [k, value] : h) v[k] += scale * value;
  };
  for (const auto& group : rigid_groups(g.robot)) {
    std::vector<int> vertices;
    std::vector<Eigen::VectorXd> nominal;
    for (const PointId& id : group) {
      const auto it = g.point_vertex.find(id);
      if (it == g.point_vertex.end()) continue;
      if (std::find(vertices.begin(), vertices.end(), it->second) != vertices.end()) continue;
      vertices.push_back(it->second);
      nominal.push_back(from_3d(point_position(g.robot, zero, id), d));
    }
    const int k = static_cast<int>(vertices.size());
    if (k < 3) continue;
    // Anchors must sit where a rigid motion of the group would put them.
    bool rigid = true;
    for (int a = 0; a < k && rigid; ++a)
      for (int b = a + 1; b < k && rigid; ++b)
        if (g.is_anchor(vertices[a]) && g.is_anchor(vertices[b])) {
          const double actual = (g.anchor(vertices[a]) - g.anchor(vertices[b])).squaredNorm();
          const double expected = (nominal[a] - nominal[b]).squaredNorm();
          rigid = std::abs(actual - expected) <= 1e-9 * (1.0 + expected);
        }
    if (!rigid) continue;
    Eigen::MatrixXd P(d + 1, k);
    for (int i = 0; i < k; ++i) P.col(i) << nominal[i], 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-9 * std::max(1.0, sv[0])) ++rank;
    for (int c = rank; c < k; ++c) {
      const Eigen::VectorXd coeff = svd.matrixV().col(c);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(side);
      for (int i = 0; i < k; ++i) dense(homogeneous(q, vertices[i]), coeff[i], v);
      if (v.head(q.num_points()).norm() > 1e-9) columns.push_back(v);
    }
  }
  for (std::size_t k = 0; k < q.aux_points.size(); ++k) {
    const auto& aux = q.aux_points[k];
    Eigen::VectorXd v = Eigen::VectorXd::Zero(side);
    v[q.column(q.aux_id(k))] = 1.0;
    dense(homogeneous(q, aux.from), -(1.0 - aux.alpha), v);
    dense(homogeneous(q, aux.to), -aux.alpha, v);
    columns.push_back(v);
  }
  Eigen::MatrixXd K(side, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) K.col(static_cast<Eigen::Index>(c)) = columns[c];
  return K;
}

}  // namespace detail

/// Builds the SDP constraints of a QCQP instance.
///   edges            tr(A Z) = l_e
///   identity corner  d(d+1)/2 entries of the corner pinned to I
///   plane "on"       tr(P Z) = c;  plane "above"  tr(-P Z) <= -c
///   aux ties         tr(v v^T Z) = 0 with v = e_y - (1-alpha) h_i - alpha h_j
///   keep-out         tr(-M Z) <= -r^2;  keep-in  tr(M Z) <= r^2
///   self-collision   tr(-A Z) <= -eps
inline SdpInstance lift(const QcqpInstance& q) {
  SdpInstance sdp;
  sdp.dimension = q.dimension();
  sdp.num_points = q.num_points();
  sdp.side = sdp.num_points + sdp.dimension;
  const int d = sdp.dimension;
  const auto& g = q.graph;

  for (const auto& e : g.edges)
    sdp.equalities.push_back(detail::squared_distance(q, e.tail, e.head)
                                 .build(e.squared_length, "edge " + g.labels[e.tail] + " " + g.labels[e.head]));
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c) {
      ConstraintBuilder builder;
      builder.add(sdp.corner() + r, sdp.corner() + c, r == c ? 1.0 : 0.5);
      sdp.equalities.push_back(
          builder.build(r == c ? 1.0 : 0.0, "identity " + std::to_string(r) + " " + std::to_string(c)));
    }
  for (const auto& p : q.planes) {
    const std::string tag = "plane " + g.labels[p.vertex];
    if (p.plane.relation == PlaneRelation::on)
      sdp.equalities.push_back(detail::linear_form(q, p.vertex, p.plane.normal, 1.0).build(p.plane.offset, tag));
    else
      sdp.inequalities.push_back(
          detail::linear_form(q, p.vertex, p.plane.normal, -1.0).build(-p.plane.offset, tag));
  }
  for (std::size_t k = 0; k < q.aux_points.size(); ++k) {
    const auto& aux = q.aux_points[k];
    std::map<int, double> v;
    v[q.column(q.aux_id(k))] += 1.0;
    for (const auto& [i, value] : detail::homogeneous(q, aux.from)) v[i] -= (1.0 - aux.alpha) * value;
    for (const auto& [i, value] : detail::homogeneous(q, aux.to)) v[i] -= aux.alpha * value;
    ConstraintBuilder builder;
    builder.add_outer(detail::SparseVector(v.begin(), v.end()));
    sdp.equalities.push_back(builder.build(0.0, "aux " + std::to_string(k)));
  }

  for (std::size_t o = 0; o < q.obstacles.size(); ++o) {
    const Sphere& s = q.obstacles[o];
    const bool keep_out = s.sense == SphereSense::keep_out;
    for (int col = 0; col < q.num_points(); ++col) {
      // Distance to the sphere center, written with the center as a constant.
      ConstraintBuilder builder;
      builder.add(col, col, keep_out ? -1.0 : 1.0);
      for (int r = 0; r < d; ++r)
        if (s.center[r] != 0.0) builder.add(col, sdp.corner() + r, (keep_out ? 1.0 : -1.0) * s.center[r]);
      const double c2 = s.center.squaredNorm();
      if (c2 != 0.0) builder.add(sdp.side - 1, sdp.side - 1, keep_out ? -c2 : c2);
      const int id = col < g.num_variables ? col : q.aux_id(static_cast<std::size_t>(col - g.num_variables));
      const double r2 = s.radius * s.radius;
      sdp.inequalities.push_back(builder.build(keep_out ? -r2 : r2, "sphere " + std::to_string(o) + " " +
                                                                       detail::vertex_name(q, id)));
    }
  }
  for (const auto& sc : q.self_collision) {
    ConstraintBuilder builder = detail::squared_distance(q, sc.i, sc.j);
    SymmetricConstraint c = builder.build(-sc.eps, "self " + detail::vertex_name(q, sc.i) + " " +
                                                        detail::vertex_name(q, sc.j));
    for (auto& e : c.entries) e.value = -e.value;
    sdp.inequalities.push_back(std::move(c));
  }
  sdp.kernel = detail::known_kernel(q);
  return sdp;
}

/// Z(X) = [X I]^T [X I] for a d x num_points matrix X.
inline Eigen::MatrixXd lifted_matrix(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd XI(X.rows(), X.cols() + X.rows());
  XI << X, Eigen::MatrixXd::Identity(X.rows(), X.rows());
  return XI.transpose() * XI;
}

struct Evaluation {
  Eigen::VectorXd equality;  ///< tr(A_k Z) - a_k
  Eigen::VectorXd slack;     ///< b_k - tr(B_k Z); negative means violated
};

inline Evaluation evaluate(const SdpInstance& sdp, const Eigen::MatrixXd& Z) {
  if (Z.rows() != sdp.side || Z.cols() != sdp.side)
    throw InputError("matrix side " + std::to_string(Z.rows()) + " does not match instance side " +
                     std::to_string(sdp.side));
  Evaluation out;
  out.equality.resize(static_cast<Eigen::Index>(sdp.equalities.size()));
  out.slack.resize(static_cast<Eigen::Index>(sdp.inequalities.size()));
  for (std::size_t k = 0; k < sdp.equalities.size(); ++k)
    out.equality[static_cast<Eigen::Index>(k)] = sdp.equalities[k].trace_with(Z) - sdp.equalities[k].rhs;
  for (std::size_t k = 0; k < sdp.inequalities.size(); ++k)
    out.slack[static_cast<Eigen::Index>(k)] = sdp.inequalities[k].rhs - sdp.inequalities[k].trace_with(Z);
  return out;
}

/// A solver iterate together with its spectrum and feasibility report.
struct LiftedSolution {
  Eigen::MatrixXd Z;
  Eigen::VectorXd eigenvalues;  ///< descending
  double equality_residual = 0.0;    ///< max |tr(A Z) - a|
  double inequality_residual = 0.0;  ///< max(0, tr(B Z) - b)
  double dual_residual = 0.0;
};

inline Eigen::VectorXd descending_eigenvalues(const Eigen::MatrixXd& Z) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Z, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().reverse();
}

inline LiftedSolution make_lifted_solution(const SdpInstance& sdp, const Eigen::MatrixXd& Z) {
  LiftedSolution s;
  s.Z = Z;
  s.eigenvalues = descending_eigenvalues(Z);
  const Evaluation ev = evaluate(sdp, Z);
  s.equality_residual = ev.equality.size() ? ev.equality.cwiseAbs().maxCoeff() : 0.0;
  s.inequality_residual = ev.slack.size() ? std::max(0.0, -ev.slack.minCoeff()) : 0.0;
  return s;
}

struct ExtractedPoints {
  Eigen::MatrixXd X;        ///< d x num_points
  double gram_gap = 0.0;    ///< ||Z[points, points] - X^T X||_F
};

/// Reads X from the corner rows of Z and measures how far Z is from Z(X).
inline ExtractedPoints extract_points(const SdpInstance& sdp, const Eigen::MatrixXd& Z) {
  if (Z.rows() != sdp.side || Z.cols() != sdp.side) throw InputError("matrix side does not match instance");
  ExtractedPoints out;
  out.X = Z.block(sdp.corner(), 0, sdp.dimension, sdp.num_points);
  out.gram_gap = (Z.topLeftCorner(sdp.num_points, sdp.num_points) - out.X.transpose() * out.X).norm();
  return out;
}

/// Gram gap below which Z is treated as rank d.
inline constexpr double kGramGapTolerance = 1e-6;

/// The rank-1 homogenized planar two-link example: Z = z z^T with z = (x, s),
/// constraints ||x||^2 = 1, ||x - (1,1)||^2 = 1, s^2 = 1 and the obstacle
/// ||x - (1,0)||^2 >= 0.25, stored as tr(-A3 Z) <= -0.25.
inline SdpInstance build_toy_instance() {
  SdpInstance sdp;
  sdp.side = 3;
  sdp.dimension = 1;
  sdp.num_points = 2;
  auto make = [](std::initializer_list<SymmetricEntry> entries, double rhs, std::string tag) {
    SymmetricConstraint c;
    c.entries = entries;
    c.rhs = rhs;
    c.tag = std::move(tag);
    return c;
  };
  sdp.equalities.push_back(make({{0, 0, 1.0}, {1, 1, 1.0}}, 1.0, "A0 link"));
  sdp.equalities.push_back(
      make({{0, 0, 1.0}, {0, 2, -1.0}, {1, 1, 1.0}, {1, 2, -1.0}, {2, 2, 2.0}}, 1.0, "A1 goal"));
  sdp.equalities.push_back(make({{2, 2, 1.0}}, 1.0, "A2 homogenization"));
  sdp.inequalities.push_back(make({{0, 0, -1.0}, {0, 2, 1.0}, {1, 1, -1.0}, {2, 2, -1.0}}, -0.25, "A3 obstacle"));
  return sdp;
}

}  // namespace cidgik
