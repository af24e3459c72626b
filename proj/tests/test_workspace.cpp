#include <gtest/gtest.h>

#include "support.hpp"

using namespace cidgik;
using namespace cidgik::testing;

TEST(Sphere, KeepOutViolation) {
  const Sphere s(Eigen::Vector2d(1.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(sphere_violation(Eigen::Vector2d(1.0, 0.0), s), 0.25);
  EXPECT_DOUBLE_EQ(sphere_violation(Eigen::Vector2d(1.0, 0.3), s), 0.25 - 0.09);
  EXPECT_DOUBLE_EQ(sphere_violation(Eigen::Vector2d(0.0, 1.0), s), 0.0);
  EXPECT_DOUBLE_EQ(sphere_penetration(Eigen::Vector2d(1.0, 0.3), s), 0.2);
}

TEST(Sphere, KeepInViolation) {
  const Sphere s(Eigen::Vector3d::Zero(), 2.0, SphereSense::keep_in);
  EXPECT_DOUBLE_EQ(sphere_violation(Eigen::Vector3d(1.0, 1.0, 1.0), s), 0.0);
  EXPECT_DOUBLE_EQ(sphere_violation(Eigen::Vector3d(3.0, 0.0, 0.0), s), 5.0);
  EXPECT_DOUBLE_EQ(sphere_penetration(Eigen::Vector3d(3.0, 0.0, 0.0), s), 1.0);
}

TEST(Sphere, RejectsBadRadius) {
  EXPECT_THROW(Sphere(Eigen::Vector2d::Zero(), 0.0), InputError);
  EXPECT_THROW(Sphere(Eigen::Vector2d::Zero(), -1.0), InputError);
}

TEST(Sphere, DimensionMismatch) {
  EXPECT_THROW(sphere_violation(Eigen::Vector3d::Zero(), Sphere(Eigen::Vector2d::Zero(), 1.0)), InputError);
}

TEST(Plane, OnAndAbove) {
  const Plane on(Eigen::Vector3d::UnitZ(), 0.5, PlaneRelation::on);
  const Plane above(Eigen::Vector3d::UnitZ(), 0.5, PlaneRelation::above);
  EXPECT_DOUBLE_EQ(plane_violation(Eigen::Vector3d(0, 0, 0.2), on), 0.3);
  EXPECT_DOUBLE_EQ(plane_violation(Eigen::Vector3d(0, 0, 0.9), on), 0.4);
  EXPECT_DOUBLE_EQ(plane_violation(Eigen::Vector3d(0, 0, 0.9), above), 0.0);
  EXPECT_DOUBLE_EQ(plane_violation(Eigen::Vector3d(0, 0, 0.2), above), 0.3);
  EXPECT_THROW(Plane(Eigen::Vector3d(0, 0, 2), 0.0, PlaneRelation::on), InputError);
}

TEST(AuxPoint, MidpointSitsOnEdge) {
  const Problem problem = read_problem(data_path("problems/toy_2r.json"));
  QcqpInstance q = problem.assemble();
  const int before = static_cast<int>(q.counts().equalities());
  const int elbow = q.graph.vertex("p_elbow");
  const int shoulder = q.graph.vertex("p_shoulder");
  add_aux_point(q, {shoulder, elbow, 0.5});
  EXPECT_EQ(q.num_points(), 2);
  EXPECT_EQ(static_cast<int>(q.counts().equalities()), before + 1);
  const Eigen::MatrixXd X = complete_points(q, Eigen::MatrixXd(Eigen::Vector2d(0.0, 1.0)));
  EXPECT_LT((X.col(1) - Eigen::Vector2d(0.0, 0.5)).norm(), 1e-15);
  EXPECT_LT(residuals(q, X).equality, 1e-15);
}

TEST(AuxPoint, RejectsAnchorPairsAndBadAlpha) {
  const Problem problem = read_problem(data_path("problems/toy_2r.json"));
  QcqpInstance q = problem.assemble();
  const int elbow = q.graph.vertex("p_elbow");
  const int shoulder = q.graph.vertex("p_shoulder");
  const int tip = q.graph.vertex("tip_0");
  EXPECT_THROW(add_aux_point(q, {shoulder, tip, 0.5}), InputError);
  EXPECT_THROW(add_aux_point(q, {shoulder, elbow, 0.0}), InputError);
  EXPECT_THROW(add_aux_point(q, {shoulder, elbow, 1.0}), InputError);
}

TEST(AuxPoint, TwoAuxPointsAddTwoTies) {
  const RobotModel robot = load_data_robot("three_dof.json");
  WorkspaceSpec ws;
  ws.aux_points = {{"p_shoulder", "p_elbow", 0.5}, {"p_elbow", "tip_0", 0.25}};
  const Goal goal{0, Eigen::Vector3d(0.6, 0.0, 0.5), std::nullopt};
  const QcqpInstance plain = assemble_qcqp(robot, {goal}, {});
  const QcqpInstance q = assemble_qcqp(robot, {goal}, ws);
  EXPECT_EQ(q.counts().equalities(), plain.counts().equalities() + 2);
  EXPECT_EQ(q.num_points(), plain.num_points() + 2);
}

TEST(SelfCollision, RejectsZeroThreshold) {
  const Problem problem = read_problem(data_path("problems/toy_2r.json"));
  QcqpInstance q = problem.assemble();
  EXPECT_THROW(add_self_collision(q, 0, 1, 0.0), InputError);
}

TEST(SelfCollision, DuplicatePairKeepsLargerThreshold) {
  const Problem problem = read_problem(data_path("problems/toy_2r.json"));
  QcqpInstance q = problem.assemble();
  const int elbow = q.graph.vertex("p_elbow");
  const int shoulder = q.graph.vertex("p_shoulder");
  add_self_collision(q, elbow, shoulder, 0.1);
  add_self_collision(q, shoulder, elbow, 0.3);
  add_self_collision(q, elbow, shoulder, 0.2);
  ASSERT_EQ(q.self_collision.size(), 1u);
  EXPECT_EQ(q.self_collision[0].eps, 0.3);
  EXPECT_LT(q.self_collision[0].i, q.self_collision[0].j);
}

TEST(SelfCollision, StraightChainIsClear) {
  const RobotModel robot = load_data_robot("chain6.json");
  WorkspaceSpec ws;
  ws.self_collision_eps = 0.01;
  const Configuration zero = Configuration::zeros(robot.num_joints());
  const QcqpInstance q = assemble_qcqp(robot, goals_from_configuration(robot, zero), ws);
  EXPECT_GT(q.self_collision.size(), 0u);
  EXPECT_EQ(residuals(q, variables_from_configuration(q.graph, zero)).inequality, 0.0);
}

TEST(Collision, JointInsideSphere) {
  const RobotModel robot = load_data_robot("planar_2r.json");
  const Configuration zero = Configuration::zeros(2);
  // Elbow at (1, 0).
  EXPECT_TRUE(config_in_collision(robot, zero, {Sphere(Eigen::Vector2d(1.0, 0.1), 0.2)}));
  EXPECT_FALSE(config_in_collision(robot, zero, {Sphere(Eigen::Vector2d(1.0, 0.5), 0.2)}));
  // Keep-in spheres never count as collisions.
  EXPECT_FALSE(config_in_collision(robot, zero, {Sphere(Eigen::Vector2d(5.0, 5.0), 0.2, SphereSense::keep_in)}));
  EXPECT_FALSE(config_in_collision(robot, zero, {}));
}

TEST(Environment, OctahedronGeometry) {
  const RobotModel robot = load_data_robot("chain6.json");
  const WorkspaceSpec ws = make_environment("octahedron", robot);
  ASSERT_EQ(ws.spheres.size(), 6u);
  for (const auto& s : ws.spheres) {
    EXPECT_NEAR((to_3d(s.center) - robot.base_point()).norm(), 0.5 * robot.reach(), 1e-12);
    EXPECT_NEAR(s.radius, 0.25 * robot.reach(), 1e-12);
  }
}

TEST(Environment, SolidVertexCounts) {
  EXPECT_EQ(platonic_vertices("octahedron").size(), 6u);
  EXPECT_EQ(platonic_vertices("cube").size(), 8u);
  EXPECT_EQ(platonic_vertices("icosahedron").size(), 12u);
  for (const auto& v : platonic_vertices("icosahedron")) EXPECT_NEAR(v.norm(), 1.0, 1e-15);
}

TEST(Environment, TableKeepsBaseClear) {
  const RobotModel robot = load_data_robot("chain6.json");
  const WorkspaceSpec ws = make_environment("table", robot, 5);
  EXPECT_EQ(ws.planes.size(), 1u);
  EXPECT_EQ(ws.spheres.size(), 100u);
  const JointPoints fixed = joint_points(robot, Configuration::zeros(6));
  for (std::size_t c = fixed.num_variable_columns; c < fixed.ids.size(); ++c)
    for (const auto& s : ws.spheres) EXPECT_EQ(sphere_violation(fixed.points.col(static_cast<Eigen::Index>(c)), s), 0.0);
}

TEST(Environment, UnknownNameRejected) {
  const RobotModel robot = load_data_robot("chain6.json");
  EXPECT_THROW(make_environment("dodecahedron", robot), InputError);
  EXPECT_THROW(make_environment("octahedron", load_data_robot("planar_2r.json")), InputError);
}
