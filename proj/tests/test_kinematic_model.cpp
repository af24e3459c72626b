#include <gtest/gtest.h>

#include <functional>
#include <numbers>

#include "support.hpp"

using namespace cidgik;
using namespace cidgik::testing;

namespace {

constexpr double kPi = std::numbers::pi;

RobotModel two_link_parallel(double length) {
  Joint a{"a", -1};
  Joint b{"b", 0, Eigen::Vector3d(length, 0.0, 0.0)};
  return RobotModel(3, {a, b}, {{1, Eigen::Vector3d(0.5, 0.0, 0.0), Eigen::Vector3d::UnitZ()}});
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(LoadRobot, PlanarTwoLink) {
  const RobotModel robot = load_data_robot("planar_2r.json");
  EXPECT_EQ(robot.num_joints(), 2u);
  EXPECT_EQ(robot.dimension(), 2);
}

TEST(LoadRobot, SelfParentIsNotATree) {
  const std::string doc = R"({"dimension": 2, "joints": [{"name": "a", "parent": "a", "axis": [0, 0, 1]}]})";
  const std::string what = message_of([&] { load_robot(doc); });
  EXPECT_NE(what.find("non-tree topology"), std::string::npos) << what;
}

TEST(LoadRobot, SkewAxesRejected) {
  // (z x x) . (0, 1, 0) = 1: the axes neither meet nor run parallel.
  const std::string doc = R"({"dimension": 3, "joints": [
      {"name": "a", "parent": "base", "axis": [0, 0, 1]},
      {"name": "b", "parent": "a", "translation": [0, 1, 0], "axis": [1, 0, 0]}]})";
  const std::string what = message_of([&] { load_robot(doc); });
  EXPECT_NE(what.find("non-coplanar axes"), std::string::npos) << what;
  EXPECT_NE(what.find("'a'"), std::string::npos);
  EXPECT_NE(what.find("'b'"), std::string::npos);
}

TEST(LoadRobot, RoundTripsThroughJson) {
  const RobotModel robot = load_data_robot("chain6.json");
  const RobotModel again = robot_from_json(robot_to_json(robot));
  SplitMix64 rng(3);
  const Configuration theta = random_configuration(rng, robot.num_joints());
  EXPECT_LT((joint_points(robot, theta).points - joint_points(again, theta).points).norm(), 1e-12);
}

TEST(ForwardKinematics, StraightPlanarChain) {
  const RobotModel robot = load_data_robot("planar_2r.json");
  const KinematicState s = forward_kinematics(robot, Configuration::zeros(2));
  EXPECT_NEAR((s.end_effectors[0].position - Eigen::Vector2d(2.0, 0.0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((s.end_effectors[0].direction - Eigen::Vector2d(1.0, 0.0)).norm(), 0.0, 1e-12);
}

TEST(ForwardKinematics, QuarterTurn) {
  const RobotModel robot = load_data_robot("planar_2r.json");
  const KinematicState s = forward_kinematics(robot, Configuration(Eigen::Vector2d(kPi / 2, 0.0)));
  EXPECT_NEAR((s.end_effectors[0].position - Eigen::Vector2d(0.0, 2.0)).norm(), 0.0, 1e-12);
}

TEST(ForwardKinematics, TipNeverBeyondReach) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const RobotModel robot = random_chain(rng, 3 + trial % 5);
    for (int k = 0; k < 20; ++k) {
      const KinematicState s = forward_kinematics(robot, random_configuration(rng, robot.num_joints()));
      const double distance = (to_3d(s.end_effectors[0].position) - robot.base_point()).norm();
      EXPECT_LE(distance, robot.reach() + 1e-12);
    }
  }
}

TEST(JointPoints, AxisPointsStayOneMeterApart) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const RobotModel robot = random_chain(rng, 3 + trial % 5);
    const JointPoints P = joint_points(robot, random_configuration(rng, robot.num_joints()));
    for (std::size_t c = 0; c < P.ids.size(); ++c) {
      if (P.ids[c].kind != PointKind::p) continue;
      for (std::size_t k = 0; k < P.ids.size(); ++k)
        if (P.ids[k].kind == PointKind::q && P.ids[k].index == P.ids[c].index)
          EXPECT_NEAR((P.points.col(c) - P.points.col(k)).norm(), 1.0, 1e-12);
    }
  }
}

TEST(JointPoints, BaseJointOfThreeDofExampleIsAnchored) {
  const RobotModel robot = load_data_robot("three_dof.json");
  EXPECT_TRUE(robot.anchored(0));
  EXPECT_EQ(robot.num_unanchored(), 2u);
  const JointPoints P = joint_points(robot, Configuration::zeros(3));
  EXPECT_EQ(P.num_variable_columns, 4u);
  for (std::size_t c = 0; c < P.num_variable_columns; ++c) EXPECT_NE(P.ids[c].index, 0);
}

TEST(JointPoints, PlanarElbowAtZero) {
  const RobotModel robot = load_data_robot("planar_2r.json");
  const JointPoints P = joint_points(robot, Configuration::zeros(2));
  ASSERT_EQ(P.ids.size(), 2u);
  EXPECT_EQ(P.ids[0].kind, PointKind::p);
  EXPECT_EQ(P.ids[0].index, 1);
  EXPECT_NEAR((P.points.col(0) - Eigen::Vector2d(1.0, 0.0)).norm(), 0.0, 1e-12);
}

TEST(NominalDistances, ParallelAxesHandComputed) {
  const double L = 0.7;
  const RobotModel robot = two_link_parallel(L);
  std::map<std::pair<PointId, PointId>, double> table;
  for (const auto& d : nominal_distances(robot)) {
    table[{d.a, d.b}] = d.squared;
    table[{d.b, d.a}] = d.squared;
  }
  const PointId p0{PointKind::p, 0}, q0{PointKind::q, 0}, p1{PointKind::p, 1}, q1{PointKind::q, 1};
  EXPECT_NEAR(table.at({p0, q0}), 1.0, 1e-12);
  EXPECT_NEAR(table.at({p0, p1}), L * L, 1e-12);
  EXPECT_NEAR(table.at({p0, q1}), L * L + 1.0, 1e-12);
  EXPECT_NEAR(table.at({q0, p1}), L * L + 1.0, 1e-12);
  EXPECT_NEAR(table.at({q0, q1}), L * L, 1e-12);
  EXPECT_NEAR(table.at({p1, q1}), 1.0, 1e-12);
}

TEST(NominalDistances, InvariantUnderMotion) {
  SplitMix64 rng(17);
  const RobotModel robot = random_chain(rng, 6);
  const auto distances = nominal_distances(robot);
  for (int k = 0; k < 100; ++k) {
    const KinematicState s = forward_kinematics(robot, random_configuration(rng, robot.num_joints()));
    for (const auto& d : distances) {
      const double now = (point_position(robot, s, d.a) - point_position(robot, s, d.b)).squaredNorm();
      EXPECT_NEAR(now, d.squared, 1e-10);
    }
  }
}

TEST(NominalDistances, CollinearChildFlaggedDegenerate) {
  // Both axis points of b sit on a's axis, so a's angle cannot move them.
  Joint a{"a", -1};
  Joint b{"b", 0, Eigen::Vector3d(0.0, 0.0, 0.4)};
  const RobotModel robot(3, {a, b}, {{1, Eigen::Vector3d(0.3, 0.0, 0.0), Eigen::Vector3d::UnitZ()}});
  bool flagged = false;
  for (const auto& d : nominal_distances(robot))
    if (d.a == PointId{PointKind::p, 1} && d.b == PointId{PointKind::q, 1}) flagged = flagged || d.degenerate;
  EXPECT_TRUE(flagged);
}

TEST(ReconstructAngles, RoundTripReproducesPoints) {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const RobotModel robot = random_chain(rng, 3 + trial % 5, trial % 4 == 0 ? 2 : 3);
    const JointPoints P = joint_points(robot, random_configuration(rng, robot.num_joints()));
    const Reconstruction r = reconstruct_angles(robot, P.points);
    EXPECT_LT(r.residual, 1e-6);
    EXPECT_LT((joint_points(robot, r.theta).points - P.points).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ReconstructAngles, StraightChainGivesZero) {
  const RobotModel robot = load_data_robot("chain6.json");
  const JointPoints P = joint_points(robot, Configuration::zeros(robot.num_joints()));
  const std::vector<EndEffectorPoints> ee{{0, forward_kinematics(robot, Configuration::zeros(6)).end_effectors[0].position,
                                           std::nullopt}};
  const Reconstruction r = reconstruct_angles(robot, P.points, ee);
  EXPECT_LT(r.theta.theta().cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ReconstructAngles, PerturbedColumnShowsInResidual) {
  SplitMix64 rng(29);
  const RobotModel robot = load_data_robot("chain6.json");
  const JointPoints P = joint_points(robot, random_configuration(rng, robot.num_joints()));
  Eigen::MatrixXd bent = P.points;
  bent(0, 2) += 1e-3;
  Reconstruction r;
  EXPECT_NO_THROW(r = reconstruct_angles(robot, bent));
  EXPECT_GE(r.residual, 1e-4);
  EXPECT_LT(r.residual, 1e-2);
}

TEST(PoseError, Identical) {
  const Pose p{Eigen::Vector3d(1, 2, 3), Eigen::Vector3d::UnitX()};
  const PoseError e = pose_error(p, p);
  EXPECT_DOUBLE_EQ(e.position, 0.0);
  EXPECT_DOUBLE_EQ(e.direction, 0.0);
}

TEST(PoseError, OrthogonalDirections) {
  const PoseError e = pose_error({Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX()},
                                 {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY()});
  EXPECT_NEAR(e.direction, kPi / 2, 1e-15);
}

TEST(PoseError, ThreeFourFive) {
  const PoseError e = pose_error({Eigen::Vector3d(0.006, 0.008, 0.0), Eigen::Vector3d::UnitX()},
                                 {Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitX()});
  EXPECT_NEAR(e.position, 0.01, 1e-15);
}
