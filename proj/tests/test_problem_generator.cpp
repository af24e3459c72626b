#include <gtest/gtest.h>

#include "support.hpp"

using namespace cidgik;
using namespace cidgik::testing;

TEST(Generate, FreeAcceptsFirstDraw) {
  const RobotModel robot = load_data_robot("chain6.json");
  for (std::uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(generate(robot, "free", seed).draws, 1u);
}

TEST(Generate, SameSeedSameProblem) {
  const RobotModel robot = load_data_robot("chain6.json");
  const GeneratedProblem a = generate(robot, "octahedron", 123);
  const GeneratedProblem b = generate(robot, "octahedron", 123);
  EXPECT_TRUE((a.ground_truth.theta().array() == b.ground_truth.theta().array()).all());
  EXPECT_TRUE((a.goals[0].position.array() == b.goals[0].position.array()).all());
  EXPECT_EQ(a.draws, b.draws);
  const GeneratedProblem c = generate(robot, "octahedron", 124);
  EXPECT_FALSE((a.ground_truth.theta().array() == c.ground_truth.theta().array()).all());
}

TEST(Generate, GoalsReachedByGroundTruth) {
  const RobotModel robot = load_data_robot("chain6.json");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GeneratedProblem p = generate(robot, "cube", seed);
    const Verification v = verify_solution(robot, p.goals, p.workspace, p.ground_truth);
    EXPECT_TRUE(v.success);
    EXPECT_LT(v.position_error, 1e-12);
  }
}

TEST(Generate, EngulfingSphereExhaustsDraws) {
  const RobotModel robot = load_data_robot("chain6.json");
  WorkspaceSpec ws;
  ws.spheres.emplace_back(Eigen::VectorXd(robot.base_point()), 10.0 * robot.reach());
  try {
    generate(robot, ws, 1, "engulfed");
    FAIL() << "expected an error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("too cluttered"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("10000"), std::string::npos);
  }
}

TEST(Batch, CountAndCollisionFreeTruths) {
  const RobotModel robot = load_data_robot("chain6.json");
  const auto problems = batch(robot, "icosahedron", 15, 40);
  ASSERT_EQ(problems.size(), 15u);
  for (std::size_t i = 0; i < problems.size(); ++i) {
    EXPECT_EQ(problems[i].seed, 40 + i);
    EXPECT_FALSE(config_in_collision(robot, problems[i].ground_truth, problems[i].workspace.spheres));
  }
  EXPECT_THROW(batch(robot, "free", 0, 0), InputError);
}

TEST(Batch, TablePresetRespectsPlane) {
  const RobotModel robot = load_data_robot("chain6.json");
  for (const auto& p : batch(robot, "table", 5, 0))
    EXPECT_FALSE(config_violates_workspace(robot, p.ground_truth, p.workspace));
}

TEST(ProblemIo, GeneratedProblemRoundTrips) {
  const RobotModel robot = load_data_robot("chain6.json");
  const GeneratedProblem g = generate(robot, "octahedron", 8);
  const Problem p = problem_from_json(problem_to_json(problem_from_generated(robot, g)));
  const QcqpInstance q = p.assemble();
  EXPECT_EQ(q.counts().equalities(), g.qcqp.counts().equalities());
  EXPECT_EQ(q.counts().inequalities(), g.qcqp.counts().inequalities());
  EXPECT_LT((q.graph.anchors - g.qcqp.graph.anchors).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProblemIo, MalformedDocumentsRejected) {
  EXPECT_THROW(problem_from_json(nlohmann::json::parse(R"({"goals": []})")), InputError);
  EXPECT_THROW(parse_json("{not json", "problem"), InputError);
}
