#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace cidgik;
using namespace cidgik::testing;

namespace {

std::string read_golden(const std::string& name) {
  std::ifstream in(std::string(CIDGIK_GOLDEN_DIR) + "/" + name, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double min_eigenvalue(const Eigen::MatrixXd& Z) { return descending_eigenvalues(Z).minCoeff(); }

double max_abs_rhs(const SdpInstance& sdp) {
  double m = 0.0;
  for (const auto& c : sdp.equalities) m = std::max(m, std::abs(c.rhs));
  return m;
}

}  // namespace

TEST(ProjectPsd, KnownSpectra) {
  const Eigen::MatrixXd D = Eigen::Vector3d(2.0, -1.0, 0.5).asDiagonal();
  EXPECT_LT((project_psd(D) - Eigen::MatrixXd(Eigen::Vector3d(2.0, 0.0, 0.5).asDiagonal())).norm(), 1e-15);
  Eigen::Matrix2d M;
  M << 0.0, 1.0, 1.0, 0.0;  // eigenvalues +-1 along (1, +-1)/sqrt(2)
  Eigen::Matrix2d expected;
  expected << 0.5, 0.5, 0.5, 0.5;
  EXPECT_LT((project_psd(M) - expected).norm(), 1e-15);
}

TEST(ProjectPsd, NearestAmongSampledPsdMatrices) {
  SplitMix64 rng(83);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 6;
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = rng.uniform(-1.0, 1.0);
    M = 0.5 * (M + M.transpose()).eval();
    const Eigen::MatrixXd P = project_psd(M);
    EXPECT_GE(min_eigenvalue(P), -1e-12);
    const double best = (M - P).norm();
    for (int k = 0; k < 50; ++k) {
      const Eigen::MatrixXd Q = random_psd(rng, n, 1 + k % n) * rng.uniform(0.0, 2.0);
      EXPECT_LE(best, (M - Q).norm() + 1e-12);
    }
  }
}

TEST(ProjectPsd, RejectsNonFinite) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  M(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(project_psd(M), NumericalError);
}

TEST(ConicSolver, ToyWithIdentityCost) {
  const SdpInstance sdp = build_toy_instance();
  const SolveResult r = solve(sdp, Eigen::MatrixXd::Identity(3, 3));
  ASSERT_EQ(r.status, SolveStatus::optimal);
  const SolverSettings s;
  EXPECT_GE(r.solution.eigenvalues.minCoeff(), -10.0 * s.eps_abs);
  EXPECT_LE(r.solution.equality_residual, s.eps_abs + s.eps_rel * max_abs_rhs(sdp) + 1e-7);
  EXPECT_LE(r.solution.inequality_residual, 1e-6);
}

TEST(ConicSolver, ZeroCostStillFeasible) {
  const RobotModel robot = load_data_robot("chain6.json");
  const SdpInstance sdp = lift(generate(robot, "octahedron", 2).qcqp);
  const SolveResult r = solve(sdp, Eigen::MatrixXd::Zero(sdp.side, sdp.side));
  ASSERT_EQ(r.status, SolveStatus::optimal);
  EXPECT_LT(r.solution.equality_residual, 1e-5);
  EXPECT_LT(r.solution.inequality_residual, 1e-5);
  EXPECT_GE(r.solution.eigenvalues.minCoeff(), -1e-6);
}

TEST(ConicSolver, OptimalIteratesAreFeasibleAcrossInstances) {
  const RobotModel robot = load_data_robot("chain6.json");
  const SolverSettings settings;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const SdpInstance sdp = lift(generate(robot, seed % 2 ? "octahedron" : "free", seed).qcqp);
    const SolveResult r = solve(sdp, Eigen::MatrixXd::Identity(sdp.side, sdp.side), settings);
    ASSERT_EQ(r.status, SolveStatus::optimal) << "seed " << seed;
    EXPECT_GE(r.solution.eigenvalues.minCoeff(), -10.0 * settings.eps_abs);
    EXPECT_LE(r.solution.equality_residual, 1e-5);
  }
}

TEST(ConicSolver, ContradictoryEqualitiesCertified) {
  // tr(E11 Z) = 1 and tr(E11 Z) = 2.
  SdpInstance sdp;
  sdp.side = 2;
  sdp.dimension = 1;
  sdp.num_points = 1;
  sdp.equalities.push_back({{{0, 0, 1.0}}, 1.0, "one"});
  sdp.equalities.push_back({{{0, 0, 1.0}}, 2.0, "two"});
  SolveResult r = solve(sdp, Eigen::MatrixXd::Identity(2, 2));
  ASSERT_EQ(r.status, SolveStatus::infeasible);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(r.certificate->verified);
  EXPECT_DOUBLE_EQ(r.certificate->gap, -1.0);
  EXPECT_TRUE(certify(sdp, r));
}

TEST(ConicSolver, NegativeDiagonalCertified) {
  // tr(E11 Z) = -1 has no PSD solution although the equality alone is consistent.
  SdpInstance sdp;
  sdp.side = 2;
  sdp.dimension = 1;
  sdp.num_points = 1;
  sdp.equalities.push_back({{{0, 0, 1.0}}, -1.0, "negative"});
  sdp.equalities.push_back({{{1, 1, 1.0}}, 1.0, "corner"});
  const SolveResult r = solve(sdp, Eigen::MatrixXd::Identity(2, 2));
  ASSERT_EQ(r.status, SolveStatus::infeasible);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(r.certificate->verified);
}

TEST(ConicSolver, UnreachableGoalCertified) {
  const QcqpInstance q = read_problem(data_path("problems/unreachable_2r.json")).assemble();
  const ConicSolver solver(lift(q));
  SolveResult r = solver.solve(Eigen::MatrixXd::Identity(solver.instance().side, solver.instance().side));
  ASSERT_EQ(r.status, SolveStatus::infeasible);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(certify(solver.face(), r));
}

TEST(ConicSolver, CertifyNeedsInfeasibleResult) {
  const SdpInstance sdp = build_toy_instance();
  SolveResult r = solve(sdp, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_THROW(certify(sdp, r), InputError);
}

TEST(ConicSolver, Deterministic) {
  const RobotModel robot = load_data_robot("chain6.json");
  const SdpInstance sdp = lift(generate(robot, "cube", 9).qcqp);
  const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(sdp.side, sdp.side);
  const SolveResult a = solve(sdp, C);
  const SolveResult b = solve(sdp, C);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_TRUE((a.solution.Z.array() == b.solution.Z.array()).all());
}

TEST(ConicSolver, AdmmAgreesOnToy) {
  const SdpInstance sdp = build_toy_instance();
  SolverSettings s;
  s.method = SolverMethod::admm;
  const SolveResult admm = solve(sdp, Eigen::MatrixXd::Identity(3, 3), s);
  const SolveResult ipm = solve(sdp, Eigen::MatrixXd::Identity(3, 3));
  ASSERT_EQ(admm.status, SolveStatus::optimal);
  EXPECT_NEAR(admm.objective, ipm.objective, 1e-4);
}

TEST(ConicSolver, RejectsBadCost) {
  const SdpInstance sdp = build_toy_instance();
  EXPECT_THROW(solve(sdp, Eigen::MatrixXd::Identity(4, 4)), InputError);
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(3, 3);
  C(0, 1) = 1.0;
  EXPECT_THROW(solve(sdp, C), InputError);
  SolverSettings s;
  s.eps_abs = 0.0;
  EXPECT_THROW(solve(sdp, Eigen::MatrixXd::Identity(3, 3), s), InputError);
}

TEST(Sdpa, ToyMatchesGoldenFile) {
  const SdpInstance sdp = build_toy_instance();
  EXPECT_EQ(export_sdpa(sdp, Eigen::MatrixXd::Identity(3, 3)), read_golden("toy.dat-s"));
}

TEST(Sdpa, RoundTripReproducesConstraints) {
  const SdpInstance sdp = build_toy_instance();
  const SdpaDocument doc = parse_sdpa(read_golden("toy.dat-s"));
  ASSERT_EQ(doc.instance.equalities.size(), 3u);
  ASSERT_EQ(doc.instance.inequalities.size(), 1u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(doc.instance.equalities[k].entries, sdp.equalities[k].entries);
    EXPECT_EQ(doc.instance.equalities[k].rhs, sdp.equalities[k].rhs);
  }
  EXPECT_EQ(doc.instance.inequalities[0].entries, sdp.inequalities[0].entries);
  EXPECT_EQ(doc.instance.inequalities[0].rhs, sdp.inequalities[0].rhs);
  EXPECT_EQ(doc.C, Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(Sdpa, LiftedInstanceRoundTripsExactly) {
  const RobotModel robot = load_data_robot("chain6.json");
  const SdpInstance sdp = lift(generate(robot, "octahedron", 5).qcqp);
  SplitMix64 rng(89);
  const Eigen::MatrixXd C = random_psd(rng, sdp.side, 3);
  const SdpaDocument doc = parse_sdpa(export_sdpa(sdp, C));
  ASSERT_EQ(doc.instance.equalities.size(), sdp.equalities.size());
  ASSERT_EQ(doc.instance.inequalities.size(), sdp.inequalities.size());
  for (std::size_t k = 0; k < sdp.equalities.size(); ++k) {
    EXPECT_EQ(doc.instance.equalities[k].entries, sdp.equalities[k].entries);
    EXPECT_EQ(doc.instance.equalities[k].rhs, sdp.equalities[k].rhs);
  }
  for (std::size_t k = 0; k < sdp.inequalities.size(); ++k)
    EXPECT_EQ(doc.instance.inequalities[k].entries, sdp.inequalities[k].entries);
  EXPECT_TRUE((doc.C.array() == C.array()).all());
}

TEST(Sdpa, NoSlackBlockWithoutInequalities) {
  SdpInstance sdp = build_toy_instance();
  sdp.inequalities.clear();
  const std::string text = export_sdpa(sdp, Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(text.substr(0, 6), "3\n1\n3\n");
  std::istringstream lines(text);
  std::string line;
  for (int skip = 0; skip < 4; ++skip) std::getline(lines, line);
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    int matrix = 0, block = 0;
    fields >> matrix >> block;
    EXPECT_EQ(block, 1) << line;
  }
}

TEST(Sdpa, MalformedRejected) {
  EXPECT_THROW(parse_sdpa("1\n1\n"), InputError);
  EXPECT_THROW(parse_sdpa("1\n1\n3\n1\n1 1 9 9 1\n"), InputError);
}
