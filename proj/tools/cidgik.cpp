// cidgik command-line front end.
//
//   cidgik solve <problem.json> [--max-iter 10] [--h-tol 1e-6] [--out path]
//   cidgik bench --robot <path> --env <name> --n <count> --seed <u64> [--jobs k] [--csv]
//   cidgik gen --robot <path> --env <name> --seed <u64> --out <path>
//   cidgik export-sdpa <problem.json> --out <path.dat-s>
//
// solve exits 0 on a verified solution, 1 on a verified failure, 2 when the
// relaxation is infeasible and 3 on errors. CIDGIK_LOG selects the log level
// (error, info, debug).

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "cidgik/cidgik.hpp"

namespace {

using namespace cidgik;

enum ExitCode { kSuccess = 0, kFailure = 1, kInfeasible = 2, kError = 3 };

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("cidgik");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* level = std::getenv("CIDGIK_LOG");
  const std::string name = level ? level : "info";
  if (name == "error") spdlog::set_level(spdlog::level::err);
  else if (name == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::info);
  if (name != "error" && name != "info" && name != "debug")
    spdlog::warn("CIDGIK_LOG='{}' is not one of error, info, debug; using info", name);
}

SolverSettings solver_settings(const std::string& method) {
  SolverSettings s;
  s.method = method == "admm" ? SolverMethod::admm : SolverMethod::interior_point;
  return s;
}

std::string truth_path(const std::string& out) {
  const std::string suffix = ".json";
  if (out.size() > suffix.size() && out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0)
    return out.substr(0, out.size() - suffix.size()) + ".truth.json";
  return out + ".truth.json";
}

struct SolveArgs {
  std::string problem;
  int max_iter = 10;
  double h_tol = 1e-6;
  std::string out;
  std::string solver = "builtin";
  std::string method = "ipm";
};

int run_solve(const SolveArgs& args) {
  const Problem problem = read_problem(args.problem);
  const QcqpInstance qcqp = problem.assemble();
  if (args.solver == "export-only") {
    const SdpInstance sdp = lift(qcqp);
    const std::string text = export_sdpa(sdp, Eigen::MatrixXd::Identity(sdp.side, sdp.side));
    if (args.out.empty()) std::cout << text;
    else write_text_file(args.out, text);
    spdlog::info("exported the first relaxation (side {}, {} constraints)", sdp.side,
                 sdp.equalities.size() + sdp.inequalities.size());
    return kSuccess;
  }

  CidgikOptions options;
  options.max_iterations = args.max_iter;
  options.h_tolerance = args.h_tol;
  options.solver = solver_settings(args.method);
  const CidgikResult result = cidgik_solve(qcqp, options);
  for (std::size_t k = 0; k < result.trace.records.size(); ++k) {
    const auto& r = result.trace.records[k];
    spdlog::debug("iteration {}: h {:.3e}, solver {} after {} steps, residual {:.2e}", k + 1, r.h,
                  to_string(r.solver_status), r.solver_iterations, r.primal_residual);
  }
  const std::string json = solution_to_json(result).dump(2) + "\n";
  if (args.out.empty()) std::cout << json;
  else write_text_file(args.out, json);

  std::string summary = to_string(result.status) + (result.verification.success ? " success" : " failure");
  summary += " iterations=" + std::to_string(result.trace.records.size());
  summary += " position_error=" + std::to_string(result.verification.position_error);
  summary += " solve_time=" + std::to_string(result.solve_time) + "s";
  if (args.out.empty()) std::cerr << summary << "\n";
  else std::cout << summary << "\n";

  if (result.verification.success) return kSuccess;
  if (result.status == CidgikStatus::infeasible) return kInfeasible;
  return kFailure;
}

struct BenchArgs {
  std::string robot;
  std::string env = "free";
  std::size_t n = 100;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool csv = false;
  std::string out;
  std::string method = "ipm";
};

int run_bench(const BenchArgs& args) {
  const RobotModel robot = load_robot(read_text_file(args.robot));
  BenchmarkOptions options;
  options.jobs = args.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : args.jobs;
  options.solver.solver = solver_settings(args.method);
  spdlog::info("{} instances in '{}' from seed {} on {} worker(s)", args.n, args.env, args.seed, options.jobs);
  const BenchmarkReport report = run_benchmark(robot, args.env, args.n, args.seed, options);
  for (const auto& row : report.rows)
    if (!row.error.empty()) spdlog::warn("seed {}: {}", row.seed, row.error);
  const std::string text = args.csv ? report_to_csv(report) : report_to_json(report).dump(2) + "\n";
  if (args.out.empty()) std::cout << text;
  else write_text_file(args.out, text);
  spdlog::info("success {}/{} ({:.1f}%, 95% interval {:.1f}-{:.1f}%), mean solve {:.4f}s", report.successes,
               report.rows.size(), 100.0 * report.successes / report.rows.size(), 100.0 * report.interval.low,
               100.0 * report.interval.high, report.mean_solve_seconds);
  return kSuccess;
}

struct GenArgs {
  std::string robot;
  std::string env = "free";
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& args) {
  const RobotModel robot = load_robot(read_text_file(args.robot));
  const GeneratedProblem g = generate(robot, args.env, args.seed);
  write_text_file(args.out, problem_to_json(problem_from_generated(robot, g)).dump(2) + "\n");
  write_text_file(truth_path(args.out), truth_to_json(g).dump(2) + "\n");
  spdlog::info("wrote {} and {} after {} draw(s)", args.out, truth_path(args.out), g.draws);
  return kSuccess;
}

int run_export(const std::string& problem_path, const std::string& out) {
  const Problem problem = read_problem(problem_path);
  const SdpInstance sdp = lift(problem.assemble());
  write_text_file(out, export_sdpa(sdp, Eigen::MatrixXd::Identity(sdp.side, sdp.side)));
  spdlog::info("wrote {} (side {}, {} equalities, {} inequalities)", out, sdp.side, sdp.equalities.size(),
               sdp.inequalities.size());
  return kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Distance-geometric inverse kinematics by convex iteration"};
  app.require_subcommand(1);
  const std::vector<std::string> environments(kEnvironmentNames.begin(), kEnvironmentNames.end());

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one problem file");
  solve_cmd->add_option("problem", solve.problem, "Problem JSON")->required();
  solve_cmd->add_option("--max-iter", solve.max_iter, "Convex iterations")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--h-tol", solve.h_tol, "Rank tolerance on h(Z)")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--out", solve.out, "Write the result here instead of stdout");
  solve_cmd->add_option("--solver", solve.solver, "builtin solves; export-only writes the first SDP")
      ->check(CLI::IsMember({"builtin", "export-only"}));
  solve_cmd->add_option("--method", solve.method, "Conic method")->check(CLI::IsMember({"ipm", "admm"}));

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a seeded campaign");
  bench_cmd->add_option("--robot", bench.robot, "Robot JSON")->required();
  bench_cmd->add_option("--env", bench.env, "Environment preset")->check(CLI::IsMember(environments));
  bench_cmd->add_option("--n", bench.n, "Instances")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "First seed");
  bench_cmd->add_option("--jobs", bench.jobs, "Worker threads (0 = all cores)");
  bench_cmd->add_flag("--csv", bench.csv, "CSV rows instead of the JSON report");
  bench_cmd->add_option("--out", bench.out, "Write the report here instead of stdout");
  bench_cmd->add_option("--method", bench.method, "Conic method")->check(CLI::IsMember({"ipm", "admm"}));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a feasible problem and its ground truth");
  gen_cmd->add_option("--robot", gen.robot, "Robot JSON")->required();
  gen_cmd->add_option("--env", gen.env, "Environment preset")->check(CLI::IsMember(environments));
  gen_cmd->add_option("--seed", gen.seed, "Seed");
  gen_cmd->add_option("--out", gen.out, "Problem JSON to write")->required();

  std::string export_problem, export_out;
  auto* export_cmd = app.add_subcommand("export-sdpa", "Write the first relaxation in sparse SDPA format");
  export_cmd->add_option("problem", export_problem, "Problem JSON")->required();
  export_cmd->add_option("--out", export_out, "Output .dat-s")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kError;
  }

  try {
    if (*solve_cmd) return run_solve(solve);
    if (*bench_cmd) return run_bench(bench);
    if (*gen_cmd) return run_gen(gen);
    if (*export_cmd) return run_export(export_problem, export_out);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kError;
  }
  return kError;
}
