#pragma once

// Benchmark campaigns: generate seeded problems, solve each one, verify the
// answers and summarize the success rate with a Jeffreys interval.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cidgik/convex_iteration.hpp"
#include "cidgik/errors.hpp"
#include "cidgik/kinematic_model.hpp"
#include "cidgik/problem_generator.hpp"
#include "cidgik/problem_io.hpp"
#include "cidgik/statistics.hpp"

namespace cidgik {

struct BenchmarkOptions {
  CidgikOptions solver;
  unsigned jobs = 1;
};

struct BenchmarkRow {
  std::uint64_t seed = 0;
  std::string status = "error";
  bool success = false;
  std::vector<std::string> failures;
  double position_error = NAN;
  double direction_error = NAN;
  double max_penetration = NAN;
  std::vector<double> h_trace;
  int iterations = 0;
  int solver_iterations = 0;
  bool certified_infeasible = false;
  Eigen::VectorXd theta;
  Eigen::VectorXd ground_truth;
  double setup_seconds = 0.0;  ///< problem generation and lifting
  double solve_seconds = 0.0;  ///< convex iteration only
  std::string error;

  /// First (nuclear-norm) iterate already rank d.
  bool first_iterate_rank_d(double h_tolerance) const {
    return !h_trace.empty() && std::isfinite(h_trace.front()) && h_trace.front() < h_tolerance;
  }
};

struct BenchmarkReport {
  std::string environment;
  std::uint64_t seed = 0;
  std::vector<BenchmarkRow> rows;
  std::size_t successes = 0;
  Interval interval;
  double mean_solve_seconds = 0.0;
  double stddev_solve_seconds = 0.0;
};

inline BenchmarkRow run_instance(const RobotModel& robot, std::string_view environment, std::uint64_t seed,
                                 const CidgikOptions& options) {
  BenchmarkRow row;
  row.seed = seed;
  try {
    const auto start = std::chrono::steady_clock::now();
    const GeneratedProblem problem = generate(robot, environment, seed);
    row.ground_truth = problem.ground_truth.theta();
    const double generation = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const CidgikResult result = cidgik_solve(problem.qcqp, options);
    row.status = to_string(result.status);
    row.success = result.verification.success;
    row.failures = result.verification.failures;
    row.position_error = result.verification.position_error;
    row.direction_error = result.verification.direction_error;
    row.max_penetration = result.verification.max_penetration;
    row.h_trace = result.h_trace();
    row.iterations = static_cast<int>(result.trace.records.size());
    row.solver_iterations = result.solver_iterations();
    row.certified_infeasible = result.trace.certificate && result.trace.certificate->verified;
    row.theta = result.theta.theta();
    row.setup_seconds = generation + result.setup_time;
    row.solve_seconds = result.solve_time;
  } catch (const std::exception& e) {
    row.status = "error";
    row.success = false;
    row.error = e.what();
  }
  return row;
}

inline BenchmarkReport run_benchmark(const RobotModel& robot, std::string_view environment, std::size_t count,
                                     std::uint64_t seed, const BenchmarkOptions& options = {}) {
  if (count < 1) throw InputError("empty campaign");
  make_environment(environment, robot, seed);  // rejects unknown presets up front
  BenchmarkReport report;
  report.environment = std::string(environment);
  report.seed = seed;
  report.rows.resize(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++)
      report.rows[i] = run_instance(robot, environment, seed + i, options.solver);
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(count)));
  std::vector<std::thread> threads;
  for (unsigned j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& row : report.rows) {
    report.successes += row.success ? 1 : 0;
    sum += row.solve_seconds;
    sum_sq += row.solve_seconds * row.solve_seconds;
  }
  const double n = static_cast<double>(count);
  report.interval = jeffreys_interval(static_cast<std::int64_t>(report.successes), static_cast<std::int64_t>(count));
  report.mean_solve_seconds = sum / n;
  report.stddev_solve_seconds = count > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0))) : 0.0;
  return report;
}

namespace detail {

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace detail

/// Report as JSON. With `timings` false the document depends only on the inputs.
inline nlohmann::json report_to_json(const BenchmarkReport& report, bool timings = true) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json h = nlohmann::json::array();
    for (double v : r.h_trace) h.push_back(detail::finite_or_null(v));
    nlohmann::json row{{"seed", r.seed},
                       {"status", r.status},
                       {"success", r.success},
                       {"failures", r.failures},
                       {"position_error", detail::finite_or_null(r.position_error)},
                       {"direction_error", detail::finite_or_null(r.direction_error)},
                       {"max_penetration", detail::finite_or_null(r.max_penetration)},
                       {"h_trace", h},
                       {"iterations", r.iterations},
                       {"solver_iterations", r.solver_iterations},
                       {"certified_infeasible", r.certified_infeasible},
                       {"theta", detail::to_json(r.theta)}};
    if (!r.error.empty()) row["error"] = r.error;
    if (timings) {
      row["setup_s"] = r.setup_seconds;
      row["solve_s"] = r.solve_seconds;
    }
    rows.push_back(row);
  }
  nlohmann::json aggregate{{"count", report.rows.size()},
                           {"successes", report.successes},
                           {"success_rate", static_cast<double>(report.successes) / static_cast<double>(report.rows.size())},
                           {"jeffreys_95", {report.interval.low, report.interval.high}}};
  if (timings) {
    aggregate["mean_solve_s"] = report.mean_solve_seconds;
    aggregate["stddev_solve_s"] = report.stddev_solve_seconds;
  }
  return {{"environment", report.environment}, {"seed", report.seed}, {"aggregate", aggregate}, {"rows", rows}};
}

inline std::string report_to_csv(const BenchmarkReport& report) {
  std::string out =
      "seed,status,success,position_error,direction_error,max_penetration,iterations,solver_iterations,"
      "first_h,final_h,setup_s,solve_s\n";
  char line[512];
  for (const auto& r : report.rows) {
    const double first_h = r.h_trace.empty() ? NAN : r.h_trace.front();
    const double final_h = r.h_trace.empty() ? NAN : r.h_trace.back();
    std::snprintf(line, sizeof line, "%llu,%s,%d,%.9g,%.9g,%.9g,%d,%d,%.9g,%.9g,%.6f,%.6f\n",
                  static_cast<unsigned long long>(r.seed), r.status.c_str(), r.success ? 1 : 0, r.position_error,
                  r.direction_error, r.max_penetration, r.iterations, r.solver_iterations, first_h, final_h,
                  r.setup_seconds, r.solve_seconds);
    out += line;
  }
  return out;
}

}  // namespace cidgik
