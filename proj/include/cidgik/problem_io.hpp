#pragma once

// Problem, solution and ground-truth documents (JSON).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cidgik/convex_iteration.hpp"
#include "cidgik/distance_graph.hpp"
#include "cidgik/errors.hpp"
#include "cidgik/kinematic_model.hpp"
#include "cidgik/problem_generator.hpp"
#include "cidgik/workspace.hpp"

namespace cidgik {

struct Problem {
  RobotModel robot;
  std::vector<Goal> goals;
  WorkspaceSpec workspace;
  std::optional<std::string> environment;
  std::optional<std::uint64_t> seed;

  QcqpInstance assemble() const { return assemble_qcqp(robot, goals, workspace); }
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(what + " is not valid JSON: " + e.what());
  }
}

namespace detail {

inline Eigen::VectorXd vector_n(const nlohmann::json& value, int n, const std::string& what) {
  if (!value.is_array() || static_cast<int>(value.size()) != n)
    throw InputError(what + " must be an array of " + std::to_string(n) + " numbers");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    if (!value[static_cast<std::size_t>(i)].is_number()) throw InputError(what + " must contain numbers");
    out[i] = value[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

inline double number(const nlohmann::json& obj, const char* key, const std::string& what) {
  if (!obj.contains(key) || !obj[key].is_number()) throw InputError(what + " needs a numeric '" + key + "'");
  return obj[key].get<double>();
}

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline int end_effector_index(const RobotModel& robot, const nlohmann::json& ee) {
  if (ee.is_number_integer()) return ee.get<int>();
  if (ee.is_string()) {
    const int joint = robot.joint_index(ee.get<std::string>());
    for (std::size_t e = 0; e < robot.end_effectors().size(); ++e)
      if (robot.end_effectors()[e].parent == joint) return static_cast<int>(e);
    throw InputError("joint '" + ee.get<std::string>() + "' carries no end-effector");
  }
  throw InputError("goal 'ee' must be an index or a joint name");
}

}  // namespace detail

/// Reads a problem document. "robot" is either an embedded robot document or
/// a path, resolved against `base_dir` when relative.
inline Problem problem_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
  if (!doc.is_object()) throw InputError("problem document must be a JSON object");
  if (!doc.contains("robot")) throw InputError("problem document needs a 'robot'");
  Problem p;
  try {
    if (doc["robot"].is_string()) {
      std::filesystem::path path = doc["robot"].get<std::string>();
      if (path.is_relative()) path = base_dir / path;
      p.robot = load_robot(read_text_file(path));
    } else {
      p.robot = robot_from_json(doc["robot"]);
    }
  } catch (const ModelError& e) {
    throw InputError(std::string("invalid robot: ") + e.what());
  }
  const int d = p.robot.dimension();

  if (!doc.contains("goals") || !doc["goals"].is_array() || doc["goals"].empty())
    throw InputError("problem document needs a non-empty 'goals' array");
  for (const auto& g : doc["goals"]) {
    if (!g.is_object() || !g.contains("position")) throw InputError("every goal needs a 'position'");
    Goal goal;
    goal.end_effector = g.contains("ee") ? detail::end_effector_index(p.robot, g["ee"]) : 0;
    goal.position = detail::vector_n(g["position"], d, "goal position");
    if (g.contains("direction") && !g["direction"].is_null())
      goal.direction = detail::vector_n(g["direction"], d, "goal direction");
    p.goals.push_back(std::move(goal));
  }
  if (doc.contains("obstacles")) {
    for (const auto& o : doc["obstacles"]) {
      const std::string sense = o.value("sense", std::string("keep_out"));
      if (sense != "keep_out" && sense != "keep_in") throw InputError("sphere sense must be keep_out or keep_in");
      p.workspace.spheres.emplace_back(detail::vector_n(o.at("center"), d, "obstacle center"),
                                       detail::number(o, "radius", "obstacle"),
                                       sense == "keep_in" ? SphereSense::keep_in : SphereSense::keep_out);
    }
  }
  if (doc.contains("planes")) {
    for (const auto& pl : doc["planes"]) {
      const std::string relation = pl.value("relation", std::string("on"));
      PlaneRelation rel;
      if (relation == "on" || relation == "eq") rel = PlaneRelation::on;
      else if (relation == "above" || relation == "ge") rel = PlaneRelation::above;
      else throw InputError("plane relation must be 'on' or 'above'");
      p.workspace.planes.push_back(
          {pl.value("vertex", std::string("all")),
           Plane(detail::vector_n(pl.at("normal"), d, "plane normal"), detail::number(pl, "offset", "plane"), rel)});
    }
  }
  if (doc.contains("self_collision_eps") && !doc["self_collision_eps"].is_null())
    p.workspace.self_collision_eps = detail::number(doc, "self_collision_eps", "problem");
  if (doc.contains("aux_points")) {
    for (const auto& a : doc["aux_points"])
      p.workspace.aux_points.push_back(
          {a.at("from").get<std::string>(), a.at("to").get<std::string>(), detail::number(a, "alpha", "aux point")});
  }
  if (doc.contains("environment")) p.environment = doc["environment"].get<std::string>();
  if (doc.contains("seed")) p.seed = doc["seed"].get<std::uint64_t>();
  return p;
}

inline Problem read_problem(const std::filesystem::path& path) {
  const nlohmann::json doc = parse_json(read_text_file(path), "problem file '" + path.string() + "'");
  try {
    return problem_from_json(doc, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed problem document: ") + e.what());
  }
}

/// Writes a self-contained problem document (robot embedded).
inline nlohmann::json problem_to_json(const Problem& p) {
  nlohmann::json doc;
  doc["robot"] = robot_to_json(p.robot);
  doc["goals"] = nlohmann::json::array();
  for (const auto& g : p.goals) {
    nlohmann::json goal{{"ee", g.end_effector}, {"position", detail::to_json(g.position)}};
    if (g.direction) goal["direction"] = detail::to_json(*g.direction);
    doc["goals"].push_back(goal);
  }
  doc["obstacles"] = nlohmann::json::array();
  for (const auto& s : p.workspace.spheres)
    doc["obstacles"].push_back({{"center", detail::to_json(s.center)},
                                {"radius", s.radius},
                                {"sense", s.sense == SphereSense::keep_in ? "keep_in" : "keep_out"}});
  doc["planes"] = nlohmann::json::array();
  for (const auto& pl : p.workspace.planes)
    doc["planes"].push_back({{"vertex", pl.vertex},
                             {"normal", detail::to_json(pl.plane.normal)},
                             {"offset", pl.plane.offset},
                             {"relation", pl.plane.relation == PlaneRelation::on ? "on" : "above"}});
  if (p.workspace.self_collision_eps) doc["self_collision_eps"] = *p.workspace.self_collision_eps;
  if (!p.workspace.aux_points.empty()) {
    doc["aux_points"] = nlohmann::json::array();
    for (const auto& a : p.workspace.aux_points)
      doc["aux_points"].push_back({{"from", a.from}, {"to", a.to}, {"alpha", a.alpha}});
  }
  if (p.environment) doc["environment"] = *p.environment;
  if (p.seed) doc["seed"] = *p.seed;
  return doc;
}

inline Problem problem_from_generated(const RobotModel& robot, const GeneratedProblem& g) {
  return {robot, g.goals, g.workspace, g.environment, g.seed};
}

/// Ground-truth sidecar written next to a generated problem.
inline nlohmann::json truth_to_json(const GeneratedProblem& g) {
  return {{"seed", g.seed},
          {"environment", g.environment},
          {"draws", g.draws},
          {"theta", detail::to_json(g.ground_truth.theta())}};
}

inline nlohmann::json solution_to_json(const CidgikResult& r) {
  nlohmann::json h = nlohmann::json::array();
  for (double v : r.h_trace()) h.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  return {{"status", to_string(r.status)},
          {"success", r.verification.success},
          {"failures", r.verification.failures},
          {"theta", detail::to_json(r.theta.theta())},
          {"h_trace", h},
          {"position_error", r.verification.position_error},
          {"direction_error", r.verification.direction_error},
          {"max_penetration", r.verification.max_penetration},
          {"plane_violation", r.verification.plane_violation},
          {"iterations", r.trace.records.size()},
          {"solver_iterations", r.solver_iterations()},
          {"gram_gap", r.gram_gap},
          {"certified_infeasible", r.trace.certificate && r.trace.certificate->verified},
          {"setup_time_s", r.setup_time},
          {"solve_time_s", r.solve_time}};
}

}  // namespace cidgik
