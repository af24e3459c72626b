#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "cidgik/cidgik.hpp"

namespace cidgik::testing {

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(CIDGIK_DATA_DIR) / relative;
}

inline RobotModel load_data_robot(const std::string& name) {
  return load_robot(read_text_file(data_path("robots/" + name)));
}

inline Eigen::Vector3d random_unit(SplitMix64& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double a = rng.angle();
  const double r = std::sqrt(1.0 - z * z);
  return {r * std::cos(a), r * std::sin(a), z};
}

inline Configuration random_configuration(SplitMix64& rng, std::size_t n) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(n));
  for (auto& t : theta) t = rng.angle();
  return Configuration(theta);
}

/// Serial chain whose consecutive axes are coplanar: each new axis is either
/// parallel to its parent's or meets it, and the offset lies in their plane.
inline RobotModel random_chain(SplitMix64& rng, int dof, int dimension = 3) {
  std::vector<Joint> joints;
  Eigen::Vector3d parent_axis = Eigen::Vector3d::UnitZ();
  for (int j = 0; j < dof; ++j) {
    Joint joint;
    joint.name = "j" + std::to_string(j);
    joint.parent = j - 1;
    if (dimension == 2) {
      const double a = rng.angle();
      joint.axis = Eigen::Vector3d::UnitZ();
      if (j > 0) joint.translation = rng.uniform(0.2, 0.6) * Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
    } else if (j == 0) {
      joint.axis = Eigen::Vector3d::UnitZ();
    } else if (rng.uniform() < 0.4) {
      joint.axis = parent_axis;
      joint.translation = rng.uniform(0.2, 0.6) * random_unit(rng);
    } else {
      Eigen::Vector3d axis = random_unit(rng);
      axis -= 0.5 * axis.dot(parent_axis) * parent_axis;
      joint.axis = axis.normalized();
      Eigen::Vector3d offset = rng.uniform(-1.0, 1.0) * parent_axis + rng.uniform(-1.0, 1.0) * joint.axis;
      joint.translation = rng.uniform(0.2, 0.6) * offset.normalized();
    }
    parent_axis = joint.axis;
    joints.push_back(joint);
  }
  EndEffector ee;
  ee.parent = dof - 1;
  if (dimension == 2) {
    ee.tip = Eigen::Vector3d(rng.uniform(0.2, 0.5), 0.0, 0.0);
    ee.direction = Eigen::Vector3d::UnitX();
  } else {
    ee.tip = rng.uniform(0.2, 0.5) * random_unit(rng);
    ee.direction = parent_axis;
  }
  return RobotModel(dimension, std::move(joints), {ee});
}

/// PSD matrix of the given side and rank with spread-out eigenvalues.
inline Eigen::MatrixXd random_psd(SplitMix64& rng, int side, int rank) {
  Eigen::MatrixXd G(side, rank);
  for (Eigen::Index i = 0; i < G.size(); ++i) G.data()[i] = rng.uniform(-1.0, 1.0);
  return G * G.transpose();
}

}  // namespace cidgik::testing

namespace cidgik::testing {

/// Regularized incomplete beta by quadrature. With x = sin^2(phi) the Beta
/// density becomes 2 sin^(2a-1) cos^(2b-1), which is smooth for a, b >= 1/2.
inline double beta_cdf_by_quadrature(double a, double b, double x, int panels = 20000) {
  auto f = [&](double phi) { return std::pow(std::sin(phi), 2 * a - 1) * std::pow(std::cos(phi), 2 * b - 1); };
  auto simpson = [&](double hi) {
    const double h = hi / panels;
    double sum = f(0.0) + f(hi);
    for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return sum * h / 3.0;
  };
  return simpson(std::asin(std::sqrt(x))) / simpson(std::acos(0.0));
}

inline double beta_quantile_by_bisection(double a, double b, double p) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (beta_cdf_by_quadrature(a, b, mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace cidgik::testing
