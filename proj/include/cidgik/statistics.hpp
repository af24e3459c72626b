#pragma once

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/roots.hpp>

#include <cstdint>
#include <utility>

#include "cidgik/errors.hpp"

namespace cidgik {

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Quantile of Beta(a, b), found by bracketing the regularized incomplete
/// beta function on [0, 1].
inline double beta_quantile(double a, double b, double p) {
  auto f = [&](double x) { return boost::math::ibeta(a, b, x) - p; };
  boost::math::tools::eps_tolerance<double> tol(40);  // ~1e-12 relative
  std::uintmax_t max_iter = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, 0.0, 1.0, -p, 1.0 - p, tol, max_iter);
  return 0.5 * (lo + hi);
}

/// Jeffreys interval for s successes in n trials: quantiles of
/// Beta(s + 1/2, n - s + 1/2), with low = 0 when s = 0 and high = 1 when s = n.
inline Interval jeffreys_interval(std::int64_t successes, std::int64_t trials, double level = 0.95) {
  if (trials < 1 || successes < 0 || successes > trials)
    throw InputError("Jeffreys interval needs 0 <= s <= n and n >= 1");
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must lie in (0, 1)");
  const double a = static_cast<double>(successes) + 0.5;
  const double b = static_cast<double>(trials - successes) + 0.5;
  const double tail = 0.5 * (1.0 - level);
  Interval out;
  out.low = successes == 0 ? 0.0 : beta_quantile(a, b, tail);
  out.high = successes == trials ? 1.0 : beta_quantile(a, b, 1.0 - tail);
  return out;
}

}  // namespace cidgik
