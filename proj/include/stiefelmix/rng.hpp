// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

#include <Eigen/Core>

namespace stiefelmix {

using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0, 1).
inline double runif(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

inline double rnorm(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return g(rng);
}

/// Gamma(shape, 1).
inline double rgamma(Rng& rng, double shape) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(rng);
}

inline double rbeta(Rng& rng, double a, double b) {
  const double x = rgamma(rng, a);
  const double y = rgamma(rng, b);
  const double s = x + y;
  if (s <= 0.0) return 0.5;
  return x / s;
}

inline Eigen::VectorXd rdirichlet(Rng& rng, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd g(alpha.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0))
      throw std::invalid_argument("rdirichlet: alpha entries must be > 0");
    g[i] = rgamma(rng, alpha[i]);
    total += g[i];
  }
  if (total <= 0.0) {
    // all gammas underflowed; fall back to the mean direction
    g = alpha / alpha.sum();
    return g;
  }
  return g / total;
}

/// Categorical draw from unnormalized log-weights.
inline int rcategorical_log(Rng& rng, std::span<const double> logw) {
  double m = -std::numeric_limits<double>::infinity();
  for (double w : logw) m = std::max(m, w);
  double total = 0.0;
  for (double w : logw) total += std::exp(w - m);
  double u = runif(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    acc += std::exp(logw[i] - m);
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(logw.size()) - 1;
}

}  // namespace stiefelmix
