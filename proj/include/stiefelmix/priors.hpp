// Apache License, Version 2.0, refer to LICENSE.txt
//
// Conjugate prior families for the matrix Langevin parameters.
//
//   JMDY(nu, Psi):  g(M,d,V) prop. etr(nu V D M^T Psi) / 0F1(n/2,D^2/4)^nu
//   IMDY(nu, eta):  g(d)     prop. exp(nu eta^T d)     / 0F1(n/2,D^2/4)^nu
//
// IMDY is proper iff max_j eta_j < 1; JMDY is proper for ||Psi||_2 < 1 and
// improper for ||Psi||_2 > 1 (the boundary is rejected as undetermined).
// The mode of IMDY solves h(d) = eta and does not depend on nu. Because the
// density is log-concave and unimodal in each coordinate, the conditional
// of one coordinate given the rest is sampled exactly by a piecewise-
// constant envelope over a truncated support, with the truncation point
// chosen so the discarded right-tail mass is below `eps`.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "stiefelmix/errors.hpp"
#include "stiefelmix/rng.hpp"
#include "stiefelmix/specfun.hpp"

namespace stiefelmix {

struct IMDYParams {
  double nu = 1.0;
  Eigen::VectorXd eta;
};

struct JMDYParams {
  double nu = 1.0;
  Eigen::MatrixXd psi;
};

enum class Propriety { kProper, kImproper, kUndetermined };

inline Propriety jmdy_propriety(const Eigen::MatrixXd& psi,
                                double boundary_tol = 1e-12) {
  const double s = psi.jacobiSvd().singularValues()[0];
  if (std::abs(s - 1.0) <= boundary_tol) return Propriety::kUndetermined;
  return s < 1.0 ? Propriety::kProper : Propriety::kImproper;
}

inline bool imdy_proper(const IMDYParams& params) {
  return params.eta.maxCoeff() < 1.0;
}

/// log of the unnormalized IMDY density: nu eta^T d - nu log 0F1.
inline double imdy_log_unnorm(int n, const Eigen::VectorXd& d,
                              const IMDYParams& params, double tol = 1e-12) {
  if (d.size() != params.eta.size())
    throw ValidationError("imdy_log_unnorm: dimension mismatch");
  return params.nu * (params.eta.dot(d) - hyp0f1_log(n / 2.0, d, tol));
}

/// log of the unnormalized JMDY density: nu tr(V D M^T Psi) - nu log 0F1.
inline double jmdy_log_unnorm(int n, const Eigen::MatrixXd& m,
                              const Eigen::VectorXd& d,
                              const Eigen::MatrixXd& v,
                              const JMDYParams& params, double tol = 1e-12) {
  if (m.rows() != params.psi.rows() || m.cols() != params.psi.cols() ||
      v.rows() != m.cols() || d.size() != m.cols())
    throw ValidationError("jmdy_log_unnorm: dimension mismatch");
  const double tr =
      (v * d.asDiagonal() * m.transpose() * params.psi).trace();
  return params.nu * (tr - hyp0f1_log(n / 2.0, d, tol));
}

/// eta = h(d_mode); the modal parameter matching a desired mode.
inline Eigen::VectorXd eta_from_mode(int n, const Eigen::VectorXd& d_mode,
                                     double tol = 1e-12) {
  return hyp0f1_h(n / 2.0, d_mode, tol);
}

/// Mode of IMDY: the solution of h(d) = eta. Requires 0 < eta_j < 1 for
/// every coordinate; independent of nu. The coordinate pairing of the
/// result follows the input ordering of eta component-wise (internally the
/// solve runs in descending order and is permuted back).
inline Eigen::VectorXd imdy_mode(int n, const IMDYParams& params,
                                 double tol = 1e-8) {
  for (Eigen::Index j = 0; j < params.eta.size(); ++j) {
    if (params.eta[j] <= 0.0)
      throw NoModeError("imdy_mode: eta <= 0, density decreasing, no mode");
    if (params.eta[j] >= 1.0)
      throw ImproperError("imdy_mode: eta >= 1, density not integrable");
  }
  return nr_solve_d(params.eta, n / 2.0, Eigen::VectorXd(), tol);
}

namespace detail {

/// log g_j(x | d_others) up to an additive constant (terms not involving
/// coordinate j are dropped).
inline double imdy_cond_log(int n, const IMDYParams& params,
                            Eigen::VectorXd& d_work, int j, double x) {
  d_work[j] = x;
  return params.nu *
         (params.eta[j] * x - hyp0f1_log(n / 2.0, d_work, 1e-12));
}

/// Mode of the conditional of coordinate j on (lo, infinity). For
/// eta_j <= 0 the conditional is decreasing and the mode sits at lo.
inline double imdy_cond_mode(int n, const IMDYParams& params,
                             const Eigen::VectorXd& d, int j, double lo) {
  const double etaj = params.eta[j];
  if (etaj <= 0.0) return lo;
  Eigen::VectorXd dw = d;
  const double a = n / 2.0;
  auto hj = [&](double x) {
    dw[j] = x;
    return hyp0f1_partials(a, dw).grad[j];
  };
  // h_j is strictly increasing in x; bracket then refine by NR/bisection
  double hi = std::max(1.0, 2.0 * std::max(lo, 1.0));
  int guard = 0;
  while (hj(hi) < etaj && guard++ < 200) hi *= 2.0;
  double lo_b = 1e-10;
  double x = 0.5 * (lo_b + hi);
  for (int it = 0; it < 100; ++it) {
    dw[j] = x;
    const Hyp0F1Eval ev = hyp0f1_partials(a, dw);
    const double g = ev.grad[j] - etaj;
    if (g > 0)
      hi = x;
    else
      lo_b = x;
    const double hjj = ev.hess(j, j);
    double xn = (hjj > 1e-300) ? x - g / hjj : 0.5 * (lo_b + hi);
    if (!(xn > lo_b && xn < hi)) xn = 0.5 * (lo_b + hi);
    if (std::abs(xn - x) < 1e-10 * std::max(1.0, x)) return std::max(xn, lo);
    x = xn;
  }
  return std::max(x, lo);
}

}  // namespace detail

/// Smallest point B beyond the conditional mode with
/// g_1(B)/g_1(mode) < eps, so that P(d_1 > B | d_2..d_p) < eps. Found by
/// doubling then bisection. `d_rest` carries the conditioning values
/// (d_2..d_p); may be empty for p = 1.
inline double right_tail_cutoff(int n, const IMDYParams& params,
                                const Eigen::VectorXd& d_rest,
                                double eps = 1e-4) {
  const int p = static_cast<int>(params.eta.size());
  if (d_rest.size() != p - 1)
    throw ValidationError("right_tail_cutoff: d_rest must have p-1 entries");
  if (!imdy_proper(params))
    throw ImproperError("right_tail_cutoff: improper parameters");
  Eigen::VectorXd d(p);
  d[0] = 1.0;
  for (int j = 1; j < p; ++j) d[j] = d_rest[j - 1];
  const double lo = (p > 1) ? d[1] : 0.0;
  const double m = detail::imdy_cond_mode(n, params, d, 0, std::max(lo, 1e-8));
  Eigen::VectorXd dw = d;
  const double logm = detail::imdy_cond_log(n, params, dw, 0, std::max(m, 1e-12));
  const double target = logm + std::log(eps);
  double b = std::max(m, lo) + 1.0;
  int guard = 0;
  while (detail::imdy_cond_log(n, params, dw, 0, b) >= target &&
         guard++ < 400)
    b *= 2.0;
  double blo = std::max(m, lo), bhi = b;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (blo + bhi);
    if (detail::imdy_cond_log(n, params, dw, 0, mid) >= target)
      blo = mid;
    else
      bhi = mid;
    if (bhi - blo < 1e-9 * std::max(1.0, bhi)) break;
  }
  return bhi;
}

/// Exact draw from the conditional of coordinate j of an IMDY(nu, eta)
/// vector given the other coordinates, restricted to the ordering support
/// (d_{j+1}, d_{j-1}) -- for j = 0 the upper end is the right-tail cutoff.
/// Piecewise-constant envelope with the mode bin raised to g(mode);
/// dominance holds because the conditional is unimodal and log-concave.
/// `attempts_out`, when non-null, receives the number of proposals used.
inline double imdy_conditional_sample(int n, int j,
                                      const Eigen::VectorXd& d_current,
                                      const IMDYParams& params, Rng& rng,
                                      int n_bins = 1000, double eps = 1e-4,
                                      long* attempts_out = nullptr) {
  const int p = static_cast<int>(params.eta.size());
  if (d_current.size() != p || j < 0 || j >= p)
    throw ValidationError("imdy_conditional_sample: bad arguments");
  const double lo = (j + 1 < p) ? d_current[j + 1] : 0.0;
  double hi;
  if (j == 0) {
    Eigen::VectorXd rest(p - 1);
    for (int k = 1; k < p; ++k) rest[k - 1] = d_current[k];
    hi = right_tail_cutoff(n, params, rest, eps);
    if (hi <= lo) hi = lo + std::max(1.0, lo);  // keep a usable interval
  } else {
    hi = d_current[j - 1];
  }
  if (!(hi > lo))
    throw OrderingError("imdy_conditional_sample: empty support interval");

  Eigen::VectorXd dw = d_current;
  const double m =
      std::clamp(detail::imdy_cond_mode(n, params, d_current, j,
                                        std::max(lo, 1e-12)),
                 lo, hi);
  const double delta = (hi - lo) / n_bins;
  const int mode_bin = std::min(
      n_bins - 1, static_cast<int>(std::floor((m - lo) / delta)));

  std::vector<double> logq(n_bins);
  for (int i = 0; i < n_bins; ++i) {
    double xi;
    if (i < mode_bin)
      xi = lo + (i + 1) * delta;  // rising side: right edge dominates
    else if (i == mode_bin)
      xi = m;
    else
      xi = lo + i * delta;  // falling side: left edge dominates
    logq[i] = detail::imdy_cond_log(n, params, dw, j, std::max(xi, 1e-300));
  }
  const double lmax = *std::max_element(logq.begin(), logq.end());
  std::vector<double> cdf(n_bins);
  double acc = 0.0;
  for (int i = 0; i < n_bins; ++i) {
    acc += std::exp(logq[i] - lmax);
    cdf[i] = acc;
  }

  for (long attempt = 1; attempt <= 100000; ++attempt) {
    const double u = runif(rng) * acc;
    const int bin = static_cast<int>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const double y = lo + (bin + runif(rng)) * delta;
    if (y <= lo || y >= hi) continue;
    const double logg = detail::imdy_cond_log(n, params, dw, j, y);
    if (std::log(runif(rng)) <= logg - logq[bin]) {
      if (attempts_out) *attempts_out = attempt;
      return y;
    }
  }
  throw ConvergenceError("imdy_conditional_sample: acceptance loop stalled",
                         m);
}

}  // namespace stiefelmix
