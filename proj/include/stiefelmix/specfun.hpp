// Apache License, Version 2.0, refer to LICENSE.txt
//
// The hypergeometric function of matrix argument 0F1(a, D^2/4) for p = 1, 2,
// together with its log-gradient h(d) and the Hessian of its logarithm.
//
// The p = 2 value uses the classical single-matrix expansion
//
//   0F1(a, D^2/4) = sum_k  (d1 d2 / 4)^{2k} / ((a-1/2)_k (a)_{2k} k!)
//                          * 0F1(a + 2k, (d1^2 + d2^2)/4),
//
// whose inner scalar functions are generated for all required orders by the
// contiguous relation 0F1(b-1,y) = 0F1(b,y) + y/((b-1)b) 0F1(b+1,y), run
// downward from two series-evaluated start values (the stable direction;
// every quantity is >= 1 so nothing underflows). Below d1+d2 = 50 all sums
// are accumulated directly; above, per-term log magnitudes are combined with
// log-sum-exp, which keeps the evaluation finite for arguments well past
// d = 200.
//
// The derivative series (five sums sharing the same ladder) follow the
// product rule applied term-by-term; all of their terms are nonnegative.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stiefelmix/errors.hpp"
#include "stiefelmix/rng.hpp"
#include "stiefelmix/stiefel.hpp"

namespace stiefelmix {

namespace detail {

inline constexpr int kMaxOuterTerms = 500;       // hard cap on the k-series
inline constexpr double kDirectSumLimit = 50.0;  // d1+d2 below: plain sums

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double log_sum3(double a, double b, double c) {
  return log_add_exp(log_add_exp(a, b), c);
}

/// log 0F1(b; y) by direct series. Terms are positive; the running sum is
/// rescaled long before overflow, so any (b > 0, y >= 0) is safe.
inline double hyp0f1_series_log(double b, double y) {
  if (y == 0.0) return 0.0;
  double term = 1.0, sum = 1.0, shift = 0.0;
  for (int m = 0; m < 1000000; ++m) {
    term *= y / ((b + m) * (m + 1.0));
    sum += term;
    if (term <= sum * 1e-17) break;
    if (sum > 1e280) {
      shift += std::log(sum);
      term /= sum;
      sum = 1.0;
    }
  }
  return shift + std::log(sum);
}

/// f[j] = 0F1(b0 + j; y) for j = 0..jmax (linear scale). Caller must ensure
/// 2*sqrt(y) stays well inside the double exponent range (y <= ~1e5).
inline void hyp0f1_ladder_linear(double b0, int jmax, double y,
                                 std::vector<double>& f) {
  f.resize(static_cast<std::size_t>(jmax) + 1);
  f[jmax] = std::exp(hyp0f1_series_log(b0 + jmax, y));
  if (jmax == 0) return;
  f[jmax - 1] = std::exp(hyp0f1_series_log(b0 + jmax - 1, y));
  for (int j = jmax - 2; j >= 0; --j) {
    const double b = b0 + j + 1;
    f[j] = f[j + 1] + y / ((b - 1.0) * b) * f[j + 2];
  }
}

/// Same ladder in log scale, safe for any magnitude.
inline void hyp0f1_ladder_log(double b0, int jmax, double y,
                              std::vector<double>& lf) {
  lf.resize(static_cast<std::size_t>(jmax) + 1);
  lf[jmax] = hyp0f1_series_log(b0 + jmax, y);
  if (jmax == 0) return;
  lf[jmax - 1] = hyp0f1_series_log(b0 + jmax - 1, y);
  for (int j = jmax - 2; j >= 0; --j) {
    const double b = b0 + j + 1;
    lf[j] = log_add_exp(lf[j + 1], std::log(y / ((b - 1.0) * b)) + lf[j + 2]);
  }
}

/// Ratio bound r_k >= u_{k+1}/u_k for the outer series (the inner 0F1 is
/// decreasing in its order, so the T0 ratio dominates).
inline double outer_ratio(double a, double w, int k) {
  return w / ((a - 0.5 + k) * (a + 2.0 * k) * (a + 2.0 * k + 1.0) * (k + 1.0));
}

}  // namespace detail

/// log 0F1(a; x) for scalar argument x >= 0. The series is summed to
/// machine precision; `tol` only bounds the accepted request.
inline double hyp0f1_scalar(double a, double x, double tol = 1e-12) {
  if (!(a > 0.0))
    throw std::domain_error("hyp0f1_scalar: need a > 0");
  if (!(x >= 0.0))
    throw std::domain_error("hyp0f1_scalar: need x >= 0");
  if (!(tol > 0.0))
    throw std::domain_error("hyp0f1_scalar: need tol > 0");
  return detail::hyp0f1_series_log(a, x);
}

/// log 0F1(a; D^2/4) for p = 2 concentrations (d1, d2) >= 0.
/// Throws ConvergenceError (with the partial log value) if the outer series
/// has not met `tol` within the 500-term cap.
inline double hyp0f1_matrix2(double a, double d1, double d2,
                             double tol = 1e-12) {
  if (!(a > 0.0))
    throw std::domain_error("hyp0f1_matrix2: need a > 0");
  if (!(d1 >= 0.0 && d2 >= 0.0))
    throw std::domain_error("hyp0f1_matrix2: need d >= 0");
  const double y = (d1 * d1 + d2 * d2) / 4.0;
  if (d1 == 0.0 || d2 == 0.0) return detail::hyp0f1_series_log(a, y);

  const double w = (d1 * d2 / 4.0) * (d1 * d2 / 4.0);
  const bool direct = (d1 + d2) <= detail::kDirectSumLimit;
  std::vector<double> lad;
  int cap = 8;
  if (direct)
    detail::hyp0f1_ladder_linear(a, 2 * cap + 2, y, lad);
  else
    detail::hyp0f1_ladder_log(a, 2 * cap + 2, y, lad);

  double t0 = 1.0, sum = 0.0;                                // direct path
  double logt0 = 0.0;                                        // log path
  double logsum = -std::numeric_limits<double>::infinity();  // log path
  for (int k = 0;; ++k) {
    if (2 * k + 2 >= static_cast<int>(lad.size())) {
      cap = std::min(2 * cap, detail::kMaxOuterTerms);
      if (direct)
        detail::hyp0f1_ladder_linear(a, 2 * cap + 2, y, lad);
      else
        detail::hyp0f1_ladder_log(a, 2 * cap + 2, y, lad);
    }
    const double r = detail::outer_ratio(a, w, k);
    if (direct) {
      const double u = t0 * lad[2 * k];
      sum += u;
      if (r < 1.0 && u * r / (1.0 - r) <= sum * tol) return std::log(sum);
      t0 *= r;
    } else {
      const double lu = logt0 + lad[2 * k];
      logsum = detail::log_add_exp(logsum, lu);
      if (r < 1.0 && lu + std::log(r / (1.0 - r)) <= logsum + std::log(tol))
        return logsum;
      logt0 += std::log(r);
    }
    if (k + 1 >= detail::kMaxOuterTerms)
      throw ConvergenceError("hyp0f1_matrix2: series cap reached",
                             direct ? std::log(sum) : logsum);
  }
}

inline double hyp0f1_matrix2(double a, const Eigen::VectorXd& d,
                             double tol = 1e-12) {
  if (d.size() != 2)
    throw UnsupportedDimensionError("hyp0f1_matrix2: expects p = 2");
  return hyp0f1_matrix2(a, d[0], d[1], tol);
}

/// log 0F1(a; D^2/4) for p in {1, 2}.
inline double hyp0f1_log(double a, const Eigen::VectorXd& d,
                         double tol = 1e-12) {
  if (d.size() == 1) return hyp0f1_scalar(a, d[0] * d[0] / 4.0, tol);
  if (d.size() == 2) return hyp0f1_matrix2(a, d[0], d[1], tol);
  throw UnsupportedDimensionError("hyp0f1_log: only p <= 2 is supported");
}

/// Value, log-gradient h_j(d) and Hessian of log 0F1(a; D^2/4).
struct Hyp0F1Eval {
  double log_value = 0.0;
  Eigen::VectorXd grad;  // h_j(d) = (dR/dd_j)/R, each in (0,1) for d > 0
  Eigen::MatrixXd hess;  // Hessian of log R, symmetric PSD
};

namespace detail {

inline Hyp0F1Eval hyp0f1_partials1(double a, double d) {
  Hyp0F1Eval out;
  out.grad.resize(1);
  out.hess.resize(1, 1);
  const double y = d * d / 4.0;
  std::vector<double> lf;
  hyp0f1_ladder_log(a, 2, y, lf);
  out.log_value = lf[0];
  if (d == 0.0) {
    out.grad[0] = 0.0;
    out.hess(0, 0) = 1.0 / (2.0 * a);
    return out;
  }
  const double lr1 = std::log(d / (2.0 * a)) + lf[1];
  const double lr11 =
      log_add_exp(std::log(1.0 / (2.0 * a)) + lf[1],
                  std::log(d * d / (4.0 * a * (a + 1.0))) + lf[2]);
  const double h = std::exp(lr1 - lf[0]);
  out.grad[0] = h;
  out.hess(0, 0) = std::exp(lr11 - lf[0]) - h * h;
  return out;
}

}  // namespace detail

/// Partial-derivative bundle for p in {1, 2}. At d_j = 0 the removable
/// singularities of the term-wise coefficients are replaced by their limits.
inline Hyp0F1Eval hyp0f1_partials(double a, const Eigen::VectorXd& d,
                                  double tol = 1e-12) {
  if (!(a > 0.0)) throw std::domain_error("hyp0f1_partials: need a > 0");
  if (d.size() == 1) {
    if (!(d[0] >= 0.0))
      throw std::domain_error("hyp0f1_partials: need d >= 0");
    return detail::hyp0f1_partials1(a, d[0]);
  }
  if (d.size() != 2)
    throw UnsupportedDimensionError("hyp0f1_partials: only p <= 2");
  const double d1 = d[0], d2 = d[1];
  if (!(d1 >= 0.0 && d2 >= 0.0))
    throw std::domain_error("hyp0f1_partials: need d >= 0");

  Hyp0F1Eval out;
  out.grad.resize(2);
  out.hess.resize(2, 2);

  const double y = (d1 * d1 + d2 * d2) / 4.0;
  if (d1 == 0.0 || d2 == 0.0) {
    // only k = 0 survives; everything reduces to scalar ladders in y
    std::vector<double> lf;
    detail::hyp0f1_ladder_log(a, 2, y, lf);
    out.log_value = lf[0];
    auto one_coord = [&](double dj) {
      if (dj == 0.0) return 0.0;
      return std::exp(std::log(dj / (2.0 * a)) + lf[1] - lf[0]);
    };
    const double h1 = one_coord(d1), h2 = one_coord(d2);
    out.grad << h1, h2;
    auto diag_entry = [&](double dj, double hj) {
      const double lr =
          detail::log_add_exp(std::log(1.0 / (2.0 * a)) + lf[1],
                              (dj == 0.0
                                   ? -std::numeric_limits<double>::infinity()
                                   : std::log(dj * dj /
                                              (4.0 * a * (a + 1.0))) + lf[2]));
      return std::exp(lr - lf[0]) - hj * hj;
    };
    out.hess(0, 0) = diag_entry(d1, h1);
    out.hess(1, 1) = diag_entry(d2, h2);
    // cross term: the k = 0 contribution is d1 d2/(4a(a+1)) T3, zero here
    out.hess(0, 1) = out.hess(1, 0) = -h1 * h2;
    if (d1 == 0.0 && d2 == 0.0) out.hess(0, 1) = out.hess(1, 0) = 0.0;
    return out;
  }

  const double w = (d1 * d2 / 4.0) * (d1 * d2 / 4.0);
  const bool direct = (d1 + d2) <= detail::kDirectSumLimit;
  constexpr double ninf = -std::numeric_limits<double>::infinity();

  std::vector<double> lad;
  int cap = 8;
  auto refill = [&]() {
    if (direct)
      detail::hyp0f1_ladder_linear(a, 2 * cap + 4, y, lad);
    else
      detail::hyp0f1_ladder_log(a, 2 * cap + 4, y, lad);
  };
  refill();

  // accumulators: R, dR/d1, dR/d2, d2R/d11, d2R/d22, d2R/d12
  double s[6] = {0, 0, 0, 0, 0, 0};
  double ls[6] = {ninf, ninf, ninf, ninf, ninf, ninf};
  double t0 = 1.0, logt0 = 0.0;
  int k = 0;
  for (;; ++k) {
    if (2 * k + 4 >= static_cast<int>(lad.size())) {
      cap = std::min(2 * cap, detail::kMaxOuterTerms);
      refill();
    }
    const double b = a + 2.0 * k;
    const double kk = static_cast<double>(k);
    // T1 coefficients
    const double c1_r = 1.0;
    const double c1_1 = 2.0 * kk / d1;
    const double c1_2 = 2.0 * kk / d2;
    const double c1_11 = 2.0 * kk * (2.0 * kk - 1.0) / (d1 * d1);
    const double c1_22 = 2.0 * kk * (2.0 * kk - 1.0) / (d2 * d2);
    const double c1_12 = (2.0 * kk / d1) * (2.0 * kk / d2);
    // T2 coefficients
    const double c2_1 = d1 / (2.0 * b);
    const double c2_2 = d2 / (2.0 * b);
    const double c2_d = (4.0 * kk + 1.0) / (2.0 * b);
    const double c2_12 = kk * (d2 / d1 + d1 / d2) / b;
    // T3 coefficients
    const double c3_sq = 1.0 / (4.0 * b * (b + 1.0));
    const double c3_11 = d1 * d1 * c3_sq;
    const double c3_22 = d2 * d2 * c3_sq;
    const double c3_12 = d1 * d2 * c3_sq;

    if (direct) {
      const double f1 = lad[2 * k], f2 = lad[2 * k + 1], f3 = lad[2 * k + 2];
      s[0] += t0 * c1_r * f1;
      s[1] += t0 * (c1_1 * f1 + c2_1 * f2);
      s[2] += t0 * (c1_2 * f1 + c2_2 * f2);
      s[3] += t0 * (c1_11 * f1 + c2_d * f2 + c3_11 * f3);
      s[4] += t0 * (c1_22 * f1 + c2_d * f2 + c3_22 * f3);
      s[5] += t0 * (c1_12 * f1 + c2_12 * f2 + c3_12 * f3);
    } else {
      const double lf1 = lad[2 * k], lf2 = lad[2 * k + 1],
                   lf3 = lad[2 * k + 2];
      auto lg = [](double c) { return c > 0.0 ? std::log(c) : ninf; };
      ls[0] = detail::log_add_exp(ls[0], logt0 + lf1);
      ls[1] = detail::log_add_exp(
          ls[1], logt0 + detail::log_add_exp(lg(c1_1) + lf1, lg(c2_1) + lf2));
      ls[2] = detail::log_add_exp(
          ls[2], logt0 + detail::log_add_exp(lg(c1_2) + lf1, lg(c2_2) + lf2));
      ls[3] = detail::log_add_exp(
          ls[3], logt0 + detail::log_sum3(lg(c1_11) + lf1, lg(c2_d) + lf2,
                                          lg(c3_11) + lf3));
      ls[4] = detail::log_add_exp(
          ls[4], logt0 + detail::log_sum3(lg(c1_22) + lf1, lg(c2_d) + lf2,
                                          lg(c3_22) + lf3));
      ls[5] = detail::log_add_exp(
          ls[5], logt0 + detail::log_sum3(lg(c1_12) + lf1, lg(c2_12) + lf2,
                                          lg(c3_12) + lf3));
    }

    const double r = detail::outer_ratio(a, w, k);
    // coefficients grow at most like k^2; fold that into the tail bound
    const double growth =
        (kk + 2.0) * (kk + 2.0) / std::max(1.0, kk * kk);
    const double rb = r * growth;
    if (rb < 1.0) {
      bool done;
      if (direct) {
        const double u = t0 * lad[2 * k];
        done = u * rb / (1.0 - rb) * (1.0 + c1_11 + c1_22 + c1_12 + 3.0) <=
               std::max(s[0], 1e-300) * tol;
      } else {
        const double lu = logt0 + lad[2 * k];
        done = lu + std::log(rb / (1.0 - rb)) +
                   std::log(1.0 + c1_11 + c1_22 + c1_12 + 3.0) <=
               ls[0] + std::log(tol);
      }
      if (done) break;
    }
    if (direct)
      t0 *= r;
    else
      logt0 += std::log(r);
    if (k + 1 >= detail::kMaxOuterTerms)
      throw ConvergenceError("hyp0f1_partials: series cap reached",
                             direct ? std::log(std::max(s[0], 1e-300))
                                    : ls[0]);
  }

  double logR, h1, h2, r11, r22, r12;
  if (direct) {
    logR = std::log(s[0]);
    h1 = s[1] / s[0];
    h2 = s[2] / s[0];
    r11 = s[3] / s[0];
    r22 = s[4] / s[0];
    r12 = s[5] / s[0];
  } else {
    logR = ls[0];
    h1 = std::exp(ls[1] - ls[0]);
    h2 = std::exp(ls[2] - ls[0]);
    r11 = std::exp(ls[3] - ls[0]);
    r22 = std::exp(ls[4] - ls[0]);
    r12 = std::exp(ls[5] - ls[0]);
  }
  out.log_value = logR;
  out.grad << h1, h2;
  out.hess(0, 0) = r11 - h1 * h1;
  out.hess(1, 1) = r22 - h2 * h2;
  out.hess(0, 1) = out.hess(1, 0) = r12 - h1 * h2;
  return out;
}

/// h(d): gradient of log 0F1(a; D^2/4).
inline Eigen::VectorXd hyp0f1_h(double a, const Eigen::VectorXd& d,
                                double tol = 1e-12) {
  return hyp0f1_partials(a, d, tol).grad;
}

struct McEstimate {
  double estimate;
  double std_error;
};

/// Monte-Carlo evaluation of 0F1(n/2, D^2/4) as the Haar expectation of
/// exp(sum_j d_j X_jj). Test oracle; linear scale.
inline McEstimate mc_hyp0f1_oracle(int n, int p, const Eigen::VectorXd& d,
                                   std::size_t num_samples, Rng& rng) {
  if (n < p || p < 1)
    throw ValidationError("mc_hyp0f1_oracle: need n >= p >= 1");
  if (d.size() != p)
    throw ValidationError("mc_hyp0f1_oracle: d has wrong length");
  if (num_samples < 1000)
    throw ValidationError("mc_hyp0f1_oracle: need >= 1000 samples");
  Eigen::MatrixXd x(n, p);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t s = 0; s < num_samples; ++s) {
    haar_sample_inplace(x, rng);
    double e = 0.0;
    for (int j = 0; j < p; ++j) e += d[j] * x(j, j);
    const double g = std::exp(e);
    sum += g;
    sumsq += g * g;
  }
  const double ns = static_cast<double>(num_samples);
  const double mean = sum / ns;
  const double var = std::max(0.0, sumsq / ns - mean * mean);
  return {mean, std::sqrt(var / ns)};
}

/// Solve h(d) = target (entries strictly inside (0,1)) by Newton-Raphson on
/// the gradient of log 0F1, falling back to cyclic per-coordinate bisection.
inline Eigen::VectorXd nr_solve_d(const Eigen::VectorXd& target, double a,
                                  Eigen::VectorXd init = Eigen::VectorXd(),
                                  double tol = 1e-10, int max_iter = 200) {
  const int p = static_cast<int>(target.size());
  if (p < 1 || p > 2)
    throw UnsupportedDimensionError("nr_solve_d: only p <= 2");
  for (int j = 0; j < p; ++j)
    if (!(target[j] > 0.0 && target[j] < 1.0))
      throw InfeasibleError("nr_solve_d: target entries must lie in (0,1)");

  // work in descending order of target; h is symmetric under simultaneous
  // permutation, so the solution is permuted back at the end
  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(),
            [&](int i, int j) { return target[i] > target[j]; });
  Eigen::VectorXd t(p), d(p);
  for (int j = 0; j < p; ++j) t[j] = target[perm[j]];
  if (init.size() == p) {
    for (int j = 0; j < p; ++j) d[j] = std::max(1e-8, init[perm[j]]);
    std::sort(d.data(), d.data() + p, std::greater<double>());
  } else {
    for (int j = 0; j < p; ++j) {
      const double tv = t[j];
      d[j] = 2.0 * a * tv / std::max(1e-3, 1.0 - tv * tv * (p == 1 ? 1.0 : 0.5));
    }
  }

  auto residual = [&](const Eigen::VectorXd& dd, Eigen::VectorXd& e,
                      Eigen::MatrixXd* hess) {
    const Hyp0F1Eval ev = hyp0f1_partials(a, dd);
    e = ev.grad - t;
    if (hess) *hess = ev.hess;
    return e.cwiseAbs().maxCoeff();
  };

  Eigen::VectorXd e(p);
  Eigen::MatrixXd hs(p, p);
  double res = residual(d, e, &hs);
  bool solved = res < tol;
  for (int it = 0; it < max_iter && !solved; ++it) {
    Eigen::VectorXd step;
    const double ridge = 1e-14 * std::max(1.0, hs.diagonal().maxCoeff());
    Eigen::MatrixXd hreg =
        hs + ridge * Eigen::MatrixXd::Identity(p, p);
    step = hreg.ldlt().solve(e);
    if (!step.allFinite()) step = e.cwiseQuotient(hs.diagonal().cwiseMax(1e-300));
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      Eigen::VectorXd dn = d - scale * step;
      bool pos = true;
      for (int j = 0; j < p; ++j) pos = pos && dn[j] > 0.0;
      if (pos) {
        Eigen::VectorXd en(p);
        Eigen::MatrixXd hn(p, p);
        const double rn = residual(dn, en, &hn);
        if (rn < res) {
          d = dn;
          e = en;
          hs = hn;
          res = rn;
          accepted = true;
          break;
        }
      }
      scale *= 0.5;
    }
    if (!accepted) break;
    solved = res < tol;
  }

  if (!solved) {
    // per-coordinate bisection: h_j is strictly increasing in d_j
    for (int sweep = 0; sweep < 200 && !solved; ++sweep) {
      for (int j = 0; j < p; ++j) {
        double lo = 1e-12, hi = std::max(1.0, 2.0 * d[j]);
        Eigen::VectorXd dd = d;
        auto hj = [&](double x) {
          dd[j] = x;
          return hyp0f1_partials(a, dd).grad[j];
        };
        int guard = 0;
        while (hj(hi) < t[j] && guard++ < 60) hi *= 2.0;
        for (int bi = 0; bi < 100; ++bi) {
          const double mid = 0.5 * (lo + hi);
          if (hj(mid) < t[j])
            lo = mid;
          else
            hi = mid;
        }
        d[j] = 0.5 * (lo + hi);
      }
      res = residual(d, e, nullptr);
      solved = res < tol;
    }
  }
  if (!solved)
    throw ConvergenceError("nr_solve_d: residual " + std::to_string(res), res);

  Eigen::VectorXd outv(p);
  for (int j = 0; j < p; ++j) outv[perm[j]] = d[j];
  return outv;
}

}  // namespace stiefelmix
