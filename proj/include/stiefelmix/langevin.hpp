// Apache License, Version 2.0, refer to LICENSE.txt
//
// The matrix Langevin (matrix von Mises-Fisher) distribution on V_{n,p}.
// Density, mode, sampling, and moment-style point fitting.
//
// Sampling for n > p follows Hoff (2009): a Gibbs pass over the columns of
// X, each conditional a vector von Mises-Fisher draw on the unit sphere of
// the orthogonal complement of the remaining columns. Square cases (p = n,
// p <= 2 here) are handled exactly through the two-branch von Mises
// decomposition of O(2); the column pass is not irreducible there.
// Vector vMF draws use the envelope rejection scheme of Ulrich/Wood.

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stiefelmix/errors.hpp"
#include "stiefelmix/rng.hpp"
#include "stiefelmix/specfun.hpp"
#include "stiefelmix/stiefel.hpp"

namespace stiefelmix {

/// Identifiable parameters (M, d, V): M in V~_{n,p} (positive first row),
/// d strictly descending positive, V orthogonal p x p.
struct MLParams {
  Eigen::MatrixXd m;
  Eigen::VectorXd d;
  Eigen::MatrixXd v;

  int n() const { return static_cast<int>(m.rows()); }
  int p() const { return static_cast<int>(m.cols()); }
  Eigen::MatrixXd natural_param() const {
    return m * d.asDiagonal() * v.transpose();
  }
};

inline void validate_ml_params(const MLParams& params) {
  validate_stiefel(params.m);
  validate_stiefel(params.v);
  const int p = params.p();
  if (params.d.size() != p || params.v.rows() != p)
    throw ValidationError("validate_ml_params: inconsistent shapes");
  for (int j = 0; j < p; ++j) {
    if (!(params.d[j] > 0.0))
      throw ValidationError("validate_ml_params: d must be positive");
    if (j + 1 < p && !(params.d[j] > params.d[j + 1]))
      throw ValidationError("validate_ml_params: d must be descending");
    if (!(params.m(0, j) > 0.0))
      throw ValidationError("validate_ml_params: M first row must be > 0");
  }
}

/// log f_ML(X; M, d, V) = tr(V D M^T X) - log 0F1(n/2, D^2/4), w.r.t. the
/// normalized Haar measure.
inline double ml_log_density(const Eigen::MatrixXd& x, const MLParams& params,
                             double tol = 1e-12) {
  if (x.rows() != params.m.rows() || x.cols() != params.m.cols())
    throw ValidationError("ml_log_density: shape mismatch");
  if (params.p() > 2)
    throw UnsupportedDimensionError("ml_log_density: only p <= 2");
  const Eigen::MatrixXd f = params.natural_param();
  const double dot = (f.array() * x.array()).sum();
  return dot - hyp0f1_log(params.n() / 2.0, params.d, tol);
}

/// The unique modal orientation M V^T.
inline Eigen::MatrixXd ml_mode(const MLParams& params) {
  return params.m * params.v.transpose();
}

/// Vector von Mises-Fisher draw; `c` is the natural parameter (kappa times
/// the mean direction). Wood's rejection envelope, exact for any dimension.
inline Eigen::VectorXd vmf_sample(const Eigen::VectorXd& c, Rng& rng) {
  const int m = static_cast<int>(c.size());
  if (m < 1) throw ValidationError("vmf_sample: empty parameter");
  const double kappa = c.norm();
  if (m == 1) {
    // S^0 = {-1, +1}
    const double p1 = 1.0 / (1.0 + std::exp(-2.0 * c[0]));
    Eigen::VectorXd out(1);
    out[0] = (runif(rng) <= p1) ? 1.0 : -1.0;
    return out;
  }
  Eigen::VectorXd out(m);
  if (kappa < 1e-14) {
    for (int i = 0; i < m; ++i) out[i] = rnorm(rng);
    const double nrm = out.norm();
    if (nrm < 1e-300) return vmf_sample(c, rng);
    return out / nrm;
  }
  const Eigen::VectorXd mu = c / kappa;
  const double dm1 = m - 1.0;
  const double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double cc = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  double w = 0.0;
  for (int it = 0; it < 100000; ++it) {
    const double z = rbeta(rng, dm1 / 2.0, dm1 / 2.0);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = runif(rng);
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - cc >= std::log(u)) break;
  }
  // uniform tangent direction orthogonal to mu
  Eigen::VectorXd v(m);
  for (;;) {
    for (int i = 0; i < m; ++i) v[i] = rnorm(rng);
    v -= v.dot(mu) * mu;
    const double nrm = v.norm();
    if (nrm > 1e-12) {
      v /= nrm;
      break;
    }
  }
  out = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return out;
}

namespace detail {

/// Exact draw from the density etr(F^T X) on O(2). Rotations and
/// reflections each reduce to a von Mises angle; branch weights are I_0
/// ratios of the two concentrations.
inline Eigen::MatrixXd sample_o2_ml(const Eigen::MatrixXd& f, Rng& rng) {
  const double ap = f(0, 0) + f(1, 1), bp = f(1, 0) - f(0, 1);
  const double am = f(0, 0) - f(1, 1), bm = f(1, 0) + f(0, 1);
  const double kp = std::hypot(ap, bp), km = std::hypot(am, bm);
  const double lwp = hyp0f1_series_log(1.0, kp * kp / 4.0);
  const double lwm = hyp0f1_series_log(1.0, km * km / 4.0);
  const double mx = std::max(lwp, lwm);
  const double pp = std::exp(lwp - mx);
  const double pm = std::exp(lwm - mx);
  const bool rotation = runif(rng) * (pp + pm) <= pp;
  Eigen::Vector2d nat;
  if (rotation)
    nat << ap, bp;
  else
    nat << am, bm;
  const Eigen::VectorXd u = vmf_sample(nat, rng);  // (cos t, sin t)
  Eigen::MatrixXd x(2, 2);
  if (rotation)
    x << u[0], -u[1], u[1], u[0];
  else
    x << u[0], u[1], u[1], -u[0];
  return x;
}

inline Eigen::MatrixXd sample_o1_ml(const Eigen::MatrixXd& f, Rng& rng) {
  const double p1 = 1.0 / (1.0 + std::exp(-2.0 * f(0, 0)));
  Eigen::MatrixXd x(1, 1);
  x(0, 0) = (runif(rng) <= p1) ? 1.0 : -1.0;
  return x;
}

/// One full column pass of the Hoff Gibbs kernel for etr(F^T X), n > p.
inline void hoff_sweep(Eigen::MatrixXd& x, const Eigen::MatrixXd& f,
                       Rng& rng) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  Eigen::MatrixXd rest(n, p - 1);
  for (int j = 0; j < p; ++j) {
    int c = 0;
    for (int k = 0; k < p; ++k)
      if (k != j) rest.col(c++) = x.col(k);
    Eigen::MatrixXd nullbasis;
    if (p == 1) {
      nullbasis = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(rest);
      Eigen::MatrixXd q = qr.householderQ();
      nullbasis = q.rightCols(n - p + 1);
    }
    const Eigen::VectorXd c_sub = nullbasis.transpose() * f.col(j);
    x.col(j) = nullbasis * vmf_sample(c_sub, rng);
  }
}

}  // namespace detail

/// Draw from the ML law with natural parameter F (n x p). `warm_start`, if
/// given, seeds the column-Gibbs chain (useful inside larger samplers where
/// a short transition that leaves the law invariant is all that is needed);
/// otherwise the chain starts at the modal orientation.
inline Eigen::MatrixXd ml_sample_natural(const Eigen::MatrixXd& f, Rng& rng,
                                         int sweeps = 50,
                                         const Eigen::MatrixXd* warm_start =
                                             nullptr) {
  const int n = static_cast<int>(f.rows());
  const int p = static_cast<int>(f.cols());
  if (n < p || p < 1) throw ValidationError("ml_sample_natural: bad shape");
  if (f.norm() < 1e-12 && n > p) return haar_sample(n, p, rng);
  if (n == p) {
    if (p == 1) return detail::sample_o1_ml(f, rng);
    if (p == 2) return detail::sample_o2_ml(f, rng);
    throw UnsupportedDimensionError("ml_sample_natural: square case p <= 2");
  }
  if (p == 1) {
    Eigen::MatrixXd x(n, 1);
    x.col(0) = vmf_sample(f.col(0), rng);
    return x;
  }
  Eigen::MatrixXd x;
  if (warm_start) {
    x = *warm_start;
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        f, Eigen::ComputeThinU | Eigen::ComputeThinV);
    x = svd.matrixU() * svd.matrixV().transpose();
  }
  for (int s = 0; s < sweeps; ++s) detail::hoff_sweep(x, f, rng);
  return x;
}

inline Eigen::MatrixXd ml_sample(const MLParams& params, Rng& rng,
                                 int sweeps = 50) {
  return ml_sample_natural(params.natural_param(), rng, sweeps);
}

/// Moment-style fit: signed SVD of the sample mean gives (M, V) and the
/// mean's singular values d~; the concentrations solve h(d) = d~.
inline MLParams ml_point_fit(std::span<const Eigen::MatrixXd> samples,
                             double tol = 1e-8) {
  if (samples.size() < 2)
    throw ValidationError("ml_point_fit: need at least 2 samples");
  Eigen::MatrixXd mean = samples[0];
  for (std::size_t i = 1; i < samples.size(); ++i) mean += samples[i];
  mean /= static_cast<double>(samples.size());
  const SignedSVD svd = unique_svd(mean);
  if (svd.d[0] >= 1.0)
    throw InfeasibleError("ml_point_fit: mean singular value >= 1");
  const double a = mean.rows() / 2.0;
  MLParams out;
  out.m = svd.m;
  out.v = svd.v;
  out.d = nr_solve_d(svd.d, a, Eigen::VectorXd(), tol);
  return out;
}

}  // namespace stiefelmix
