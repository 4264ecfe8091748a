// Apache License, Version 2.0, refer to LICENSE.txt
//
// Points on the Stiefel manifold V_{n,p} (n x p matrices with orthonormal
// columns): validation, Haar sampling, the sign-fixed SVD parametrization
// and the principal-angle distance.

#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "stiefelmix/errors.hpp"
#include "stiefelmix/rng.hpp"

namespace stiefelmix {

inline constexpr double kOrthoTol = 1e-10;
inline constexpr double kReconstructTol = 1e-8;

inline double max_ortho_deviation(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd g =
      x.transpose() * x - Eigen::MatrixXd::Identity(x.cols(), x.cols());
  return g.cwiseAbs().maxCoeff();
}

/// Checks ||X^T X - I||_max and returns X unchanged.
inline Eigen::MatrixXd validate_stiefel(const Eigen::MatrixXd& x,
                                        double tol = kOrthoTol) {
  if (x.rows() < x.cols() || x.cols() < 1)
    throw ValidationError("validate_stiefel: need n >= p >= 1, got " +
                          std::to_string(x.rows()) + "x" +
                          std::to_string(x.cols()));
  const double dev = max_ortho_deviation(x);
  if (!(dev <= tol))
    throw ValidationError(
        "validate_stiefel: columns not orthonormal, max deviation " +
        std::to_string(dev));
  return x;
}

/// Modified Gram-Schmidt with a second pass. R's diagonal stays positive,
/// so applying this to a Gaussian matrix yields an exact Haar draw.
inline void orthonormalize_columns(Eigen::MatrixXd& x) {
  const Eigen::Index p = x.cols();
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0; i < j; ++i)
        x.col(j) -= x.col(i).dot(x.col(j)) * x.col(i);
      const double nrm = x.col(j).norm();
      if (nrm < 1e-300)
        throw DegeneracyError("orthonormalize_columns: rank deficient input");
      x.col(j) /= nrm;
    }
  }
}

inline void haar_sample_inplace(Eigen::MatrixXd& x, Rng& rng) {
  for (;;) {
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rnorm(rng);
    try {
      orthonormalize_columns(x);
      return;
    } catch (const DegeneracyError&) {
      // measure-zero redraw
    }
  }
}

/// Draw from the normalized Haar measure on V_{n,p}.
inline Eigen::MatrixXd haar_sample(int n, int p, Rng& rng) {
  if (n < p || p < 1)
    throw ValidationError("haar_sample: need n >= p >= 1");
  Eigen::MatrixXd x(n, p);
  haar_sample_inplace(x, rng);
  return x;
}

/// F = M diag(d) V^T with M's first row positive and d strictly descending.
struct SignedSVD {
  Eigen::MatrixXd m;  // n x p, first-row entries > 0
  Eigen::VectorXd d;  // strictly descending, positive
  Eigen::MatrixXd v;  // p x p orthogonal

  Eigen::MatrixXd reconstruct() const {
    return m * d.asDiagonal() * v.transpose();
  }
};

/// The sign-fixed thin SVD. Throws DegeneracyError for tied/vanishing
/// singular values or first-row entries too close to zero to fix a sign.
inline SignedSVD unique_svd(const Eigen::MatrixXd& f, double tie_tol = 1e-10,
                            double sign_tol = 1e-12) {
  if (f.rows() < f.cols() || f.cols() < 1)
    throw ValidationError("unique_svd: need n >= p >= 1");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      f, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SignedSVD out;
  out.m = svd.matrixU();
  out.d = svd.singularValues();
  out.v = svd.matrixV();
  const Eigen::Index p = f.cols();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (out.d[j] <= tie_tol)
      throw DegeneracyError("unique_svd: singular value " +
                            std::to_string(j) + " vanishes");
    if (j + 1 < p && out.d[j] - out.d[j + 1] <= tie_tol)
      throw DegeneracyError("unique_svd: tied singular values at " +
                            std::to_string(j));
    if (std::abs(out.m(0, j)) <= sign_tol)
      throw DegeneracyError(
          "unique_svd: first-row entry too small to fix column sign");
    if (out.m(0, j) < 0.0) {
      out.m.col(j) = -out.m.col(j);
      out.v.col(j) = -out.v.col(j);
    }
  }
  return out;
}

/// Principal-angle distance sqrt(sum theta_i^2), cos theta_i the singular
/// values of X1^T X2 clamped to [-1, 1].
inline double stiefel_distance(const Eigen::MatrixXd& x1,
                               const Eigen::MatrixXd& x2) {
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols())
    throw ValidationError("stiefel_distance: shape mismatch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x1.transpose() * x2);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < svd.singularValues().size(); ++j) {
    const double c = std::min(1.0, std::max(-1.0, svd.singularValues()[j]));
    const double th = std::acos(c);
    acc += th * th;
  }
  return std::sqrt(acc);
}

}  // namespace stiefelmix
