// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stiefelmix/specfun.hpp"
#include "support/test_util.hpp"

using namespace stiefelmix;

namespace {
Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("scalar 0F1: closed-form identities") {
  // empty argument
  CHECK(hyp0f1_scalar(0.7, 0.0) == 0.0);
  CHECK(hyp0f1_scalar(123.0, 0.0) == 0.0);
  // 0F1(1/2; z) = cosh(2 sqrt z)
  for (double z : {0.25, 1.0, 4.0, 30.0}) {
    const double expect = std::log(std::cosh(2.0 * std::sqrt(z)));
    CHECK(hyp0f1_scalar(0.5, z) == Catch::Approx(expect).epsilon(1e-12));
  }
  // 0F1(3/2; x) = sinh(2 sqrt x) / (2 sqrt x)
  {
    const double expect = std::log(std::sinh(2.0) / 2.0);
    CHECK(hyp0f1_scalar(1.5, 1.0) == Catch::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(hyp0f1_scalar(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(hyp0f1_scalar(-2.0, 1.0), std::domain_error);
}

TEST_CASE("scalar 0F1: overflow-safe for large arguments") {
  // 0F1(1/2; x) = cosh(2 sqrt x); at x = 1e4 the value is ~exp(200)
  const double x = 1e4;
  const double expect = 2.0 * std::sqrt(x) - std::log(2.0);  // log cosh approx
  CHECK(std::isfinite(hyp0f1_scalar(0.5, x)));
  CHECK(hyp0f1_scalar(0.5, x) == Catch::Approx(expect).epsilon(1e-12));
  CHECK(std::isfinite(hyp0f1_scalar(1.5, 2.5e5)));
}

TEST_CASE("matrix 0F1: trivial and collapse cases") {
  CHECK(hyp0f1_matrix2(1.5, 0.0, 0.0) == 0.0);
  // one zero concentration collapses the series to the scalar case
  CHECK(hyp0f1_matrix2(1.5, 3.0, 0.0) ==
        Catch::Approx(hyp0f1_scalar(1.5, 9.0 / 4.0)).epsilon(1e-14));
  CHECK(hyp0f1_matrix2(2.5, 0.0, 7.0) ==
        Catch::Approx(hyp0f1_scalar(2.5, 49.0 / 4.0)).epsilon(1e-14));
  // symmetric in the two coordinates
  CHECK(hyp0f1_matrix2(1.5, 2.0, 1.0) ==
        Catch::Approx(hyp0f1_matrix2(1.5, 1.0, 2.0)).epsilon(1e-14));
}

TEST_CASE("matrix 0F1: scalar/matrix consistency property") {
  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    const double x = runif(rng) * 12.0;
    const double a = 0.5 + runif(rng) * 4.0;
    CHECK(hyp0f1_matrix2(a, x, 0.0) ==
          Catch::Approx(hyp0f1_scalar(a, x * x / 4.0)).epsilon(1e-10));
  }
}

TEST_CASE("matrix 0F1: direct and log-scale paths agree") {
  // straddle the d1+d2 = 50 accumulation switch
  for (double s : {48.0, 49.9, 50.1, 55.0}) {
    const double d1 = 0.62 * s, d2 = 0.38 * s;
    const double v = hyp0f1_matrix2(1.5, d1, d2);
    CHECK(std::isfinite(v));
  }
  const double below = hyp0f1_matrix2(1.5, 30.0, 19.99);
  const double above = hyp0f1_matrix2(1.5, 30.0, 20.01);
  CHECK(above > below);
  CHECK(above - below < 0.1);
}

TEST_CASE("matrix 0F1: Monte-Carlo Haar oracle agreement") {
  Rng rng(7);
  const int n = 3, p = 2;
  const Eigen::VectorXd d = vec2(2.0, 1.0);
  const auto mc = mc_hyp0f1_oracle(n, p, d, 1000000, rng);
  const double series = std::exp(hyp0f1_matrix2(n / 2.0, d));
  CHECK(std::abs(series - mc.estimate) <= 3.0 * mc.std_error);
}

TEST_CASE("mc oracle: basic contract") {
  Rng rng(9);
  Eigen::VectorXd d0 = vec2(0.0, 0.0);
  const auto z = mc_hyp0f1_oracle(3, 2, d0, 1000, rng);
  CHECK(z.estimate == 1.0);
  CHECK(z.std_error == 0.0);
  // upper bound etr(D) (Haar expectations of etr cannot exceed the mode)
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd d = vec2(runif(rng) * 8.0, runif(rng) * 8.0);
    const auto est = mc_hyp0f1_oracle(3, 2, d, 20000, rng);
    CHECK(est.estimate <=
          std::exp(d.sum()) * (1.0 + 3.0 * est.std_error /
                                         std::max(est.estimate, 1e-300)));
  }
  CHECK_THROWS_AS(mc_hyp0f1_oracle(3, 2, d0, 10, rng), ValidationError);
  CHECK_THROWS_AS(mc_hyp0f1_oracle(1, 2, d0, 2000, rng), ValidationError);
}

TEST_CASE("upper and lower bounds of the normalizer") {
  Rng rng(11);
  const double a = 1.5;  // n = 3
  // lower-bound constant: Haar mass of the spectral ball around I*
  const double delta = 0.5;
  Eigen::MatrixXd istar(3, 2);
  istar << 1, 0, 0, 1, 0, 0;
  long hits = 0;
  const long draws = 200000;
  Eigen::MatrixXd x(3, 2);
  for (long i = 0; i < draws; ++i) {
    haar_sample_inplace(x, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x - istar);
    if (svd.singularValues()[0] < delta) ++hits;
  }
  REQUIRE(hits > 30);
  const double log_k = std::log(static_cast<double>(hits) / draws);

  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd d = vec2(runif(rng) * 10.0, runif(rng) * 10.0);
    const double lv = hyp0f1_matrix2(a, d);
    CHECK(lv <= d.sum() + 1e-9);                          // etr(D) bound
    CHECK(lv > log_k + (1.0 - delta) * d.sum());          // ball bound
  }
}

TEST_CASE("log-convexity in d") {
  Rng rng(13);
  const double a = 1.5;
  for (int rep = 0; rep < 40; ++rep) {
    Eigen::VectorXd da = vec2(runif(rng) * 10.0, runif(rng) * 10.0);
    Eigen::VectorXd db = vec2(runif(rng) * 10.0, runif(rng) * 10.0);
    for (double lam : {0.25, 0.5, 0.75}) {
      Eigen::VectorXd mid = lam * da + (1.0 - lam) * db;
      const double lhs = hyp0f1_matrix2(a, mid);
      const double rhs = lam * hyp0f1_matrix2(a, da) +
                         (1.0 - lam) * hyp0f1_matrix2(a, db);
      CHECK(lhs <= rhs + 1e-10);
    }
  }
}

TEST_CASE("partials: gradient sandwich and origin limit") {
  Rng rng(17);
  const double a = 1.5;
  for (int rep = 0; rep < 60; ++rep) {
    Eigen::VectorXd d = vec2(0.05 + runif(rng) * 10.0,
                             0.05 + runif(rng) * 10.0);
    const auto ev = hyp0f1_partials(a, d);
    CHECK(ev.grad[0] > 0.0);
    CHECK(ev.grad[0] < 1.0);
    CHECK(ev.grad[1] > 0.0);
    CHECK(ev.grad[1] < 1.0);
    // dR/dd_j < R  <=>  grad in (0,1), checked above in ratio form
  }
  const auto near0 = hyp0f1_partials(a, vec2(1e-8, 5e-9));
  CHECK(std::abs(near0.grad[0]) < 1e-7);
  CHECK(std::abs(near0.grad[1]) < 1e-7);
  const auto at0 = hyp0f1_partials(a, vec2(0.0, 0.0));
  CHECK(at0.grad[0] == 0.0);
  CHECK(at0.hess(0, 0) == Catch::Approx(1.0 / (2.0 * a)));
}

TEST_CASE("partials: finite-difference check on the spec grid") {
  const double a = 1.5;
  const double grid[5] = {0.5, 1.0, 2.0, 5.0, 10.0};
  const double step = 1e-5;
  for (double d1 : grid) {
    for (double d2 : grid) {
      Eigen::VectorXd d = vec2(d1, d2);
      const auto ev = hyp0f1_partials(a, d);
      // gradient vs central differences of the log value
      for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd dp = d, dm = d;
        dp[j] += step;
        dm[j] -= step;
        const double fd =
            (hyp0f1_matrix2(a, dp) - hyp0f1_matrix2(a, dm)) / (2.0 * step);
        CHECK(ev.grad[j] == Catch::Approx(fd).epsilon(1e-4));
      }
      // Hessian vs central differences of the (already verified) gradient
      for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd dp = d, dm = d;
        dp[j] += step;
        dm[j] -= step;
        const Eigen::VectorXd gp = hyp0f1_partials(a, dp).grad;
        const Eigen::VectorXd gm = hyp0f1_partials(a, dm).grad;
        for (int i = 0; i < 2; ++i) {
          const double fd = (gp[i] - gm[i]) / (2.0 * step);
          CHECK(ev.hess(i, j) ==
                Catch::Approx(fd).epsilon(1e-4).margin(1e-9));
        }
      }
      // symmetric PSD
      CHECK(ev.hess(0, 1) == Catch::Approx(ev.hess(1, 0)));
      CHECK(ev.hess(0, 0) > 0.0);
      CHECK(ev.hess(0, 0) * ev.hess(1, 1) -
                ev.hess(0, 1) * ev.hess(0, 1) >
            -1e-12);
    }
  }
}

TEST_CASE("partials: p = 1 against scalar identities") {
  const double a = 1.5;
  Eigen::VectorXd d(1);
  d << 3.0;
  const auto ev = hyp0f1_partials(a, d);
  CHECK(ev.log_value ==
        Catch::Approx(hyp0f1_scalar(a, 9.0 / 4.0)).epsilon(1e-12));
  const double step = 1e-6;
  Eigen::VectorXd dp = d, dm = d;
  dp[0] += step;
  dm[0] -= step;
  const double fd = (hyp0f1_scalar(a, dp[0] * dp[0] / 4.0) -
                     hyp0f1_scalar(a, dm[0] * dm[0] / 4.0)) /
                    (2.0 * step);
  CHECK(ev.grad[0] == Catch::Approx(fd).epsilon(1e-6));
  CHECK(ev.grad[0] > 0.0);
  CHECK(ev.grad[0] < 1.0);
}

TEST_CASE("series truncation cap raises a convergence error with partial") {
  try {
    hyp0f1_matrix2(1.5, 400.0, 400.0);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::isfinite(e.partial_value()));
    CHECK(e.partial_value() > 0.0);
  }
}

TEST_CASE("nr_solve_d: forward-then-invert round trips") {
  const double a = 1.5;
  {
    Eigen::VectorXd d0 = vec2(4.0, 2.0);
    const Eigen::VectorXd target = hyp0f1_h(a, d0);
    const Eigen::VectorXd back = nr_solve_d(target, a);
    CHECK(back[0] == Catch::Approx(4.0).margin(1e-6));
    CHECK(back[1] == Catch::Approx(2.0).margin(1e-6));
  }
  {
    Eigen::VectorXd d0(1);
    d0 << 7.5;
    const Eigen::VectorXd back = nr_solve_d(hyp0f1_h(a, d0), a);
    CHECK(back[0] == Catch::Approx(7.5).margin(1e-6));
  }
  // small targets give small d
  Eigen::VectorXd tiny = vec2(1e-3, 5e-4);
  const Eigen::VectorXd dtiny = nr_solve_d(tiny, a);
  CHECK(dtiny[0] < 0.02);
  CHECK(dtiny[1] < 0.02);
  // infeasible targets
  CHECK_THROWS_AS(nr_solve_d(vec2(1.0, 0.5), a), InfeasibleError);
  CHECK_THROWS_AS(nr_solve_d(vec2(0.5, -0.1), a), InfeasibleError);
}

TEST_CASE("nr_solve_d: random round trips") {
  Rng rng(23);
  const double a = 1.5;
  for (int rep = 0; rep < 30; ++rep) {
    const double hi = 0.2 + runif(rng) * 11.0;
    const double lo = hi * (0.2 + 0.6 * runif(rng));
    Eigen::VectorXd d0 = vec2(hi, lo);
    const Eigen::VectorXd back = nr_solve_d(hyp0f1_h(a, d0), a);
    CHECK((back - d0).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, hi));
  }
}
