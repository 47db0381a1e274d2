#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stgm/covariance.hpp"
#include "stgm/errors.hpp"
#include "stgm/rng.hpp"

using namespace stgm;

TEST_CASE("exp_corr paper range arithmetic") {
  // Posterior decay values quoted with their correlation ranges.
  CHECK(exp_corr(0.0033, 190.0) == doctest::Approx(0.534).epsilon(2e-3));
  CHECK(exp_corr(0.0033, 190.0) > 0.53);
  CHECK(exp_corr(0.0033, 190.0) < 0.55);
  CHECK(exp_corr(0.032, 95.0) > 0.045);
  CHECK(exp_corr(0.032, 95.0) < 0.055);
  CHECK(exp_corr(0.492, 6.0) > 0.045);
  CHECK(exp_corr(0.492, 6.0) < 0.06);
  CHECK(exp_corr(0.0022, 190.0) > 0.65);
  CHECK(exp_corr(0.0022, 190.0) < 0.67);

  CHECK(exp_corr(1.7, 0.0) == 1.0);
  CHECK_THROWS_AS(exp_corr(0.5, -1.0), DomainError);
  CHECK_THROWS_AS(exp_corr(0.0, 1.0), DomainError);
}

TEST_CASE("exp_corr semigroup property") {
  RngStream rng(1);
  for (int i = 0; i < 50; ++i) {
    const double theta = 0.01 + rng.uniform();
    const double h1 = 10.0 * rng.uniform();
    const double h2 = 10.0 * rng.uniform();
    CHECK(exp_corr(theta, h1 + h2) ==
          doctest::Approx(exp_corr(theta, h1) * exp_corr(theta, h2))
              .epsilon(1e-12));
  }
}

TEST_CASE("gneiting_corr values and ranges") {
  GneitingParams p1;
  p1.variant = GneitingVariant::A3_1;
  p1.a = 0.058; p1.alpha = 0.736; p1.b = 0.047; p1.c = 0.549; p1.gamma = 0.110;

  // Value at zero lags is exactly 1 for both families.
  CHECK(gneiting_corr(p1, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));

  // Evaluation at the published posterior means, h=50 km, l=1 day.
  // Independent high-precision evaluation gives 0.14324785562971.
  CHECK(gneiting_corr(p1, 50.0, 1.0) ==
        doctest::Approx(0.14324785562971).epsilon(1e-10));

  GneitingParams p2;
  p2.variant = GneitingVariant::A3_2;
  p2.a = 4.088; p2.alpha = 0.800; p2.tau = 0.4756; p2.c = 0.982;
  p2.gamma = 0.184; p2.nu = 0.801;
  CHECK(gneiting_corr(p2, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gneiting_corr(p2, 50.0, 1.0) ==
        doctest::Approx(0.13601873759655).epsilon(1e-10));

  // Monotone decrease in h at fixed l, and in l at fixed h.
  for (const auto& p : {p1, p2}) {
    double prev = 2.0;
    for (int h = 0; h <= 100; h += 10) {
      const double v = gneiting_corr(p, h, 1.0);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
    prev = 2.0;
    for (int l = 0; l <= 10; ++l) {
      const double v = gneiting_corr(p, 30.0, l);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("gneiting parameter validation") {
  GneitingParams p;
  p.variant = GneitingVariant::A3_1;
  p.alpha = 1.5;
  CHECK_THROWS_AS(gneiting_corr(p, 1.0, 1.0), DomainError);
  p.alpha = 0.5;
  p.b = 0.0;
  CHECK_THROWS_AS(gneiting_corr(p, 1.0, 1.0), DomainError);
}

TEST_CASE("gneiting A3-2 with tau=0 loses the space-time interaction") {
  GneitingParams p;
  p.variant = GneitingVariant::A3_2;
  p.a = 2.0; p.alpha = 0.7; p.c = 0.4; p.gamma = 0.6; p.nu = 1.2; p.tau = 0.0;
  for (double h : {0.0, 5.0, 20.0, 80.0}) {
    for (double l : {0.0, 1.0, 4.0, 9.0}) {
      CHECK(gneiting_corr(p, h, l) ==
            doctest::Approx(gneiting_corr(p, h, 0.0)).epsilon(1e-14));
    }
  }
}

TEST_CASE("spatial_corr_matrix") {
  MatrixXd h1 = MatrixXd::Zero(1, 1);
  CHECK(spatial_corr_matrix(0.3, h1)(0, 0) == 1.0);

  MatrixXd h(2, 2);
  h << 0, 5, 5, 0;
  const MatrixXd c = spatial_corr_matrix(0.2, h);
  CHECK(c(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(c(0, 0) == 1.0);

  // PSD on random site sets: Cholesky succeeds.
  RngStream rng(17);
  const int d = 20;
  MatrixXd hh(d, d);
  std::vector<double> x(d), y(d);
  for (int i = 0; i < d; ++i) {
    x[i] = 100.0 * rng.uniform();
    y[i] = 100.0 * rng.uniform();
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      hh(i, j) = std::hypot(x[i] - x[j], y[i] - y[j]);
    }
  }
  CHECK_NOTHROW(chol_psd(spatial_corr_matrix(0.05, hh)));
}

TEST_CASE("separable_corr_matrix") {
  SeparableParams p{0.492, 0.2, 1.0};
  MatrixXd h1 = MatrixXd::Zero(1, 1);
  const auto unit = separable_corr_matrix(p, h1, 1);
  CHECK(unit.A(0, 0) == 1.0);
  CHECK(unit.B(0, 0) == 1.0);

  // Temporal entry at lag 6 with theta1 = 0.492 sits at the ~0.05 range rule.
  const auto pair7 = separable_corr_matrix(p, h1, 7);
  CHECK(pair7.A(0, 6) == doctest::Approx(std::exp(-0.492 * 6)).epsilon(1e-12));
  CHECK(pair7.A(0, 6) > 0.045);
  CHECK(pair7.A(0, 6) < 0.06);

  // Dense Kronecker equals the elementwise double exponential on 2 x 3.
  MatrixXd h(2, 2);
  h << 0, 10, 10, 0;
  const auto pair = separable_corr_matrix(p, h, 3);
  const MatrixXd dense = pair.dense();
  for (int t = 0; t < 3; ++t) {
    for (int s = 0; s < 3; ++s) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          CHECK(dense(t * 2 + i, s * 2 + j) ==
                doctest::Approx(std::exp(-p.theta1 * std::abs(t - s)) *
                                std::exp(-p.theta2 * h(i, j)))
                    .epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("nonseparable_corr_matrix") {
  GneitingParams p;
  p.variant = GneitingVariant::A3_1;
  p.a = 0.5; p.alpha = 0.7; p.b = 0.4; p.c = 0.1; p.gamma = 0.5;

  MatrixXd h1 = MatrixXd::Zero(1, 1);
  CHECK(nonseparable_corr_matrix(p, h1, 1)(0, 0) == doctest::Approx(1.0));

  MatrixXd h(2, 2);
  h << 0, 12, 12, 0;
  const MatrixXd c = nonseparable_corr_matrix(p, h, 2);
  // Entry ((t=1,i=1),(t=2,i=2)) is the scalar function at (h12, 1).
  CHECK(c(0, 3) == doctest::Approx(gneiting_corr(p, 12.0, 1.0)).epsilon(1e-14));

  // Symmetry and unit diagonal on a random 3 x 4 instance.
  RngStream rng(23);
  MatrixXd h3(3, 3);
  std::vector<double> x(3), y(3);
  for (int i = 0; i < 3; ++i) {
    x[i] = 50 * rng.uniform();
    y[i] = 50 * rng.uniform();
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) h3(i, j) = std::hypot(x[i] - x[j], y[i] - y[j]);
  }
  const MatrixXd c34 = nonseparable_corr_matrix(p, h3, 4);
  CHECK((c34 - c34.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((c34.diagonal().array() - 1.0).abs().maxCoeff() < 1e-14);

  // Size budget.
  CHECK_THROWS_AS(nonseparable_corr_matrix(p, h3, 4, 10), ResourceError);
}

TEST_CASE("implied covariances, closed forms") {
  SUBCASE("model B additive form") {
    ExpSpatialParams e{0.1, 1.0};
    DynamicsParams dyn{0.8, 0.36, 1.0};
    // With h large the spatial term vanishes; sigma2_eta/(1-rho^2) = 1.
    CHECK(implied_cov_model_b(e, dyn, 1e9, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(implied_cov_model_b(e, dyn, 1e9, 1.0) == doctest::Approx(0.8).epsilon(1e-9));
    // Degenerate dynamics reduce to the spatial part.
    DynamicsParams none{0.5, 0.0, 1.0};
    CHECK(implied_cov_model_b(e, none, 3.0, 2.0) ==
          doctest::Approx(std::exp(-0.3)).epsilon(1e-12));
    DynamicsParams bad{1.0, 1.0, 1.0};
    CHECK_THROWS_AS(implied_cov_model_b(e, bad, 1.0, 1.0), DomainError);
  }
  SUBCASE("model C multiplicative form") {
    ExpSpatialParams e{0.1, 0.75};
    DynamicsParams dyn{0.5, 0.0, 1.0};
    CHECK(implied_cov_model_c(e, dyn, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(implied_cov_model_c(e, dyn, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    DynamicsParams zero{0.0, 0.0, 1.0};
    CHECK(implied_cov_model_c(e, zero, 2.0, 0.0) ==
          doctest::Approx(0.75 * std::exp(-0.2)).epsilon(1e-12));
    CHECK(implied_cov_model_c(e, zero, 2.0, 1.0) == doctest::Approx(0.0));
  }
}
