#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stgm/errors.hpp"
#include "stgm/inference.hpp"
#include "stgm/simulator.hpp"
#include "test_helpers.hpp"

using namespace stgm;

namespace {

// Posterior of beta in the Bayes linear model y = M beta + e, e ~ N(0, S),
// beta ~ N(0, v0 I): an independent dense path.
oracle::DenseConditional dense_beta_posterior(const MatrixXd& m, const VectorXd& y,
                                              const MatrixXd& s, double v0) {
  const MatrixXd s_inv = s.inverse();
  const MatrixXd prec =
      MatrixXd::Identity(m.cols(), m.cols()) / v0 + m.transpose() * s_inv * m;
  oracle::DenseConditional out;
  out.cov = prec.inverse();
  out.mean = out.cov * (m.transpose() * (s_inv * y));
  return out;
}

MatrixXd stacked_x(const Dataset& ds) {
  MatrixXd x(static_cast<long>(ds.d()) * ds.T(), ds.k());
  for (int t = 0; t < ds.T(); ++t) {
    x.middleRows(static_cast<long>(t) * ds.d(), ds.d()) = ds.X[t];
  }
  return x;
}

VectorXd stack_z(const Dataset& ds) {
  VectorXd z(static_cast<long>(ds.d()) * ds.T());
  for (int t = 0; t < ds.T(); ++t) {
    for (int i = 0; i < ds.d(); ++i) z[static_cast<long>(t) * ds.d() + i] = ds.z(i, t);
  }
  return z;
}

struct MomentAccumulator {
  VectorXd sum;
  MatrixXd outer;
  long n = 0;
  explicit MomentAccumulator(int dim)
      : sum(VectorXd::Zero(dim)), outer(MatrixXd::Zero(dim, dim)) {}
  void add(const VectorXd& x) {
    sum += x;
    outer += x * x.transpose();
    ++n;
  }
  VectorXd mean() const { return sum / n; }
  MatrixXd cov() const {
    const VectorXd m = mean();
    return outer / n - m * m.transpose();
  }
};

// |sample mean - mean| <= 4 sqrt(var/n) componentwise.
void check_mean_within_mc(const VectorXd& sample_mean, const VectorXd& mean,
                          const MatrixXd& cov, long n) {
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double se = std::sqrt(cov(i, i) / n);
    INFO("component ", i, " sample ", sample_mean[i], " target ", mean[i],
         " se ", se);
    CHECK(std::abs(sample_mean[i] - mean[i]) < 4.0 * se + 1e-12);
  }
}

// Diagonal variance check within 4 MC standard errors of a variance
// estimate, se(var) ~ var sqrt(2/(n-1)).
void check_var_within_mc(const MatrixXd& sample_cov, const MatrixXd& cov, long n) {
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    const double se = cov(i, i) * std::sqrt(2.0 / (n - 1));
    INFO("variance component ", i);
    CHECK(std::abs(sample_cov(i, i) - cov(i, i)) < 4.0 * se + 1e-12);
  }
}

}  // namespace

TEST_CASE("beta_full_conditional scalar case") {
  // d=1, T=1, k=1, X=1, total variance 1, z=2, prior N(0,100):
  // mean = 2 / 1.01, var = 1 / 1.01.
  RngStream rng(1);
  Dataset ds = oracle::toy_dataset(1, 1, 1, rng);
  ds.z(0, 0) = 2.0;
  PriorSpec prior;
  ParamState psi;
  psi.beta = VectorXd::Zero(1);
  psi.sigma2_eps = 0.4;
  psi.corr = ExpSpatialParams{0.1, 0.6};
  const auto ctx = LikelihoodContext::build(ds);
  const auto fc = beta_full_conditional(ModelKind::A1, psi, ds, prior, ctx);
  CHECK(fc.mean[0] == doctest::Approx(1.98019801980198).epsilon(1e-10));
  const double var = fc.cov.L(0, 0) * fc.cov.L(0, 0);
  CHECK(var == doctest::Approx(0.99009900990099).epsilon(1e-10));
}

TEST_CASE("beta_full_conditional flat-prior limit equals GLS") {
  RngStream rng(3);
  Dataset ds = oracle::toy_dataset(3, 4, 2, rng);
  PriorSpec prior;
  prior.beta_var = 1e12;
  ParamState psi;
  psi.beta = VectorXd::Zero(2);
  psi.sigma2_eps = 0.3;
  psi.corr = ExpSpatialParams{0.05, 0.7};
  const auto ctx = LikelihoodContext::build(ds);
  const auto fc = beta_full_conditional(ModelKind::A1, psi, ds, prior, ctx);

  const auto joint = oracle::a1_data_joint(psi, ds);
  const MatrixXd x = stacked_x(ds);
  const MatrixXd s_inv = joint.cov.inverse();
  const VectorXd gls =
      (x.transpose() * s_inv * x).inverse() * (x.transpose() * s_inv * stack_z(ds));
  CHECK((fc.mean - gls).norm() < 1e-6);
}

TEST_CASE("beta_full_conditional dense oracle per model") {
  RngStream rng(5);
  PriorSpec prior;

  SUBCASE("A1") {
    Dataset ds = oracle::toy_dataset(3, 4, 2, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(2);
    psi.sigma2_eps = 0.4;
    psi.corr = ExpSpatialParams{0.04, 0.6};
    const auto ctx = LikelihoodContext::build(ds);
    const auto fc = beta_full_conditional(ModelKind::A1, psi, ds, prior, ctx);
    const auto joint = oracle::a1_data_joint(psi, ds);
    const auto oracle_post =
        dense_beta_posterior(stacked_x(ds), stack_z(ds), joint.cov, prior.beta_var);
    CHECK((fc.mean - oracle_post.mean).norm() < 1e-8);
    CHECK((fc.cov.L * fc.cov.L.transpose() - oracle_post.cov).norm() < 1e-8);
  }

  SUBCASE("A2 conditions on the latent field") {
    Dataset ds = oracle::toy_dataset(2, 3, 2, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(2);
    psi.sigma2_eps = 0.2;
    psi.corr = SeparableParams{0.7, 0.05, 0.6};
    psi.latent = MatrixXd(2, 3);
    for (int t = 0; t < 3; ++t) {
      for (int i = 0; i < 2; ++i) psi.latent(i, t) = rng.normal();
    }
    const auto ctx = LikelihoodContext::build(ds);
    const auto fc = beta_full_conditional(ModelKind::A2, psi, ds, prior, ctx);
    // Oracle: "data" is U with covariance sigma2_omega * K.
    const auto joint = oracle::a2_uz_joint(psi, ds);
    const long n = 6;
    VectorXd u_vec(n);
    for (int t = 0; t < 3; ++t) {
      for (int i = 0; i < 2; ++i) u_vec[t * 2 + i] = psi.latent(i, t);
    }
    const auto oracle_post = dense_beta_posterior(
        stacked_x(ds), u_vec, joint.cov.topLeftCorner(n, n), prior.beta_var);
    CHECK((fc.mean - oracle_post.mean).norm() < 1e-8);
    CHECK((fc.cov.L * fc.cov.L.transpose() - oracle_post.cov).norm() < 1e-8);
  }

  SUBCASE("A3 with a missing cell") {
    Dataset ds = oracle::toy_dataset(2, 2, 2, rng);
    ds.present(0, 1) = false;
    ParamState psi;
    psi.beta = VectorXd::Zero(2);
    psi.sigma2_eps = 0.3;
    GneitingParams g;
    g.variant = GneitingVariant::A3_2;
    g.a = 1.0; g.alpha = 0.7; g.c = 0.05; g.gamma = 0.5; g.nu = 1.0; g.tau = 0.4;
    g.sigma2_omega = 0.8;
    psi.corr = g;
    const auto ctx = LikelihoodContext::build(ds);
    const auto fc = beta_full_conditional(ModelKind::A3_2, psi, ds, prior, ctx);

    const auto joint = oracle::a3_data_joint(psi, ds);
    std::vector<int> keep = {0, 1, 3};  // cell (0,1) is global index 2
    MatrixXd xs(3, 2), cs(3, 3);
    VectorXd zs(3);
    const MatrixXd x = stacked_x(ds);
    const VectorXd z = stack_z(ds);
    for (size_t a = 0; a < keep.size(); ++a) {
      xs.row(a) = x.row(keep[a]);
      zs[a] = z[keep[a]];
      for (size_t b = 0; b < keep.size(); ++b) cs(a, b) = joint.cov(keep[a], keep[b]);
    }
    const auto oracle_post = dense_beta_posterior(xs, zs, cs, prior.beta_var);
    CHECK((fc.mean - oracle_post.mean).norm() < 1e-8);
    CHECK((fc.cov.L * fc.cov.L.transpose() - oracle_post.cov).norm() < 1e-8);
  }

  SUBCASE("B subtracts the latent level") {
    Dataset ds = oracle::toy_dataset(3, 3, 2, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(2);
    psi.sigma2_eps = 0.25;
    psi.corr = ExpSpatialParams{0.06, 0.5};
    psi.dyn = DynamicsParams{0.5, 0.3, prior.sigma2_B};
    psi.latent = MatrixXd(1, 4);
    psi.latent << 0.2, -0.4, 0.6, 0.1;
    const auto ctx = LikelihoodContext::build(ds);
    const auto fc = beta_full_conditional(ModelKind::B, psi, ds, prior, ctx);

    // Oracle: y = Z - K y_t stacked, error covariance block diag Sigma.
    const MatrixXd sig = 0.5 * oracle::exp_corr_matrix(ds.sites, 0.06) +
                         0.25 * MatrixXd::Identity(3, 3);
    MatrixXd s = MatrixXd::Zero(9, 9);
    VectorXd y(9);
    for (int t = 0; t < 3; ++t) {
      s.block(t * 3, t * 3, 3, 3) = sig;
      for (int i = 0; i < 3; ++i) y[t * 3 + i] = ds.z(i, t) - psi.latent(0, t + 1);
    }
    const auto oracle_post = dense_beta_posterior(stacked_x(ds), y, s, prior.beta_var);
    CHECK((fc.mean - oracle_post.mean).norm() < 1e-8);
    CHECK((fc.cov.L * fc.cov.L.transpose() - oracle_post.cov).norm() < 1e-8);
  }

  SUBCASE("C has diagonal errors") {
    Dataset ds = oracle::toy_dataset(2, 3, 2, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(2);
    psi.sigma2_eps = 0.15;
    psi.corr = ExpSpatialParams{0.05, 0.6};
    psi.dyn = DynamicsParams{0.4, 0.0, prior.sigma2_C};
    psi.latent = MatrixXd(2, 4);
    for (int t = 0; t < 4; ++t) {
      for (int i = 0; i < 2; ++i) psi.latent(i, t) = rng.normal();
    }
    const auto ctx = LikelihoodContext::build(ds);
    const auto fc = beta_full_conditional(ModelKind::C, psi, ds, prior, ctx);

    VectorXd y(6);
    for (int t = 0; t < 3; ++t) {
      for (int i = 0; i < 2; ++i) y[t * 2 + i] = ds.z(i, t) - psi.latent(i, t + 1);
    }
    const auto oracle_post =
        dense_beta_posterior(stacked_x(ds), y,
                             MatrixXd(0.15 * MatrixXd::Identity(6, 6)), prior.beta_var);
    CHECK((fc.mean - oracle_post.mean).norm() < 1e-8);
    CHECK((fc.cov.L * fc.cov.L.transpose() - oracle_post.cov).norm() < 1e-8);
  }
}

TEST_CASE("variance_full_conditional shapes and scales") {
  RngStream rng(7);
  PriorSpec prior;  // IG(2,1)

  SUBCASE("A2 sigma2_eps with Z == U gives scale b") {
    Dataset ds = oracle::toy_dataset(2, 3, 1, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.corr = SeparableParams{0.8, 0.05, 0.5};
    psi.latent = MatrixXd(2, 3);
    for (int t = 0; t < 3; ++t) {
      for (int i = 0; i < 2; ++i) psi.latent(i, t) = ds.z(i, t);
    }
    const auto ctx = LikelihoodContext::build(ds);
    const auto ig = variance_full_conditional(ModelKind::A2, VarianceParam::Sigma2Eps,
                                              psi, ds, prior, ctx);
    CHECK(ig.shape == doctest::Approx(2.0 + 3.0));  // a + Td/2 = 2 + 3
    CHECK(ig.scale == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("B sigma2_eta with an exact AR fit gives scale b") {
    Dataset ds = oracle::toy_dataset(2, 2, 1, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.corr = ExpSpatialParams{0.1, 0.5};
    psi.dyn = DynamicsParams{0.7, 0.2, prior.sigma2_B};
    psi.latent = MatrixXd(1, 3);
    psi.latent << 1.0, 0.7, 0.49;  // y_t = rho y_{t-1} exactly
    const auto ctx = LikelihoodContext::build(ds);
    const auto ig = variance_full_conditional(ModelKind::B, VarianceParam::Sigma2Eta,
                                              psi, ds, prior, ctx);
    CHECK(ig.shape == doctest::Approx(2.0 + 1.0));  // a + T/2
    CHECK(ig.scale == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("C sigma2_omega shape arithmetic") {
    Dataset ds = oracle::toy_dataset(2, 3, 1, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.corr = ExpSpatialParams{0.1, 0.5};
    psi.dyn = DynamicsParams{0.5, 0.0, prior.sigma2_C};
    psi.latent = MatrixXd::Zero(2, 4);
    const auto ctx = LikelihoodContext::build(ds);
    const auto ig = variance_full_conditional(ModelKind::C, VarianceParam::Sigma2Omega,
                                              psi, ds, prior, ctx);
    CHECK(ig.shape == doctest::Approx(5.0));  // a + dT/2 = 2 + 3
  }

  SUBCASE("quadratic scales match dense formulas") {
    Dataset ds = oracle::toy_dataset(2, 2, 2, rng);
    ParamState psi;
    psi.beta = VectorXd(2);
    psi.beta << 0.3, -0.1;
    psi.sigma2_eps = 0.2;
    psi.corr = SeparableParams{0.9, 0.04, 0.7};
    psi.latent = MatrixXd(2, 2);
    psi.latent << 0.4, -0.2, 0.1, 0.8;
    const auto ctx = LikelihoodContext::build(ds);
    const auto ig = variance_full_conditional(ModelKind::A2, VarianceParam::Sigma2Omega,
                                              psi, ds, prior, ctx);
    const auto joint = oracle::a2_uz_joint(psi, ds);
    const MatrixXd k = joint.cov.topLeftCorner(4, 4) / 0.7;  // correlation part
    VectorXd resid(4);
    for (int t = 0; t < 2; ++t) {
      for (int i = 0; i < 2; ++i) {
        resid[t * 2 + i] = psi.latent(i, t) - ds.X[t].row(i).dot(psi.beta);
      }
    }
    CHECK(ig.scale ==
          doctest::Approx(1.0 + 0.5 * resid.dot(k.inverse() * resid)).epsilon(1e-10));
  }

  SUBCASE("non-conjugate pairs are contract errors") {
    Dataset ds = oracle::toy_dataset(2, 2, 1, rng);
    ParamState psi = default_init(ModelKind::A1, ds, prior);
    const auto ctx = LikelihoodContext::build(ds);
    CHECK_THROWS_AS(variance_full_conditional(ModelKind::A1, VarianceParam::Sigma2Eps,
                                              psi, ds, prior, ctx),
                    ContractError);
    ParamState psib = default_init(ModelKind::B, ds, prior);
    CHECK_THROWS_AS(variance_full_conditional(ModelKind::B, VarianceParam::Sigma2Omega,
                                              psib, ds, prior, ctx),
                    ContractError);
  }
}

TEST_CASE("mh_update mechanics") {
  SUBCASE("zero step size always accepts") {
    RngStream rng(9);
    MhAdaptState adapt;
    adapt.log_sd = -40.0;  // proposal numerically equal to the current point
    adapt.adapting = false;
    const Transform tr{Transform::Kind::Log, 0, 0};
    auto target = [](double x) { return -x * x; };
    int accepted = 0;
    for (int i = 0; i < 200; ++i) {
      accepted += mh_update(1.0, tr, target, rng, adapt).second ? 1 : 0;
    }
    CHECK(accepted == 200);
  }

  SUBCASE("adaptation reaches the target acceptance on a normal target") {
    RngStream rng(11);
    MhAdaptState adapt;
    adapt.target = 0.44;
    const Transform tr{Transform::Kind::Log, 0, 0};
    // Log-normal-ish target on x > 0: standard normal in log space.
    auto target = [](double x) {
      const double y = std::log(x);
      return -0.5 * y * y - y;  // includes the density-change term
    };
    double x = 1.0;
    for (int i = 0; i < 4000; ++i) {
      x = mh_update(x, tr, target, rng, adapt).first;
    }
    adapt.adapting = false;
    for (int i = 0; i < 8000; ++i) {
      x = mh_update(x, tr, target, rng, adapt).first;
    }
    CHECK(adapt.acceptance_rate() == doctest::Approx(0.44).epsilon(0.25));
    CHECK(std::abs(adapt.acceptance_rate() - 0.44) < 0.1);
  }

  SUBCASE("support enforcement under a unit-interval prior") {
    RngStream rng(13);
    MhAdaptState adapt;
    const Transform tr{Transform::Kind::Interval, 0.0, 1.0};
    auto target = [](double x) {
      return (x > 0.0 && x < 1.0) ? 0.0
                                  : -std::numeric_limits<double>::infinity();
    };
    double x = 0.5;
    for (int i = 0; i < 100000; ++i) {
      x = mh_update(x, tr, target, rng, adapt).first;
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
  }
}

TEST_CASE("ffbs_model_b") {
  RngStream rng(17);
  PriorSpec prior;

  SUBCASE("degenerate dynamics pin the path") {
    Dataset ds = oracle::toy_dataset(2, 4, 1, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.sigma2_eps = 0.5;
    psi.corr = ExpSpatialParams{0.1, 0.5};
    psi.dyn = DynamicsParams{0.8, 1e-20, 1e-20};
    psi.latent = MatrixXd::Zero(1, 5);
    const auto ctx = LikelihoodContext::build(ds);
    RngStream r2 = rng.derive(1);
    const VectorXd y = ffbs_model_b(psi, ds, r2, ctx);
    CHECK(std::abs(y[0]) < 1e-6);
    for (int t = 1; t <= 4; ++t) {
      CHECK(std::abs(y[t] - 0.8 * y[t - 1]) < 1e-6);
    }
  }

  SUBCASE("draw moments match dense conditioning, d=2 T=3") {
    Dataset ds = oracle::toy_dataset(2, 3, 2, rng);
    ParamState psi;
    psi.beta = VectorXd(2);
    psi.beta << 0.4, -0.2;
    psi.sigma2_eps = 0.3;
    psi.corr = ExpSpatialParams{0.05, 0.6};
    psi.dyn = DynamicsParams{0.6, 0.4, prior.sigma2_B};
    psi.latent = MatrixXd::Zero(1, 4);
    const auto ctx = LikelihoodContext::build(ds);

    const auto joint = oracle::b_zy_joint(psi, ds);
    std::vector<int> obs_idx(6);
    for (int i = 0; i < 6; ++i) obs_idx[i] = i;
    const auto cond = oracle::dense_condition(joint, obs_idx, stack_z(ds));

    const long n = 50000;
    RngStream r2 = rng.derive(2);
    MomentAccumulator acc(4);
    for (long i = 0; i < n; ++i) acc.add(ffbs_model_b(psi, ds, r2, ctx));
    check_mean_within_mc(acc.mean(), cond.mean, cond.cov, n);
    check_var_within_mc(acc.cov(), cond.cov, n);
  }

  SUBCASE("data-free limit reproduces the stationary AR prior") {
    Dataset ds = oracle::toy_dataset(2, 20, 1, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.sigma2_eps = 1e8;  // observations carry no information
    psi.corr = ExpSpatialParams{0.1, 1e8};
    const double rho = 0.6, s2eta = 0.5;
    psi.dyn = DynamicsParams{rho, s2eta, s2eta / (1 - rho * rho)};
    psi.latent = MatrixXd::Zero(1, 21);
    const auto ctx = LikelihoodContext::build(ds);
    const long n = 50000;
    RngStream r3 = rng.derive(3);
    double s = 0, s2 = 0;
    for (long i = 0; i < n; ++i) {
      const VectorXd y = ffbs_model_b(psi, ds, r3, ctx);
      s += y[20];
      s2 += y[20] * y[20];
    }
    const double var = s2 / n - (s / n) * (s / n);
    const double target = s2eta / (1 - rho * rho);
    CHECK(var == doctest::Approx(target).epsilon(4.0 * std::sqrt(2.0 / n) + 0.01));
  }
}

TEST_CASE("ffbs_model_c") {
  RngStream rng(19);
  PriorSpec prior;

  SUBCASE("d=1 matches model B moments under the parameter mapping") {
    Dataset ds = oracle::toy_dataset(1, 3, 1, rng);
    // C with d=1: obs variance sigma2_eps, innovations sigma2_omega.
    ParamState psi_c;
    psi_c.beta = VectorXd::Zero(1);
    psi_c.sigma2_eps = 0.3;
    psi_c.corr = ExpSpatialParams{0.1, 0.4};
    psi_c.dyn = DynamicsParams{0.5, 0.0, 1.0};
    psi_c.latent = MatrixXd::Zero(1, 4);

    ParamState psi_b;
    psi_b.beta = VectorXd::Zero(1);
    psi_b.sigma2_eps = 0.3;  // Sigma_{omega+eps} = s2w + s2e must equal 0.3
    psi_b.corr = ExpSpatialParams{0.1, 1e-12};
    psi_b.dyn = DynamicsParams{0.5, 0.4, 1.0};
    psi_b.latent = MatrixXd::Zero(1, 4);

    const auto ctx = LikelihoodContext::build(ds);
    const long n = 50000;
    RngStream rc = rng.derive(1), rb = rng.derive(2);
    MomentAccumulator mc(4), mb(4);
    for (long i = 0; i < n; ++i) {
      mc.add(ffbs_model_c(psi_c, ds, rc, ctx).row(0).transpose());
      mb.add(ffbs_model_b(psi_b, ds, rb, ctx));
    }
    for (int t = 0; t < 4; ++t) {
      const double se = std::sqrt((mc.cov()(t, t) + mb.cov()(t, t)) / n);
      CHECK(std::abs(mc.mean()[t] - mb.mean()[t]) < 4 * se + 1e-10);
    }
  }

  SUBCASE("draw moments match dense conditioning, d=2 T=2") {
    Dataset ds = oracle::toy_dataset(2, 2, 2, rng);
    ParamState psi;
    psi.beta = VectorXd(2);
    psi.beta << 0.2, 0.3;
    psi.sigma2_eps = 0.2;
    psi.corr = ExpSpatialParams{0.06, 0.5};
    psi.dyn = DynamicsParams{0.7, 0.0, prior.sigma2_C};
    psi.latent = MatrixXd::Zero(2, 3);
    const auto ctx = LikelihoodContext::build(ds);

    const auto joint = oracle::c_zy_joint(psi, ds);
    std::vector<int> obs_idx(4);
    for (int i = 0; i < 4; ++i) obs_idx[i] = i;
    const auto cond = oracle::dense_condition(joint, obs_idx, stack_z(ds));

    const long n = 50000;
    RngStream r2 = rng.derive(4);
    MomentAccumulator acc(6);
    for (long i = 0; i < n; ++i) {
      const MatrixXd y = ffbs_model_c(psi, ds, r2, ctx);
      VectorXd stacked(6);
      for (int t = 0; t < 3; ++t) {
        stacked.segment(t * 2, 2) = y.col(t);
      }
      acc.add(stacked);
    }
    check_mean_within_mc(acc.mean(), cond.mean, cond.cov, n);
    check_var_within_mc(acc.cov(), cond.cov, n);
  }

  SUBCASE("missing day still filters correctly") {
    Dataset ds = oracle::toy_dataset(2, 2, 1, rng);
    ds.present(0, 1) = false;
    ds.present(1, 1) = false;  // day 2 fully missing
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.sigma2_eps = 0.2;
    psi.corr = ExpSpatialParams{0.06, 0.5};
    psi.dyn = DynamicsParams{0.7, 0.0, prior.sigma2_C};
    psi.latent = MatrixXd::Zero(2, 3);
    const auto ctx = LikelihoodContext::build(ds);

    const auto joint = oracle::c_zy_joint(psi, ds);
    std::vector<int> obs_idx = {0, 1};
    VectorXd z_obs(2);
    z_obs << ds.z(0, 0), ds.z(1, 0);
    const auto cond = oracle::dense_condition(joint, obs_idx, z_obs);

    const long n = 50000;
    RngStream r2 = rng.derive(5);
    MomentAccumulator acc(6);
    for (long i = 0; i < n; ++i) {
      const MatrixXd y = ffbs_model_c(psi, ds, r2, ctx);
      VectorXd stacked(6);
      for (int t = 0; t < 3; ++t) stacked.segment(t * 2, 2) = y.col(t);
      acc.add(stacked);
    }
    // Dense conditional removes observed z; latent block sits after the
    // remaining z entries (day-2 cells first, then Y).
    VectorXd mean_y = cond.mean.tail(6);
    MatrixXd cov_y = cond.cov.bottomRightCorner(6, 6);
    check_mean_within_mc(acc.mean(), mean_y, cov_y, n);
    check_var_within_mc(acc.cov(), cov_y, n);
  }
}

TEST_CASE("enbloc_update_u") {
  RngStream rng(23);
  PriorSpec prior;
  (void)prior;

  SUBCASE("no data information returns the prior") {
    Dataset ds = oracle::toy_dataset(2, 2, 1, rng);
    ParamState psi;
    psi.beta = VectorXd::Constant(1, 2.0);
    psi.sigma2_eps = 1e10;
    psi.corr = SeparableParams{0.8, 0.05, 0.6};
    psi.latent = MatrixXd::Zero(2, 2);
    const auto ctx = LikelihoodContext::build(ds);
    const long n = 50000;
    RngStream r2 = rng.derive(1);
    MomentAccumulator acc(4);
    for (long i = 0; i < n; ++i) {
      const MatrixXd u = enbloc_update_u(psi, ds, r2, ctx);
      VectorXd v(4);
      for (int t = 0; t < 2; ++t) v.segment(t * 2, 2) = u.col(t);
      acc.add(v);
    }
    const auto joint = oracle::a2_uz_joint(psi, ds);
    check_mean_within_mc(acc.mean(), joint.mean.head(4),
                         joint.cov.topLeftCorner(4, 4), n);
    check_var_within_mc(acc.cov(), joint.cov.topLeftCorner(4, 4), n);
  }

  SUBCASE("full conditional matches dense, d=2 T=2") {
    Dataset ds = oracle::toy_dataset(2, 2, 2, rng);
    ParamState psi;
    psi.beta = VectorXd(2);
    psi.beta << 0.5, -0.2;
    psi.sigma2_eps = 0.3;
    psi.corr = SeparableParams{0.9, 0.06, 0.8};
    psi.latent = MatrixXd::Zero(2, 2);
    const auto ctx = LikelihoodContext::build(ds);

    const auto joint = oracle::a2_uz_joint(psi, ds);
    std::vector<int> obs_idx = {4, 5, 6, 7};  // Z block after U block
    const auto cond = oracle::dense_condition(joint, obs_idx, stack_z(ds));

    const long n = 50000;
    RngStream r2 = rng.derive(2);
    MomentAccumulator acc(4);
    for (long i = 0; i < n; ++i) {
      const MatrixXd u = enbloc_update_u(psi, ds, r2, ctx);
      VectorXd v(4);
      for (int t = 0; t < 2; ++t) v.segment(t * 2, 2) = u.col(t);
      acc.add(v);
    }
    check_mean_within_mc(acc.mean(), cond.mean, cond.cov, n);
    check_var_within_mc(acc.cov(), cond.cov, n);
  }

  SUBCASE("noise-free measurements interpolate observed cells") {
    Dataset ds = oracle::toy_dataset(2, 2, 1, rng);
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.sigma2_eps = 1e-12;
    psi.corr = SeparableParams{0.8, 0.05, 0.6};
    psi.latent = MatrixXd::Zero(2, 2);
    const auto ctx = LikelihoodContext::build(ds);
    RngStream r2 = rng.derive(3);
    const MatrixXd u = enbloc_update_u(psi, ds, r2, ctx);
    for (int t = 0; t < 2; ++t) {
      for (int i = 0; i < 2; ++i) {
        CHECK(u(i, t) == doctest::Approx(ds.z(i, t)).epsilon(1e-4));
      }
    }
  }

  SUBCASE("missing cells revert toward the prior mean") {
    Dataset ds = oracle::toy_dataset(2, 2, 1, rng);
    ds.present(1, 1) = false;
    ParamState psi;
    psi.beta = VectorXd::Zero(1);
    psi.sigma2_eps = 0.2;
    psi.corr = SeparableParams{0.9, 0.05, 0.7};
    psi.latent = MatrixXd::Zero(2, 2);
    const auto ctx = LikelihoodContext::build(ds);

    // Dense oracle conditions U on the three observed cells only.
    const auto joint = oracle::a2_uz_joint(psi, ds);
    std::vector<int> obs_idx = {4, 5, 6};  // cells (0,0),(1,0),(0,1)
    VectorXd z_obs(3);
    z_obs << ds.z(0, 0), ds.z(1, 0), ds.z(0, 1);
    const auto cond = oracle::dense_condition(joint, obs_idx, z_obs);

    // The chain state must first forget the initial latent; run a short
    // warmup of the U update itself (its stationary law given fixed
    // parameters is exactly the full conditional).
    const long n = 50000;
    RngStream r2 = rng.derive(4);
    MomentAccumulator acc(4);
    MatrixXd u = psi.latent;
    for (long i = 0; i < n; ++i) {
      ParamState cur = psi;
      cur.latent = u;
      u = enbloc_update_u(cur, ds, r2, ctx);
      VectorXd v(4);
      for (int t = 0; t < 2; ++t) v.segment(t * 2, 2) = u.col(t);
      acc.add(v);
    }
    // cond covers (U all 4 cells, missing z cell); compare the U block.
    check_mean_within_mc(acc.mean(), cond.mean.head(4),
                         cond.cov.topLeftCorner(4, 4), n);
    check_var_within_mc(acc.cov(), cond.cov.topLeftCorner(4, 4), n);
  }
}

TEST_CASE("run_mcmc basic contracts") {
  RngStream rng(29);
  PriorSpec prior;
  Dataset ds = oracle::toy_dataset(3, 6, 2, rng);
  ds.z.array() += 2.0;

  SUBCASE("single retained state") {
    McmcConfig cfg;
    cfg.n_iter = 6;
    cfg.burn_in = 5;
    cfg.thin = 1;
    RngStream r2(100);
    const Chain chain = run_mcmc(ModelKind::A1, ds, prior, cfg, r2);
    CHECK(chain.draws.size() == 1);
  }

  SUBCASE("determinism: identical seeds give identical chains") {
    McmcConfig cfg;
    cfg.n_iter = 40;
    cfg.burn_in = 10;
    for (ModelKind kind : {ModelKind::A1, ModelKind::A2, ModelKind::A3_1,
                           ModelKind::B, ModelKind::C}) {
      RngStream ra(7), rb(7);
      const Chain a = run_mcmc(kind, ds, prior, cfg, ra);
      const Chain b = run_mcmc(kind, ds, prior, cfg, rb);
      REQUIRE(a.draws.size() == b.draws.size());
      CHECK(a.draw_matrix() == b.draw_matrix());
      for (size_t i = 0; i < a.draws.size(); ++i) {
        CHECK(a.draws[i].latent == b.draws[i].latent);
      }
    }
  }

  SUBCASE("MH bookkeeping matches the structural table") {
    McmcConfig cfg;
    cfg.n_iter = 30;
    cfg.burn_in = 10;
    for (ModelKind kind : all_model_kinds()) {
      if (kind == ModelKind::A3_1 || kind == ModelKind::A3_2) continue;  // slow path elsewhere
      RngStream r2(3);
      const Chain chain = run_mcmc(kind, ds, prior, cfg, r2);
      CHECK(static_cast<int>(chain.acceptance.size()) ==
            model_meta(kind).n_mh_params);
      for (const auto& [name, rate] : chain.acceptance) {
        CHECK(rate >= 0.0);
        CHECK(rate <= 1.0);
      }
    }
  }

  SUBCASE("invalid config rejected before work") {
    McmcConfig cfg;
    cfg.n_iter = 10;
    cfg.burn_in = 10;
    RngStream r2(1);
    CHECK_THROWS_AS(run_mcmc(ModelKind::A1, ds, prior, cfg, r2), ConfigError);
  }
}

TEST_CASE("diagnostics") {
  Chain chain;
  chain.kind = ModelKind::A1;
  chain.prior = PriorSpec{};
  chain.param_names = {"beta_0", "sigma2_eps", "sigma2_omega", "theta"};
  chain.n_iter = 1000;
  chain.burn_in = 0;

  RngStream rng(31);
  for (int i = 0; i < 1000; ++i) {
    ParamState psi;
    psi.beta = VectorXd::Constant(1, rng.normal());
    psi.sigma2_eps = 1.0;  // constant chain component
    psi.corr = ExpSpatialParams{0.5, std::exp(0.1 * rng.normal())};
    chain.draws.push_back(psi);
  }
  const auto rep = diagnostics(chain);
  REQUIRE(rep.params.size() == 4);
  // iid normal chain: ESS within [700, 1300].
  CHECK(rep.params[0].ess > 700.0);
  CHECK(rep.params[0].ess < 1300.0);
  CHECK(rep.params[0].acf[0] == doctest::Approx(1.0));
  // Constant component flagged degenerate.
  CHECK(rep.params[1].degenerate);
  CHECK(rep.params[1].ess == 0.0);

  Chain small = chain;
  small.draws.resize(5);
  CHECK_THROWS_AS(diagnostics(small), DomainError);
}

TEST_CASE("chain csv round trip") {
  RngStream rng(37);
  PriorSpec prior;
  Dataset ds = oracle::toy_dataset(2, 4, 2, rng);
  McmcConfig cfg;
  cfg.n_iter = 25;
  cfg.burn_in = 5;
  RngStream r2(11);
  const Chain chain = run_mcmc(ModelKind::C, ds, prior, cfg, r2);

  const std::string path = "/tmp/stgm_chain_test.csv";
  save_chain_csv(chain, path, /*include_latent=*/true);
  const Chain back = load_chain_csv(path, ModelKind::C, prior, ds.d(), ds.T());
  REQUIRE(back.draws.size() == chain.draws.size());
  CHECK(back.draw_matrix() == chain.draw_matrix());
  for (size_t i = 0; i < chain.draws.size(); ++i) {
    CHECK(back.draws[i].latent == chain.draws[i].latent);
  }

  // Without latent columns the A2/B/C loader must refuse.
  save_chain_csv(chain, path, /*include_latent=*/false);
  CHECK_THROWS_AS(load_chain_csv(path, ModelKind::C, prior, ds.d(), ds.T()),
                  SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("stationarity smoke test: chains initialized at truth stay put") {
  // Simulate, initialize at the generating values, run a short chain and
  // verify the running means stay within 5 posterior sds of truth.
  PriorSpec prior;
  for (ModelKind kind : {ModelKind::A1, ModelKind::C}) {
    SimLayout layout;
    layout.d = 6;
    layout.T = 25;
    layout.k = 2;
    layout.truth = default_truth(kind, 2, prior);
    RngStream rng(101 + static_cast<int>(kind));
    const Dataset ds = simulate(kind, layout, rng);

    McmcConfig cfg;
    cfg.n_iter = 1000;
    cfg.burn_in = 200;
    ParamState init = layout.truth;
    if (kind == ModelKind::C) init.latent = MatrixXd::Zero(6, 26);
    RngStream rfit(55);
    const Chain chain = run_mcmc(kind, ds, prior, cfg, rfit, init);

    const MatrixXd m = chain.draw_matrix();
    const auto truths = flatten_params(kind, prior, layout.truth);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double mean = m.col(c).mean();
      const double sd = std::sqrt((m.col(c).array() - mean).square().sum() /
                                  (m.rows() - 1));
      INFO(to_string(kind), " parameter ", truths[c].first);
      CHECK(std::abs(mean - truths[c].second) < 5.0 * sd + 1e-6);
    }
  }
}
