#include "stgm/covariance.hpp"

#include <cmath>
#include <string>

#include "stgm/errors.hpp"

namespace stgm {

void GneitingParams::validate() const {
  auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!(a > 0.0)) throw DomainError("gneiting: a must be > 0");
  if (!(c > 0.0)) throw DomainError("gneiting: c must be > 0");
  if (!in_unit(alpha)) throw DomainError("gneiting: alpha must be in (0,1]");
  if (!in_unit(gamma)) throw DomainError("gneiting: gamma must be in (0,1]");
  if (!(sigma2_omega > 0.0)) throw DomainError("gneiting: sigma2_omega must be > 0");
  if (variant == GneitingVariant::A3_1) {
    if (!in_unit(b)) throw DomainError("gneiting: b must be in (0,1]");
  } else {
    if (!(nu > 0.0)) throw DomainError("gneiting: nu must be > 0");
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("gneiting: tau must be in [0,1]");
  }
}

double exp_corr(double theta, double lag) {
  if (!(theta > 0.0)) throw DomainError("exp_corr: theta must be > 0");
  if (lag < 0.0) throw DomainError("exp_corr: negative lag");
  return std::exp(-theta * lag);
}

namespace {

double gneiting_eval(const GneitingParams& p, double h, double l) {
  const double x = l * l;
  double psi;
  if (p.variant == GneitingVariant::A3_1) {
    const double ax = p.a * std::pow(x, p.alpha);
    psi = (ax + p.b) / (p.b * (ax + 1.0));
  } else {
    psi = std::pow(p.a * std::pow(x, p.alpha) + 1.0, p.tau);
  }
  const double arg = h * h / psi;
  double phi;
  if (p.variant == GneitingVariant::A3_1) {
    phi = std::exp(-p.c * std::pow(arg, p.gamma));
  } else {
    phi = std::pow(1.0 + p.c * std::pow(arg, p.gamma), -p.nu);
  }
  return phi / psi;
}

}  // namespace

double gneiting_corr(const GneitingParams& p, double h, double l) {
  p.validate();
  if (h < 0.0 || l < 0.0) throw DomainError("gneiting_corr: negative lag");
  return gneiting_eval(p, h, l);
}

std::vector<MatrixXd> gneiting_lag_matrices(const GneitingParams& p,
                                            const MatrixXd& h, int n_lags) {
  p.validate();
  if (h.rows() != h.cols()) throw DomainError("gneiting_lag_matrices: H not square");
  if (n_lags < 1) throw DomainError("gneiting_lag_matrices: n_lags must be >= 1");
  const auto d = h.rows();
  std::vector<MatrixXd> out;
  out.reserve(n_lags);
  for (int l = 0; l < n_lags; ++l) {
    MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = gneiting_eval(p, h(i, j), l);
        g(i, j) = v;
        g(j, i) = v;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

MatrixXd spatial_corr_matrix(double theta, const MatrixXd& h) {
  if (h.rows() != h.cols()) throw DomainError("spatial_corr_matrix: H not square");
  MatrixXd out(h.rows(), h.cols());
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
      out(i, j) = exp_corr(theta, h(i, j));
    }
  }
  return out;
}

KroneckerPair separable_corr_matrix(const SeparableParams& p, const MatrixXd& h,
                                    int n_days) {
  if (!(p.theta1 > 0.0 && p.theta2 > 0.0 && p.sigma2_omega > 0.0)) {
    throw DomainError("separable_corr_matrix: parameters must be > 0");
  }
  if (n_days < 1) throw DomainError("separable_corr_matrix: n_days must be >= 1");
  MatrixXd temporal(n_days, n_days);
  for (int t = 0; t < n_days; ++t) {
    for (int s = 0; s < n_days; ++s) {
      temporal(t, s) = std::exp(-p.theta1 * std::abs(t - s));
    }
  }
  return KroneckerPair{temporal, spatial_corr_matrix(p.theta2, h)};
}

MatrixXd nonseparable_corr_matrix(const GneitingParams& p, const MatrixXd& h,
                                  int n_days, int max_dense_dim) {
  p.validate();
  const int d = static_cast<int>(h.rows());
  if (n_days < 1) throw DomainError("nonseparable_corr_matrix: n_days must be >= 1");
  const long dim = static_cast<long>(d) * n_days;
  if (dim > max_dense_dim) {
    throw ResourceError("nonseparable_corr_matrix: dT=" + std::to_string(dim) +
                        " exceeds dense budget " + std::to_string(max_dense_dim));
  }
  const auto lag = gneiting_lag_matrices(p, h, n_days);
  MatrixXd out(dim, dim);
  for (int t = 0; t < n_days; ++t) {
    for (int s = 0; s <= t; ++s) {
      out.block(t * d, s * d, d, d) = lag[t - s];
      if (s != t) out.block(s * d, t * d, d, d) = lag[t - s];
    }
  }
  return out;
}

double implied_cov_model_b(const ExpSpatialParams& e, const DynamicsParams& dyn,
                           double h, double l) {
  if (!(std::abs(dyn.rho) < 1.0)) throw DomainError("implied_cov_model_b: |rho| must be < 1");
  const double temporal =
      std::pow(dyn.rho, l) * dyn.sigma2_eta / (1.0 - dyn.rho * dyn.rho);
  return temporal + e.sigma2_omega * exp_corr(e.theta, h);
}

double implied_cov_model_c(const ExpSpatialParams& e, const DynamicsParams& dyn,
                           double h, double l) {
  if (!(std::abs(dyn.rho) < 1.0)) throw DomainError("implied_cov_model_c: |rho| must be < 1");
  return std::pow(dyn.rho, l) / (1.0 - dyn.rho * dyn.rho) * e.sigma2_omega *
         exp_corr(e.theta, h);
}

}  // namespace stgm
