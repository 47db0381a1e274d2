#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stgm/gaussmath.hpp"

namespace stgm {

// Exponential spatial correlation exp(-theta h) plus process variance.
struct ExpSpatialParams {
  double theta = 0.1;         // decay per km
  double sigma2_omega = 1.0;  // process variance
};

// Separable double-exponential: exp(-theta1 l) exp(-theta2 h).
struct SeparableParams {
  double theta1 = 1.0;        // temporal decay per day
  double theta2 = 0.1;        // spatial decay per km
  double sigma2_omega = 1.0;
};

enum class GneitingVariant { A3_1, A3_2 };

// Nonseparable space-time correlation C(h,l) = phi(h^2/psi(l^2)) / psi(l^2)
// with the two (psi, phi) pairs:
//   A3-1: psi(x) = (a x^alpha + b) / (b (a x^alpha + 1)),  phi(x) = exp(-c x^gamma)
//   A3-2: psi(x) = (a x^alpha + 1)^tau,                    phi(x) = (1 + c x^gamma)^{-nu}
struct GneitingParams {
  GneitingVariant variant = GneitingVariant::A3_1;
  double a = 1.0;      // time scaling, > 0
  double c = 1.0;      // space scaling, > 0
  double alpha = 0.5;  // (0,1]
  double gamma = 0.5;  // (0,1]
  double b = 0.5;      // (0,1], A3-1 only
  double nu = 1.0;     // > 0, A3-2 only
  double tau = 0.5;    // [0,1] space-time interaction, A3-2 only
  double sigma2_omega = 1.0;

  void validate() const;  // throws DomainError on out-of-range parameters
};

// AR(1) dynamics shared by the three-level models. sigma2_init is the fixed
// initial-condition variance of the latent equation (sigma2_B or sigma2_C);
// it is configuration, never sampled.
struct DynamicsParams {
  double rho = 0.5;          // |rho| < 1
  double sigma2_eta = 1.0;   // innovation variance of the scalar latent (Model B)
  double sigma2_init = 1.0;
};

double exp_corr(double theta, double lag);

double gneiting_corr(const GneitingParams& p, double h, double l);

// Entrywise exp(-theta H); H symmetric with zero diagonal.
MatrixXd spatial_corr_matrix(double theta, const MatrixXd& h);

// Temporal (T x T) and spatial (d x d) factors of the separable correlation;
// the dense dT x dT product is never formed here.
KroneckerPair separable_corr_matrix(const SeparableParams& p, const MatrixXd& h,
                                    int n_days);

// Site-by-site correlation matrices at temporal lags 0..n_lags-1; the
// building block for the dense nonseparable matrix and for prediction
// cross-covariances.
std::vector<MatrixXd> gneiting_lag_matrices(const GneitingParams& p,
                                            const MatrixXd& h, int n_lags);

// Dense dT x dT nonseparable correlation, site index fastest within day:
// global index = (t-1)*d + i. Guarded by a size budget.
MatrixXd nonseparable_corr_matrix(const GneitingParams& p, const MatrixXd& h,
                                  int n_days, int max_dense_dim = 4096);

// Closed-form covariances implied by the dynamic models at spatial lag h and
// temporal lag l: additive for Model B, multiplicative for Model C.
double implied_cov_model_b(const ExpSpatialParams& e, const DynamicsParams& dyn,
                           double h, double l);
double implied_cov_model_c(const ExpSpatialParams& e, const DynamicsParams& dyn,
                           double h, double l);

}  // namespace stgm
