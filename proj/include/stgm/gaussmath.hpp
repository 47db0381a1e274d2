#pragma once

#include <Eigen/Dense>

#include "stgm/rng.hpp"

namespace stgm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Lower-triangular Cholesky factor of a (possibly jittered) SPD matrix.
struct CholeskyFactor {
  MatrixXd L;
  double jitter_applied = 0.0;

  int dim() const { return static_cast<int>(L.rows()); }
  double logdet() const;
  // Solve (L L') x = b.
  VectorXd solve(const VectorXd& b) const;
  MatrixXd solve(const MatrixXd& B) const;
  // b' (L L')^{-1} b.
  double invquad(const VectorXd& b) const;
};

// Factorize a symmetric matrix, escalating jitter on the diagonal through a
// fixed ladder 0, 1e-10, 1e-8, ... until LLT succeeds or max_jitter is
// exceeded. The ladder is deterministic: identical inputs give identical
// jitter_applied.
CholeskyFactor chol_psd(const MatrixXd& a, double max_jitter = 1e-6);

// A (x) B held unmaterialized; A is the n x n outer (temporal) factor, B the
// m x m inner (spatial) factor. Vectors of length n*m are ordered inner-index
// fastest, i.e. element (i of B, t of A) sits at t*m + i.
struct KroneckerPair {
  MatrixXd A;
  MatrixXd B;

  int dim() const { return static_cast<int>(A.rows() * B.rows()); }
  MatrixXd dense() const;  // materialized product, for small cases/tests
};

// log|A (x) B| = m log|A| + n log|B|.
double kron_logdet(const KroneckerPair& p);

// (A (x) B)^{-1} v without forming the product: reshape v to an m x n matrix
// V and return vec(B^{-1} V A^{-1}).
VectorXd kron_solve(const KroneckerPair& p, const VectorXd& v);

// (A (x) B) v, same reshape trick.
VectorXd kron_apply(const KroneckerPair& p, const VectorXd& v);

double mvn_logpdf(const VectorXd& x, const VectorXd& mean,
                  const CholeskyFactor& cov);

// Conditional N(mean, var) of a scalar given an observed block, from the
// joint [ S11 S12; S12' S22 ]. Round-off negatives in the variance within
// 1e-10 are clamped to zero; anything larger is a hard error since it points
// at a covariance construction bug.
struct Conditional1D {
  double mean = 0.0;
  double var = 0.0;
};
Conditional1D mvn_condition(const VectorXd& mu1, double mu2,
                            const CholeskyFactor& s11, const VectorXd& s12,
                            double s22, const VectorXd& obs);

VectorXd sample_mvn(const VectorXd& mean, const CholeskyFactor& cov,
                    RngStream& rng);

// Symmetric eigendecomposition with eigenvalues clamped at a tiny floor;
// used by the separable en-bloc sampler.
struct SymmetricEigen {
  MatrixXd vectors;
  VectorXd values;
};
SymmetricEigen eigen_sym(const MatrixXd& a, double floor = 1e-12);

}  // namespace stgm
