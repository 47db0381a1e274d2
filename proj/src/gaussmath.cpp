#include "stgm/gaussmath.hpp"

#include <cmath>
#include <numbers>

#include "stgm/errors.hpp"

namespace stgm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double CholeskyFactor::logdet() const {
  return 2.0 * L.diagonal().array().log().sum();
}

VectorXd CholeskyFactor::solve(const VectorXd& b) const {
  VectorXd y = L.triangularView<Eigen::Lower>().solve(b);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

MatrixXd CholeskyFactor::solve(const MatrixXd& B) const {
  MatrixXd y = L.triangularView<Eigen::Lower>().solve(B);
  return L.transpose().triangularView<Eigen::Upper>().solve(y);
}

double CholeskyFactor::invquad(const VectorXd& b) const {
  VectorXd y = L.triangularView<Eigen::Lower>().solve(b);
  return y.squaredNorm();
}

CholeskyFactor chol_psd(const MatrixXd& a, double max_jitter) {
  const auto n = a.rows();
  if (n != a.cols()) throw DomainError("chol_psd: matrix not square");
  if (n > 0) {
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (asym > 1e-10 * scale) throw DomainError("chol_psd: matrix not symmetric");
  }

  double jitter = 0.0;
  for (;;) {
    MatrixXd aj = a;
    if (jitter > 0.0) aj.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(aj);
    if (llt.info() == Eigen::Success) {
      return CholeskyFactor{MatrixXd(llt.matrixL()), jitter};
    }
    jitter = (jitter == 0.0) ? 1e-10 : jitter * 100.0;
    if (jitter > max_jitter) {
      throw NumericalError("chol_psd: not positive definite within jitter budget");
    }
  }
}

MatrixXd KroneckerPair::dense() const {
  const auto n = A.rows();
  const auto m = B.rows();
  MatrixXd out(n * m, n * m);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index s = 0; s < n; ++s) {
      out.block(t * m, s * m, m, m) = A(t, s) * B;
    }
  }
  return out;
}

double kron_logdet(const KroneckerPair& p) {
  const double lda = chol_psd(p.A).logdet();
  const double ldb = chol_psd(p.B).logdet();
  return static_cast<double>(p.B.rows()) * lda +
         static_cast<double>(p.A.rows()) * ldb;
}

VectorXd kron_solve(const KroneckerPair& p, const VectorXd& v) {
  const auto n = p.A.rows();
  const auto m = p.B.rows();
  if (v.size() != n * m) throw DomainError("kron_solve: dimension mismatch");
  Eigen::Map<const MatrixXd> V(v.data(), m, n);
  const CholeskyFactor ca = chol_psd(p.A);
  const CholeskyFactor cb = chol_psd(p.B);
  MatrixXd W = cb.solve(MatrixXd(V));              // B^{-1} V
  MatrixXd R = ca.solve(MatrixXd(W.transpose()));  // A^{-1} V' B^{-1}
  MatrixXd out = R.transpose();
  return Eigen::Map<VectorXd>(out.data(), n * m);
}

VectorXd kron_apply(const KroneckerPair& p, const VectorXd& v) {
  const auto n = p.A.rows();
  const auto m = p.B.rows();
  if (v.size() != n * m) throw DomainError("kron_apply: dimension mismatch");
  Eigen::Map<const MatrixXd> V(v.data(), m, n);
  MatrixXd out = p.B * V * p.A.transpose();
  return Eigen::Map<VectorXd>(out.data(), n * m);
}

double mvn_logpdf(const VectorXd& x, const VectorXd& mean,
                  const CholeskyFactor& cov) {
  if (x.size() != mean.size() || x.size() != cov.dim()) {
    throw DomainError("mvn_logpdf: dimension mismatch");
  }
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * kLog2Pi + cov.logdet() + cov.invquad(x - mean));
}

Conditional1D mvn_condition(const VectorXd& mu1, double mu2,
                            const CholeskyFactor& s11, const VectorXd& s12,
                            double s22, const VectorXd& obs) {
  if (mu1.size() != s12.size() || mu1.size() != s11.dim() ||
      obs.size() != mu1.size()) {
    throw DomainError("mvn_condition: dimension mismatch");
  }
  if (!(s22 > 0.0)) throw DomainError("mvn_condition: S22 must be > 0");
  const VectorXd w = s11.solve(s12);
  Conditional1D out;
  out.mean = mu2 + w.dot(obs - mu1);
  out.var = s22 - w.dot(s12);
  if (out.var < 0.0) {
    if (out.var < -1e-10) {
      throw NumericalError("mvn_condition: conditional variance " +
                           std::to_string(out.var) + " below tolerance");
    }
    out.var = 0.0;
  }
  return out;
}

VectorXd sample_mvn(const VectorXd& mean, const CholeskyFactor& cov,
                    RngStream& rng) {
  if (mean.size() != cov.dim()) throw DomainError("sample_mvn: dimension mismatch");
  VectorXd xi(mean.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  return mean + cov.L * xi;
}

SymmetricEigen eigen_sym(const MatrixXd& a, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigen_sym: eigendecomposition failed");
  }
  SymmetricEigen out{es.eigenvectors(), es.eigenvalues()};
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    if (out.values[i] < floor) out.values[i] = floor;
  }
  return out;
}

}  // namespace stgm
