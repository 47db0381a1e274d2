#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stgm/covariance.hpp"
#include "stgm/dataset.hpp"
#include "stgm/gaussmath.hpp"

namespace stgm {

// The six hierarchical models. A* specify the residual covariance directly
// (iid-over-time spatial / separable / nonseparable); B and C add an AR(1)
// latent level (scalar in space for B, d-dimensional for C).
enum class ModelKind { A1, A2, A3_1, A3_2, B, C };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
const std::vector<ModelKind>& all_model_kinds();

struct PriorSpec {
  double beta_var = 100.0;  // N(0, beta_var) per coefficient
  double ig_shape = 2.0;    // IG(a,b) on variance parameters
  double ig_scale = 1.0;
  double theta_lo = 0.0, theta_hi = 1.0;    // spatial decay (A1/B/C, A2 theta2)
  double theta1_lo = 0.3, theta1_hi = 3.0;  // temporal decay (A2)
  double gn_unit_lo = 0.0, gn_unit_hi = 1.0;     // alpha, b, gamma, tau
  double gn_scale_lo = 0.0, gn_scale_hi = 10.0;  // a, c, nu
  double rho_lo = -1.0, rho_hi = 1.0;
  // Fixed initial-condition variances of the latent equations; configuration
  // constants, not estimated.
  double sigma2_B = 1.0;
  double sigma2_C = 1.0;
};

// One full parameter assignment. The latent block is present only for the
// models that carry one: A2 stores U as d x T, B stores (y_0..y_T) as a
// 1 x (T+1) row, C stores Y as d x (T+1) with column t = Y_t.
struct ParamState {
  VectorXd beta;
  double sigma2_eps = 1.0;
  std::variant<ExpSpatialParams, SeparableParams, GneitingParams> corr;
  std::optional<DynamicsParams> dyn;
  MatrixXd latent;

  ExpSpatialParams& exp_params();
  const ExpSpatialParams& exp_params() const;
  SeparableParams& sep_params();
  const SeparableParams& sep_params() const;
  GneitingParams& gneiting_params();
  const GneitingParams& gneiting_params() const;
  double sigma2_omega() const;
  void set_sigma2_omega(double v);
};

// Structural metadata, one row of the comparison table per model.
enum class BiggestMatrix { DxD, TxT, DTxDT };
std::string to_string(BiggestMatrix m);

struct ModelMeta {
  int n_params_excl_beta = 0;
  int n_mh_params = 0;
  BiggestMatrix biggest_matrix = BiggestMatrix::DxD;
  bool needs_ffbs = false;
  bool needs_enbloc = false;
};

ModelMeta model_meta(ModelKind kind);

// Reparameterization used by the random-walk MH updates: log for positive
// parameters, scaled logit for interval-supported ones.
struct Transform {
  enum class Kind { Log, Interval };
  Kind kind = Kind::Log;
  double lo = 0.0, hi = 1.0;

  double to_unconstrained(double x) const;
  double to_natural(double y) const;
  double log_jacobian(double y) const;  // log |dx/dy|
};

struct ScalarPrior {
  enum class Kind { InvGamma, Uniform };
  Kind kind = Kind::Uniform;
  double a = 2.0, b = 1.0;   // inverse gamma shape/scale
  double lo = 0.0, hi = 1.0; // uniform bounds

  double logpdf(double x) const;
};

// Canonical description of every non-beta scalar parameter of a model:
// name (chain CSV column), update route (MH or Gibbs), MH transform, prior,
// and state accessors. This single table drives model_meta counts, the MH
// sweep, priors and chain serialization.
struct ScalarParam {
  std::string name;
  bool mh = true;
  Transform transform;
  ScalarPrior prior;
  std::function<double(const ParamState&)> get;
  std::function<void(ParamState&, double)> set;
};

std::vector<ScalarParam> scalar_params(ModelKind kind, const PriorSpec& prior);

// Dataset-derived quantities shared across many likelihood evaluations:
// distance matrix and days grouped by missingness pattern.
struct LikelihoodContext {
  MatrixXd H;  // d x d distances, km
  struct PatternGroup {
    std::vector<int> rows;  // present site indices
    std::vector<int> days;  // 0-based days sharing the pattern
  };
  std::vector<PatternGroup> groups;
  int max_dense_dim = 4096;

  static LikelihoodContext build(const Dataset& ds, int max_dense_dim = 4096);
};

// Sum of component prior log densities (-inf outside uniform supports).
double log_prior(ModelKind kind, const PriorSpec& prior, const ParamState& psi);

// Marginal Gaussian log likelihood for the models whose latent process is
// integrated out: A1 as T independent d-dim densities, A3 as one dT-dim
// density. Missing cells are excluded by subsetting.
double marginal_loglik(ModelKind kind, const ParamState& psi, const Dataset& ds,
                       const LikelihoodContext& ctx);
double marginal_loglik(ModelKind kind, const ParamState& psi, const Dataset& ds);

// Joint log density of data and latent process given parameters for the
// conditional models (A2, B, C).
double conditional_loglik(ModelKind kind, const ParamState& psi,
                          const Dataset& ds, const LikelihoodContext& ctx);
double conditional_loglik(ModelKind kind, const ParamState& psi,
                          const Dataset& ds);

// log_prior + the appropriate likelihood; skips the likelihood entirely when
// the prior is -inf.
double log_target(ModelKind kind, const PriorSpec& prior, const ParamState& psi,
                  const Dataset& ds, const LikelihoodContext& ctx);

// Deterministic starting state: pooled OLS for beta, residual variance split
// across the noise components, mid-prior correlation parameters, zero latent.
ParamState default_init(ModelKind kind, const Dataset& ds,
                        const PriorSpec& prior);

// Flattened (name, value) view of the non-latent parameters, beta first.
std::vector<std::pair<std::string, double>> flatten_params(
    ModelKind kind, const PriorSpec& prior, const ParamState& psi);

}  // namespace stgm
