#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stgm/models.hpp"
#include "stgm/rng.hpp"

namespace stgm {

struct McmcConfig {
  long n_iter = 2000;
  long burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  int n_chains = 1;
  double mh_target_accept = 0.44;
  long adapt_until = -1;  // -1: adapt during burn-in, frozen afterwards
  int max_dense_dim = 4096;

  long effective_adapt_until() const {
    return adapt_until < 0 ? burn_in : adapt_until;
  }
  void validate() const;
};

// Retained draws plus sampler bookkeeping. est_seconds_post accumulates
// wall-clock over post-burn-in sweeps only; est_sec_per_iter() mirrors the
// comparison table's "estimation time (sec per iteration)".
struct Chain {
  ModelKind kind = ModelKind::A1;
  PriorSpec prior;
  std::vector<std::string> param_names;  // flattened, beta first
  std::vector<ParamState> draws;
  std::map<std::string, double> acceptance;  // MH parameters, post-adaptation
  long n_iter = 0;
  long burn_in = 0;
  int thin = 1;
  double est_seconds_total = 0.0;
  double est_seconds_post = 0.0;

  double est_sec_per_iter() const;
  MatrixXd draw_matrix() const;  // draws x flattened parameters
};

// Deterministic part of a Gaussian full conditional, exposed so oracle tests
// can check moments without Monte Carlo.
struct GaussianFullConditional {
  VectorXd mean;
  CholeskyFactor cov;
};

GaussianFullConditional beta_full_conditional(ModelKind kind,
                                              const ParamState& psi,
                                              const Dataset& ds,
                                              const PriorSpec& prior,
                                              const LikelihoodContext& ctx);
VectorXd beta_update(ModelKind kind, const ParamState& psi, const Dataset& ds,
                     const PriorSpec& prior, RngStream& rng,
                     const LikelihoodContext& ctx);

enum class VarianceParam { Sigma2Omega, Sigma2Eps, Sigma2Eta };

struct IgParams {
  double shape = 0.0;
  double scale = 0.0;
};

// Shape/scale of the conjugate inverse-gamma full conditionals. Only the
// pairs that are actually conjugate are accepted: A2 {omega, eps},
// B {eta}, C {omega, eps}; anything else is a contract error (those
// parameters go through MH).
IgParams variance_full_conditional(ModelKind kind, VarianceParam which,
                                   const ParamState& psi, const Dataset& ds,
                                   const PriorSpec& prior,
                                   const LikelihoodContext& ctx);
double variance_gibbs_update(ModelKind kind, VarianceParam which,
                             const ParamState& psi, const Dataset& ds,
                             const PriorSpec& prior, RngStream& rng,
                             const LikelihoodContext& ctx);

// Adaptive random-walk state for one scalar parameter. The step size is
// tuned by Robbins-Monro toward the target acceptance rate during the
// adaptation window and frozen afterwards.
struct MhAdaptState {
  double log_sd = -0.7;  // initial proposal sd ~ 0.5 on the working scale
  double target = 0.44;
  bool adapting = true;
  long iter = 0;
  long attempts = 0, accepts = 0;                // whole run
  long frozen_attempts = 0, frozen_accepts = 0;  // after adaptation

  double acceptance_rate() const;
};

// One random-walk Metropolis step on the transformed scale with Jacobian
// correction; log_target takes the natural-scale value and must include the
// prior. Returns the (possibly unchanged) natural value.
std::pair<double, bool> mh_update(double current, const Transform& transform,
                                  const std::function<double(double)>& log_target,
                                  RngStream& rng, MhAdaptState& adapt);

// Exact joint draw of (y_0..y_T) from its Gaussian full conditional under
// Model B: scalar-state Kalman forward pass, backward sampling pass.
VectorXd ffbs_model_b(const ParamState& psi, const Dataset& ds, RngStream& rng,
                      const LikelihoodContext& ctx);

// Model C analogue with a d-dimensional state; returns d x (T+1).
MatrixXd ffbs_model_c(const ParamState& psi, const Dataset& ds, RngStream& rng,
                      const LikelihoodContext& ctx);

// Exact draw of the full latent field U (d x T) under Model A2 via the joint
// eigendecomposition of the separable correlation pair; no dT x dT dense
// factorization. Missing observation cells are handled by imputing them from
// the measurement equation for the duration of this update (a valid Gibbs
// move on the augmented state).
MatrixXd enbloc_update_u(const ParamState& psi, const Dataset& ds,
                         RngStream& rng, const LikelihoodContext& ctx);

Chain run_mcmc(ModelKind kind, const Dataset& ds, const PriorSpec& prior,
               const McmcConfig& cfg, RngStream& rng,
               std::optional<ParamState> init = std::nullopt);

struct ParamDiagnostics {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  bool degenerate = false;
  double accept_rate = -1.0;  // -1 for Gibbs-updated parameters
  std::vector<double> acf;    // lags 0..max_lag
};

struct DiagnosticsReport {
  std::vector<ParamDiagnostics> params;
};

DiagnosticsReport diagnostics(const Chain& chain, int max_lag = 50);

std::vector<double> autocorrelations(const std::vector<double>& x, int max_lag);
double effective_sample_size(const std::vector<double>& x);

// Chain persistence: one row per retained draw, header mandatory. Latent
// states are included when requested (required downstream by the A2/B/C
// predictors).
void save_chain_csv(const Chain& chain, const std::string& path,
                    bool include_latent);
Chain load_chain_csv(const std::string& path, ModelKind kind,
                     const PriorSpec& prior, int n_sites, int n_days);

}  // namespace stgm
