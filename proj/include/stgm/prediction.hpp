#pragma once

#include <string>
#include <vector>

#include "stgm/inference.hpp"
#include "stgm/models.hpp"

namespace stgm {

struct PredictionTarget {
  Site site;
  int day = 1;  // 1-based, within the training window
  VectorXd x;   // covariates at (s0, t0), standardized with the training record
};

struct PredictiveSummary {
  double mean = 0.0;
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Sampled z(s0,t0) values on the model (log) scale, one per chain draw used.
struct PredictiveDraws {
  std::string site_id;
  int day = 1;
  std::vector<double> draws;

  PredictiveSummary summarize(double level) const;
  // Back-transformed summaries: elementwise exp of the draws, then the same
  // statistics.
  PredictiveSummary summarize_concentration(double level) const;
};

// Conditional (mean, var) of z(s0,t0) given one parameter/latent draw; the
// deterministic half of the composition step, exposed for oracle tests.
struct PredictiveMoments {
  double mean = 0.0;
  double var = 0.0;
};

PredictiveMoments predict_conditional_moments(ModelKind kind,
                                              const ParamState& psi,
                                              const Dataset& ds,
                                              const PredictionTarget& target,
                                              int max_dense_dim = 4096);

// Posterior predictive sampling by composition over the retained draws.
// Targets are processed together so per-draw factorizations are shared.
// max_draws < chain length subsamples the chain evenly.
std::vector<PredictiveDraws> predict(const Chain& chain, const Dataset& ds,
                                     const std::vector<PredictionTarget>& targets,
                                     RngStream& rng, int max_dense_dim = 4096,
                                     long max_draws = 0);

// Targets for every (site, day) pair of a holdout dataset, standardizing the
// raw covariates with the training record.
std::vector<PredictionTarget> targets_from_dataset(
    const Dataset& holdout, const StandardizationRecord& rec);

void save_predictions_csv(const std::vector<PredictiveDraws>& preds,
                          const std::string& path, double level,
                          const std::string& scale);

}  // namespace stgm
