#include "stgm/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "stgm/errors.hpp"

namespace stgm {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile: empty sample");
  const double idx = p * (sorted.size() - 1);
  const auto lo = static_cast<size_t>(idx);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (idx - lo) * (sorted[hi] - sorted[lo]);
}

PredictiveSummary summarize_values(std::vector<double> v, double level) {
  if (v.size() < 100) {
    throw DomainError("summarize_predictions: need at least 100 draws");
  }
  PredictiveSummary s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / v.size();
  std::sort(v.begin(), v.end());
  s.median = quantile_sorted(v, 0.5);
  const double alpha = (1.0 - level) / 2.0;
  s.lo = quantile_sorted(v, alpha);
  s.hi = quantile_sorted(v, 1.0 - alpha);
  return s;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

VectorXd distances_to(const std::vector<Site>& sites, const Site& s0) {
  VectorXd h(sites.size());
  for (size_t i = 0; i < sites.size(); ++i) {
    h[static_cast<Eigen::Index>(i)] =
        std::hypot(sites[i].x_km - s0.x_km, sites[i].y_km - s0.y_km);
  }
  return h;
}

void check_target(const Dataset& ds, const PredictionTarget& t) {
  if (t.day < 1 || t.day > ds.T()) {
    throw DomainError("prediction target day " + std::to_string(t.day) +
                      " outside training window 1.." + std::to_string(ds.T()));
  }
  if (t.x.size() != ds.k()) {
    throw DomainError("prediction target covariate length mismatch");
  }
}

// ---- Model A1 / Model B: day-block conditioning ---------------------------
//
// Sigma_11 is block diagonal over days and Sigma_12 vanishes off the target
// day, so conditioning on the day-t0 block alone is exact.
struct DayBlockCache {
  LikelihoodContext ctx;
  MatrixXd corr;                      // spatial correlation at theta
  std::vector<CholeskyFactor> fac;    // per pattern group
  std::vector<int> day_group;
  std::map<int, VectorXd> solved_resid;  // day -> Sigma^{-1} (z - mean)

  void build(const ParamState& psi, const Dataset& ds, bool model_b) {
    ctx = LikelihoodContext::build(ds);
    const auto& ep = psi.exp_params();
    corr = spatial_corr_matrix(ep.theta, ctx.H);
    fac.clear();
    day_group.assign(ds.T(), -1);
    for (size_t gi = 0; gi < ctx.groups.size(); ++gi) {
      const auto& g = ctx.groups[gi];
      MatrixXd sig(g.rows.size(), g.rows.size());
      for (size_t i = 0; i < g.rows.size(); ++i) {
        for (size_t j = 0; j < g.rows.size(); ++j) {
          sig(i, j) = ep.sigma2_omega * corr(g.rows[i], g.rows[j]);
        }
      }
      sig.diagonal().array() += psi.sigma2_eps;
      fac.push_back(g.rows.empty() ? CholeskyFactor{MatrixXd(0, 0), 0.0}
                                   : chol_psd(sig));
      for (int t : g.days) day_group[t] = static_cast<int>(gi);
    }
    solved_resid.clear();
    model_b_ = model_b;
  }

  const VectorXd& solved(const ParamState& psi, const Dataset& ds, int day0) {
    auto it = solved_resid.find(day0);
    if (it != solved_resid.end()) return it->second;
    const auto& g = ctx.groups[day_group[day0]];
    VectorXd r(g.rows.size());
    for (size_t i = 0; i < g.rows.size(); ++i) {
      const int row = g.rows[i];
      r[static_cast<Eigen::Index>(i)] =
          ds.z(row, day0) - ds.X[day0].row(row).dot(psi.beta) -
          (model_b_ ? psi.latent(0, day0 + 1) : 0.0);
    }
    return solved_resid.emplace(day0, fac[day_group[day0]].solve(r)).first->second;
  }

  PredictiveMoments moments(const ParamState& psi, const Dataset& ds,
                            const PredictionTarget& tgt) {
    const auto& ep = psi.exp_params();
    const int day0 = tgt.day - 1;
    const auto& g = ctx.groups[day_group[day0]];
    double mu2 = tgt.x.dot(psi.beta);
    if (model_b_) mu2 += psi.latent(0, day0 + 1);
    PredictiveMoments out{mu2, ep.sigma2_omega + psi.sigma2_eps};
    if (g.rows.empty()) return out;
    const VectorXd h = distances_to(ds.sites, tgt.site);
    VectorXd c(g.rows.size());
    for (size_t i = 0; i < g.rows.size(); ++i) {
      c[static_cast<Eigen::Index>(i)] =
          ep.sigma2_omega * std::exp(-ep.theta * h[g.rows[i]]);
    }
    out.mean += c.dot(solved(psi, ds, day0));
    out.var -= c.dot(fac[day_group[day0]].solve(c));
    out.var = std::max(out.var, 0.0);
    return out;
  }

 private:
  bool model_b_ = false;
};

// ---- Model A2: condition u(s0,t0) on the full latent field ---------------
struct A2Cache {
  KroneckerPair pair;
  CholeskyFactor chol_t, chol_s;
  MatrixXd solved;  // d x T reshape of C^{-1} (U - X beta)

  void build(const ParamState& psi, const Dataset& ds) {
    const auto& sp = psi.sep_params();
    const MatrixXd H = spatial_distance_matrix(ds.sites);
    pair = separable_corr_matrix(sp, H, ds.T());
    chol_t = chol_psd(pair.A);
    chol_s = chol_psd(pair.B);
    MatrixXd resid(ds.d(), ds.T());
    for (int t = 0; t < ds.T(); ++t) {
      resid.col(t) = psi.latent.col(t) - ds.X[t] * psi.beta;
    }
    const Eigen::Map<const VectorXd> rv(resid.data(),
                                        static_cast<long>(ds.d()) * ds.T());
    const VectorXd sv = kron_solve(pair, rv);
    solved = Eigen::Map<const MatrixXd>(sv.data(), ds.d(), ds.T());
  }

  // Moments of the latent u(s0,t0); measurement noise is added by the caller.
  PredictiveMoments latent_moments(const ParamState& psi, const Dataset& ds,
                                   const PredictionTarget& tgt) const {
    const auto& sp = psi.sep_params();
    const VectorXd h = distances_to(ds.sites, tgt.site);
    VectorXd c_s(ds.d());
    for (int i = 0; i < ds.d(); ++i) c_s[i] = std::exp(-sp.theta2 * h[i]);
    VectorXd c_t(ds.T());
    for (int t = 0; t < ds.T(); ++t) {
      c_t[t] = std::exp(-sp.theta1 * std::abs(t + 1 - tgt.day));
    }
    PredictiveMoments out;
    // Sigma_12' C^{-1} (U - X beta) / sigma2_omega with Sigma_12 =
    // sigma2_omega (c_t (x) c_s); the variance factors cancel.
    out.mean = tgt.x.dot(psi.beta) + c_s.dot(solved * c_t);
    const double q_s = c_s.dot(chol_s.solve(c_s));
    const double q_t = c_t.dot(chol_t.solve(c_t));
    out.var = std::max(sp.sigma2_omega * (1.0 - q_s * q_t), 0.0);
    return out;
  }
};

// ---- Model A3: full (dT+1)-joint conditioning -----------------------------
struct A3Cache {
  std::vector<std::pair<int, int>> cells;  // present (site, day)
  CholeskyFactor fac;
  VectorXd solved_resid;

  void build(const ParamState& psi, const Dataset& ds, int max_dense_dim) {
    const auto& gp = psi.gneiting_params();
    const long dim = static_cast<long>(ds.d()) * ds.T();
    if (dim > max_dense_dim) {
      throw ResourceError("A3 prediction: dT exceeds dense budget");
    }
    const MatrixXd H = spatial_distance_matrix(ds.sites);
    const auto lag = gneiting_lag_matrices(gp, H, ds.T());
    cells.clear();
    for (int t = 0; t < ds.T(); ++t) {
      for (int i = 0; i < ds.d(); ++i) {
        if (ds.present(i, t)) cells.emplace_back(i, t);
      }
    }
    const auto n = static_cast<Eigen::Index>(cells.size());
    MatrixXd sig(n, n);
    VectorXd r(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto [i, t] = cells[a];
      r[a] = ds.z(i, t) - ds.X[t].row(i).dot(psi.beta);
      for (Eigen::Index b = 0; b <= a; ++b) {
        const auto [j, s] = cells[b];
        const double v = gp.sigma2_omega * lag[t - s](i, j);
        sig(a, b) = v;
        sig(b, a) = v;
      }
    }
    sig.diagonal().array() += psi.sigma2_eps;
    fac = chol_psd(sig);
    solved_resid = fac.solve(r);
  }

  PredictiveMoments moments(const ParamState& psi, const Dataset& ds,
                            const PredictionTarget& tgt) const {
    const auto& gp = psi.gneiting_params();
    const VectorXd h = distances_to(ds.sites, tgt.site);
    const auto n = static_cast<Eigen::Index>(cells.size());
    VectorXd c(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto [i, t] = cells[a];
      c[a] = gp.sigma2_omega *
             gneiting_corr(gp, h[i], std::abs(t + 1 - tgt.day));
    }
    PredictiveMoments out;
    out.mean = tgt.x.dot(psi.beta) + c.dot(solved_resid);
    out.var = gp.sigma2_omega + psi.sigma2_eps - c.dot(fac.solve(c));
    out.var = std::max(out.var, 0.0);
    return out;
  }
};

// ---- Model C: innovation kriging rolled forward ---------------------------
struct CCache {
  CholeskyFactor fac;       // of sigma2_omega * C(h)
  MatrixXd innovations;     // d x T, column t-1 = Y_t - rho Y_{t-1}

  void build(const ParamState& psi, const Dataset& ds) {
    const auto& ep = psi.exp_params();
    const MatrixXd H = spatial_distance_matrix(ds.sites);
    fac = chol_psd(MatrixXd(ep.sigma2_omega * spatial_corr_matrix(ep.theta, H)));
    innovations.resize(ds.d(), ds.T());
    for (int t = 1; t <= ds.T(); ++t) {
      innovations.col(t - 1) =
          psi.latent.col(t) - psi.dyn->rho * psi.latent.col(t - 1);
    }
  }

  // Per-step kriging weights for one target site.
  struct SiteWeights {
    VectorXd g;       // Sigma_omega^{-1} c
    double var_step;  // sigma2_omega - c' Sigma^{-1} c
  };

  SiteWeights site_weights(const ParamState& psi, const Dataset& ds,
                           const Site& s0) const {
    const auto& ep = psi.exp_params();
    const VectorXd h = distances_to(ds.sites, s0);
    VectorXd c(ds.d());
    for (int i = 0; i < ds.d(); ++i) {
      c[i] = ep.sigma2_omega * std::exp(-ep.theta * h[i]);
    }
    SiteWeights w;
    w.g = fac.solve(c);
    w.var_step = std::max(ep.sigma2_omega - c.dot(w.g), 0.0);
    return w;
  }

  // Closed-form moments of z(s0,t0) given (Psi, Y): the forward recursion
  // collapsed analytically.
  PredictiveMoments moments(const ParamState& psi, const Dataset& ds,
                            const PredictionTarget& tgt) const {
    const auto w = site_weights(psi, ds, tgt.site);
    const double rho = psi.dyn->rho;
    double mean = 0.0;
    double var = std::pow(rho, 2.0 * tgt.day) * psi.dyn->sigma2_init;
    for (int t = 1; t <= tgt.day; ++t) {
      const double scale = std::pow(rho, tgt.day - t);
      mean += scale * w.g.dot(innovations.col(t - 1));
      var += scale * scale * w.var_step;
    }
    return {tgt.x.dot(psi.beta) + mean, var + psi.sigma2_eps};
  }
};

std::vector<long> select_draws(long n, long max_draws) {
  std::vector<long> idx;
  if (max_draws <= 0 || max_draws >= n) {
    idx.resize(n);
    for (long i = 0; i < n; ++i) idx[i] = i;
  } else {
    idx.resize(max_draws);
    for (long i = 0; i < max_draws; ++i) idx[i] = (i * n) / max_draws;
  }
  return idx;
}

}  // namespace

PredictiveSummary PredictiveDraws::summarize(double level) const {
  return summarize_values(draws, level);
}

PredictiveSummary PredictiveDraws::summarize_concentration(double level) const {
  std::vector<double> e(draws.size());
  for (size_t i = 0; i < draws.size(); ++i) e[i] = std::exp(draws[i]);
  return summarize_values(std::move(e), level);
}

PredictiveMoments predict_conditional_moments(ModelKind kind,
                                              const ParamState& psi,
                                              const Dataset& ds,
                                              const PredictionTarget& target,
                                              int max_dense_dim) {
  check_target(ds, target);
  switch (kind) {
    case ModelKind::A1:
    case ModelKind::B: {
      DayBlockCache cache;
      cache.build(psi, ds, kind == ModelKind::B);
      return cache.moments(psi, ds, target);
    }
    case ModelKind::A2: {
      A2Cache cache;
      cache.build(psi, ds);
      PredictiveMoments m = cache.latent_moments(psi, ds, target);
      m.var += psi.sigma2_eps;
      return m;
    }
    case ModelKind::A3_1:
    case ModelKind::A3_2: {
      A3Cache cache;
      cache.build(psi, ds, max_dense_dim);
      return cache.moments(psi, ds, target);
    }
    case ModelKind::C: {
      CCache cache;
      cache.build(psi, ds);
      return cache.moments(psi, ds, target);
    }
  }
  throw DomainError("predict_conditional_moments: bad ModelKind");
}

std::vector<PredictiveDraws> predict(const Chain& chain, const Dataset& ds,
                                     const std::vector<PredictionTarget>& targets,
                                     RngStream& rng, int max_dense_dim,
                                     long max_draws) {
  if (chain.draws.empty()) throw DomainError("predict: empty chain");
  for (const auto& t : targets) check_target(ds, t);

  std::vector<PredictiveDraws> out(targets.size());
  for (size_t j = 0; j < targets.size(); ++j) {
    out[j].site_id = targets[j].site.id;
    out[j].day = targets[j].day;
  }
  std::vector<RngStream> streams;
  streams.reserve(targets.size());
  for (size_t j = 0; j < targets.size(); ++j) {
    streams.push_back(rng.derive(j));
  }

  const auto idx = select_draws(static_cast<long>(chain.draws.size()), max_draws);
  const ModelKind kind = chain.kind;

  for (long r : idx) {
    const ParamState& psi = chain.draws[r];
    switch (kind) {
      case ModelKind::A1:
      case ModelKind::B: {
        DayBlockCache cache;
        cache.build(psi, ds, kind == ModelKind::B);
        for (size_t j = 0; j < targets.size(); ++j) {
          const auto m = cache.moments(psi, ds, targets[j]);
          out[j].draws.push_back(m.mean + std::sqrt(m.var) * streams[j].normal());
        }
        break;
      }
      case ModelKind::A2: {
        A2Cache cache;
        cache.build(psi, ds);
        for (size_t j = 0; j < targets.size(); ++j) {
          const auto m = cache.latent_moments(psi, ds, targets[j]);
          const double u0 = m.mean + std::sqrt(m.var) * streams[j].normal();
          out[j].draws.push_back(u0 + std::sqrt(psi.sigma2_eps) *
                                          streams[j].normal());
        }
        break;
      }
      case ModelKind::A3_1:
      case ModelKind::A3_2: {
        A3Cache cache;
        cache.build(psi, ds, max_dense_dim);
        for (size_t j = 0; j < targets.size(); ++j) {
          const auto m = cache.moments(psi, ds, targets[j]);
          out[j].draws.push_back(m.mean + std::sqrt(m.var) * streams[j].normal());
        }
        break;
      }
      case ModelKind::C: {
        CCache cache;
        cache.build(psi, ds);
        for (size_t j = 0; j < targets.size(); ++j) {
          const auto w = cache.site_weights(psi, ds, targets[j].site);
          const double rho = psi.dyn->rho;
          // Forward composition: y(s0,0) from the initial condition, then one
          // innovation-kriging step per day up to t0.
          double y = std::sqrt(psi.dyn->sigma2_init) * streams[j].normal();
          const double sd_step = std::sqrt(w.var_step);
          for (int t = 1; t <= targets[j].day; ++t) {
            y = rho * y + w.g.dot(cache.innovations.col(t - 1)) +
                sd_step * streams[j].normal();
          }
          const double z0 = targets[j].x.dot(psi.beta) + y +
                            std::sqrt(psi.sigma2_eps) * streams[j].normal();
          out[j].draws.push_back(z0);
        }
        break;
      }
    }
  }
  return out;
}

std::vector<PredictionTarget> targets_from_dataset(
    const Dataset& holdout, const StandardizationRecord& rec) {
  std::vector<PredictionTarget> out;
  for (int i = 0; i < holdout.d(); ++i) {
    for (int t = 0; t < holdout.T(); ++t) {
      PredictionTarget tg;
      tg.site = holdout.sites[i];
      tg.day = t + 1;
      tg.x = rec.apply(holdout.X[t].row(i).transpose());
      out.push_back(std::move(tg));
    }
  }
  return out;
}

void save_predictions_csv(const std::vector<PredictiveDraws>& preds,
                          const std::string& path, double level,
                          const std::string& scale) {
  if (scale != "log" && scale != "concentration") {
    throw ConfigError("predictions scale must be 'log' or 'concentration'");
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "site_id,day,draw_mean,draw_median,lo,hi,scale\n";
  for (const auto& p : preds) {
    const PredictiveSummary s = scale == "log"
                                    ? p.summarize(level)
                                    : p.summarize_concentration(level);
    out << p.site_id << ',' << p.day << ',' << fmt(s.mean) << ','
        << fmt(s.median) << ',' << fmt(s.lo) << ',' << fmt(s.hi) << ','
        << scale << '\n';
  }
}

}  // namespace stgm
