#include "stgm/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "stgm/errors.hpp"

namespace stgm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

MatrixXd subset_sym(const MatrixXd& a, const std::vector<int>& rows) {
  MatrixXd out(rows.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows.size(); ++j) {
      out(i, j) = a(rows[i], rows[j]);
    }
  }
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Sigma_{omega+eps} factor per missingness pattern, shared by the A1/B-style
// day-block computations.
std::vector<CholeskyFactor> pattern_factors(const ParamState& psi,
                                            const LikelihoodContext& ctx,
                                            double theta) {
  const MatrixXd corr = spatial_corr_matrix(theta, ctx.H);
  const double s2w = psi.sigma2_omega();
  std::vector<CholeskyFactor> out;
  out.reserve(ctx.groups.size());
  for (const auto& g : ctx.groups) {
    MatrixXd sig = s2w * subset_sym(corr, g.rows);
    sig.diagonal().array() += psi.sigma2_eps;
    out.push_back(chol_psd(sig));
  }
  return out;
}

}  // namespace

void McmcConfig::validate() const {
  if (n_iter <= 0) throw ConfigError("mcmc: n_iter must be > 0");
  if (burn_in < 0 || burn_in >= n_iter) {
    throw ConfigError("mcmc: burn_in must lie in [0, n_iter)");
  }
  if (thin < 1) throw ConfigError("mcmc: thin must be >= 1");
  if (n_chains < 1) throw ConfigError("mcmc: n_chains must be >= 1");
  if (!(mh_target_accept > 0.0 && mh_target_accept < 1.0)) {
    throw ConfigError("mcmc: target acceptance must lie in (0,1)");
  }
}

double Chain::est_sec_per_iter() const {
  const long post = n_iter - burn_in;
  return post > 0 ? est_seconds_post / post : 0.0;
}

MatrixXd Chain::draw_matrix() const {
  MatrixXd out(draws.size(), param_names.size());
  for (size_t r = 0; r < draws.size(); ++r) {
    const auto flat = flatten_params(kind, prior, draws[r]);
    for (size_t c = 0; c < flat.size(); ++c) out(r, c) = flat[c].second;
  }
  return out;
}

GaussianFullConditional beta_full_conditional(ModelKind kind,
                                              const ParamState& psi,
                                              const Dataset& ds,
                                              const PriorSpec& prior,
                                              const LikelihoodContext& ctx) {
  const int k = ds.k();
  MatrixXd a_inv = MatrixXd::Identity(k, k) / prior.beta_var;
  VectorXd b = VectorXd::Zero(k);

  switch (kind) {
    case ModelKind::A1:
    case ModelKind::B: {
      const auto factors = pattern_factors(psi, ctx, psi.exp_params().theta);
      for (size_t gi = 0; gi < ctx.groups.size(); ++gi) {
        const auto& g = ctx.groups[gi];
        if (g.rows.empty()) continue;
        const auto n = static_cast<Eigen::Index>(g.rows.size());
        MatrixXd xg(n, k);
        for (int t : g.days) {
          for (Eigen::Index i = 0; i < n; ++i) xg.row(i) = ds.X[t].row(g.rows[i]);
          const MatrixXd sx = factors[gi].solve(xg);
          VectorXd r(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            r[i] = ds.z(g.rows[i], t);
            if (kind == ModelKind::B) r[i] -= psi.latent(0, t + 1);
          }
          a_inv.noalias() += xg.transpose() * sx;
          b.noalias() += sx.transpose() * r;
        }
      }
      break;
    }
    case ModelKind::A2: {
      const auto& sp = psi.sep_params();
      const KroneckerPair pair = separable_corr_matrix(sp, ctx.H, ds.T());
      const int d = ds.d();
      const int T = ds.T();
      MatrixXd x_stack(static_cast<long>(d) * T, k);
      VectorXd u_vec(static_cast<long>(d) * T);
      for (int t = 0; t < T; ++t) {
        x_stack.middleRows(static_cast<long>(t) * d, d) = ds.X[t];
        u_vec.segment(static_cast<long>(t) * d, d) = psi.latent.col(t);
      }
      MatrixXd kinv_x(x_stack.rows(), k);
      for (int j = 0; j < k; ++j) {
        kinv_x.col(j) = kron_solve(pair, x_stack.col(j));
      }
      a_inv.noalias() += x_stack.transpose() * kinv_x / sp.sigma2_omega;
      b.noalias() += kinv_x.transpose() * u_vec / sp.sigma2_omega;
      break;
    }
    case ModelKind::A3_1:
    case ModelKind::A3_2: {
      const auto& gp = psi.gneiting_params();
      const int d = ds.d();
      const long dim = static_cast<long>(d) * ds.T();
      if (dim > ctx.max_dense_dim) {
        throw ResourceError("beta update: dT exceeds dense budget");
      }
      const auto lag = gneiting_lag_matrices(gp, ctx.H, ds.T());
      std::vector<std::pair<int, int>> cells;
      for (int t = 0; t < ds.T(); ++t) {
        for (int i = 0; i < d; ++i) {
          if (ds.present(i, t)) cells.emplace_back(i, t);
        }
      }
      const auto n = static_cast<Eigen::Index>(cells.size());
      MatrixXd sig(n, n);
      MatrixXd x(n, k);
      VectorXd zv(n);
      for (Eigen::Index p = 0; p < n; ++p) {
        const auto [i, t] = cells[p];
        x.row(p) = ds.X[t].row(i);
        zv[p] = ds.z(i, t);
        for (Eigen::Index q = 0; q <= p; ++q) {
          const auto [j, s] = cells[q];
          const double v = gp.sigma2_omega * lag[t - s](i, j);
          sig(p, q) = v;
          sig(q, p) = v;
        }
      }
      sig.diagonal().array() += psi.sigma2_eps;
      const CholeskyFactor f = chol_psd(sig);
      const MatrixXd sx = f.solve(x);
      a_inv.noalias() += x.transpose() * sx;
      b.noalias() += sx.transpose() * zv;
      break;
    }
    case ModelKind::C: {
      for (int t = 0; t < ds.T(); ++t) {
        for (int i = 0; i < ds.d(); ++i) {
          if (!ds.present(i, t)) continue;
          const auto xi = ds.X[t].row(i);
          a_inv.noalias() += xi.transpose() * xi / psi.sigma2_eps;
          b.noalias() += xi.transpose() *
                         ((ds.z(i, t) - psi.latent(i, t + 1)) / psi.sigma2_eps);
        }
      }
      break;
    }
  }

  const CholeskyFactor prec = chol_psd(a_inv);
  const MatrixXd cov = prec.solve(MatrixXd(MatrixXd::Identity(k, k)));
  GaussianFullConditional out;
  out.mean = cov * b;
  out.cov = chol_psd(0.5 * (cov + cov.transpose()));
  return out;
}

VectorXd beta_update(ModelKind kind, const ParamState& psi, const Dataset& ds,
                     const PriorSpec& prior, RngStream& rng,
                     const LikelihoodContext& ctx) {
  const auto fc = beta_full_conditional(kind, psi, ds, prior, ctx);
  return sample_mvn(fc.mean, fc.cov, rng);
}

IgParams variance_full_conditional(ModelKind kind, VarianceParam which,
                                   const ParamState& psi, const Dataset& ds,
                                   const PriorSpec& prior,
                                   const LikelihoodContext& ctx) {
  const double a = prior.ig_shape;
  const double b = prior.ig_scale;
  const int d = ds.d();
  const int T = ds.T();

  if (kind == ModelKind::A2 && which == VarianceParam::Sigma2Omega) {
    const auto& sp = psi.sep_params();
    const KroneckerPair pair = separable_corr_matrix(sp, ctx.H, T);
    MatrixXd resid(d, T);
    for (int t = 0; t < T; ++t) {
      resid.col(t) = psi.latent.col(t) - ds.X[t] * psi.beta;
    }
    const Eigen::Map<const VectorXd> rv(resid.data(), static_cast<long>(d) * T);
    const double quad = rv.dot(kron_solve(pair, rv));
    return {a + 0.5 * d * T, b + 0.5 * quad};
  }
  if (kind == ModelKind::A2 && which == VarianceParam::Sigma2Eps) {
    double ss = 0.0;
    long n = 0;
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < d; ++i) {
        if (!ds.present(i, t)) continue;
        const double e = ds.z(i, t) - psi.latent(i, t);
        ss += e * e;
        ++n;
      }
    }
    return {a + 0.5 * n, b + 0.5 * ss};
  }
  if (kind == ModelKind::B && which == VarianceParam::Sigma2Eta) {
    double ss = 0.0;
    for (int t = 1; t <= T; ++t) {
      const double e = psi.latent(0, t) - psi.dyn->rho * psi.latent(0, t - 1);
      ss += e * e;
    }
    return {a + 0.5 * T, b + 0.5 * ss};
  }
  if (kind == ModelKind::C && which == VarianceParam::Sigma2Omega) {
    const auto& ep = psi.exp_params();
    const CholeskyFactor f = chol_psd(spatial_corr_matrix(ep.theta, ctx.H));
    double quad = 0.0;
    for (int t = 1; t <= T; ++t) {
      const VectorXd w = psi.latent.col(t) - psi.dyn->rho * psi.latent.col(t - 1);
      quad += f.invquad(w);
    }
    return {a + 0.5 * d * T, b + 0.5 * quad};
  }
  if (kind == ModelKind::C && which == VarianceParam::Sigma2Eps) {
    double ss = 0.0;
    long n = 0;
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < d; ++i) {
        if (!ds.present(i, t)) continue;
        const double e =
            ds.z(i, t) - ds.X[t].row(i).dot(psi.beta) - psi.latent(i, t + 1);
        ss += e * e;
        ++n;
      }
    }
    return {a + 0.5 * n, b + 0.5 * ss};
  }
  throw ContractError("variance_gibbs_update: (" + to_string(kind) +
                      ", variance) pair is not conjugate; use mh_update");
}

double variance_gibbs_update(ModelKind kind, VarianceParam which,
                             const ParamState& psi, const Dataset& ds,
                             const PriorSpec& prior, RngStream& rng,
                             const LikelihoodContext& ctx) {
  const IgParams ig = variance_full_conditional(kind, which, psi, ds, prior, ctx);
  return rng.inv_gamma(ig.shape, ig.scale);
}

double MhAdaptState::acceptance_rate() const {
  if (frozen_attempts > 0) {
    return static_cast<double>(frozen_accepts) / frozen_attempts;
  }
  return attempts > 0 ? static_cast<double>(accepts) / attempts : 0.0;
}

std::pair<double, bool> mh_update(double current, const Transform& transform,
                                  const std::function<double(double)>& log_target,
                                  RngStream& rng, MhAdaptState& adapt) {
  const double y = transform.to_unconstrained(current);
  const double sd = std::exp(adapt.log_sd);
  const double y_prop = y + sd * rng.normal();
  const double x_prop = transform.to_natural(y_prop);

  double log_ratio = (log_target(x_prop) + transform.log_jacobian(y_prop)) -
                     (log_target(current) + transform.log_jacobian(y));
  if (std::isnan(log_ratio)) log_ratio = kNegInf;

  const bool accept = std::log(rng.uniform()) < log_ratio;

  adapt.iter++;
  adapt.attempts++;
  if (accept) adapt.accepts++;
  if (adapt.adapting) {
    const double alpha = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
    const double gain = std::pow(static_cast<double>(adapt.iter), -0.6);
    adapt.log_sd += gain * (alpha - adapt.target);
    adapt.log_sd = std::clamp(adapt.log_sd, -12.0, 6.0);
  } else {
    adapt.frozen_attempts++;
    if (accept) adapt.frozen_accepts++;
  }
  return {accept ? x_prop : current, accept};
}

VectorXd ffbs_model_b(const ParamState& psi, const Dataset& ds, RngStream& rng,
                      const LikelihoodContext& ctx) {
  const int T = ds.T();
  const auto& dyn = *psi.dyn;
  if (!(std::abs(dyn.rho) < 1.0)) throw DomainError("ffbs_model_b: |rho| must be < 1");
  const auto factors = pattern_factors(psi, ctx, psi.exp_params().theta);

  std::vector<int> day_group(T, -1);
  for (size_t gi = 0; gi < ctx.groups.size(); ++gi) {
    for (int t : ctx.groups[gi].days) day_group[t] = static_cast<int>(gi);
  }
  std::vector<double> ksk(ctx.groups.size(), 0.0);
  std::vector<VectorXd> sinv_k(ctx.groups.size());
  for (size_t gi = 0; gi < ctx.groups.size(); ++gi) {
    const auto n = static_cast<Eigen::Index>(ctx.groups[gi].rows.size());
    if (n == 0) continue;
    sinv_k[gi] = factors[gi].solve(VectorXd(VectorXd::Ones(n)));
    ksk[gi] = sinv_k[gi].sum();
  }

  // Forward filter over states y_0..y_T; day t-1 (0-based) observes state t.
  VectorXd m(T + 1), p(T + 1);
  m[0] = 0.0;
  p[0] = dyn.sigma2_init;
  for (int t = 1; t <= T; ++t) {
    const double m_pred = dyn.rho * m[t - 1];
    const double p_pred = dyn.rho * dyn.rho * p[t - 1] + dyn.sigma2_eta;
    const int gi = day_group[t - 1];
    const auto& rows = ctx.groups[gi].rows;
    if (rows.empty() || p_pred <= 0.0) {
      m[t] = m_pred;
      p[t] = p_pred;
      continue;
    }
    VectorXd r(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] =
          ds.z(rows[i], t - 1) - ds.X[t - 1].row(rows[i]).dot(psi.beta);
    }
    const double prec = 1.0 / p_pred + ksk[gi];
    if (prec <= 0.0) throw NumericalError("ffbs_model_b: nonpositive filter precision");
    p[t] = 1.0 / prec;
    m[t] = p[t] * (m_pred / p_pred + sinv_k[gi].dot(r));
  }

  // Backward sampling.
  VectorXd y(T + 1);
  y[T] = m[T] + std::sqrt(std::max(p[T], 0.0)) * rng.normal();
  for (int t = T - 1; t >= 0; --t) {
    const double denom = dyn.rho * dyn.rho * p[t] + dyn.sigma2_eta;
    if (denom <= 0.0) {
      y[t] = m[t];
      continue;
    }
    const double j = dyn.rho * p[t] / denom;
    const double mean = m[t] + j * (y[t + 1] - dyn.rho * m[t]);
    const double var = p[t] - j * dyn.rho * p[t];
    y[t] = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
  }
  return y;
}

MatrixXd ffbs_model_c(const ParamState& psi, const Dataset& ds, RngStream& rng,
                      const LikelihoodContext& ctx) {
  const int d = ds.d();
  const int T = ds.T();
  const auto& dyn = *psi.dyn;
  if (!(std::abs(dyn.rho) < 1.0)) throw DomainError("ffbs_model_c: |rho| must be < 1");
  const auto& ep = psi.exp_params();
  const MatrixXd sig_w = ep.sigma2_omega * spatial_corr_matrix(ep.theta, ctx.H);

  std::vector<int> day_group(T, -1);
  for (size_t gi = 0; gi < ctx.groups.size(); ++gi) {
    for (int t : ctx.groups[gi].days) day_group[t] = static_cast<int>(gi);
  }

  std::vector<VectorXd> m(T + 1);
  std::vector<MatrixXd> p(T + 1);
  m[0] = VectorXd::Zero(d);
  p[0] = dyn.sigma2_init * MatrixXd::Identity(d, d);

  for (int t = 1; t <= T; ++t) {
    const VectorXd m_pred = dyn.rho * m[t - 1];
    MatrixXd p_pred = dyn.rho * dyn.rho * p[t - 1] + sig_w;
    const auto& rows = ctx.groups[day_group[t - 1]].rows;
    if (rows.empty()) {
      m[t] = m_pred;
      p[t] = std::move(p_pred);
      continue;
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    MatrixXd s(n, n);
    MatrixXd p_cross(d, n);  // predicted covariance columns at observed sites
    VectorXd innov(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) s(i, j) = p_pred(rows[i], rows[j]);
      p_cross.col(i) = p_pred.col(rows[i]);
      innov[i] = ds.z(rows[i], t - 1) - ds.X[t - 1].row(rows[i]).dot(psi.beta) -
                 m_pred[rows[i]];
    }
    s.diagonal().array() += psi.sigma2_eps;
    const CholeskyFactor sf = chol_psd(s);
    const MatrixXd gain = sf.solve(MatrixXd(p_cross.transpose())).transpose();
    m[t] = m_pred + gain * innov;
    MatrixXd pt = p_pred - gain * p_cross.transpose();
    p[t] = 0.5 * (pt + pt.transpose());
  }

  MatrixXd y(d, T + 1);
  y.col(T) = sample_mvn(m[T], chol_psd(p[T]), rng);
  for (int t = T - 1; t >= 0; --t) {
    const MatrixXd p_pred_next = dyn.rho * dyn.rho * p[t] + sig_w;
    const CholeskyFactor pf = chol_psd(p_pred_next);
    const MatrixXd jt = dyn.rho * pf.solve(p[t]).transpose();
    const VectorXd mean = m[t] + jt * (y.col(t + 1) - dyn.rho * m[t]);
    MatrixXd cov = p[t] - jt * p_pred_next * jt.transpose();
    cov = 0.5 * (cov + cov.transpose());
    y.col(t) = sample_mvn(mean, chol_psd(cov), rng);
  }
  return y;
}

MatrixXd enbloc_update_u(const ParamState& psi, const Dataset& ds,
                         RngStream& rng, const LikelihoodContext& ctx) {
  const auto& sp = psi.sep_params();
  const int d = ds.d();
  const int T = ds.T();
  if (psi.latent.rows() != d || psi.latent.cols() != T) {
    throw DomainError("enbloc_update_u: latent U must be d x T");
  }
  const KroneckerPair pair = separable_corr_matrix(sp, ctx.H, T);
  const SymmetricEigen et = eigen_sym(pair.A);  // temporal
  const SymmetricEigen es = eigen_sym(pair.B);  // spatial

  // Complete the data: missing cells imputed from the measurement equation
  // given the current U; the imputed values live only inside this update.
  MatrixXd z_full(d, T);
  const double sd_eps = std::sqrt(psi.sigma2_eps);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < d; ++i) {
      z_full(i, t) = ds.present(i, t) ? ds.z(i, t)
                                      : psi.latent(i, t) + sd_eps * rng.normal();
    }
  }

  MatrixXd mean_prior(d, T);
  for (int t = 0; t < T; ++t) mean_prior.col(t) = ds.X[t] * psi.beta;

  // In the joint eigenbasis the full-conditional precision is diagonal:
  // 1/(sigma2_omega lam_s lam_t) + 1/sigma2_eps per coordinate.
  const MatrixXd m_tilde = es.vectors.transpose() * mean_prior * et.vectors;
  const MatrixXd z_tilde = es.vectors.transpose() * z_full * et.vectors;

  MatrixXd u_tilde(d, T);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < d; ++i) {
      const double lam = sp.sigma2_omega * es.values[i] * et.values[t];
      const double prec = 1.0 / lam + 1.0 / psi.sigma2_eps;
      const double h = m_tilde(i, t) / lam + z_tilde(i, t) / psi.sigma2_eps;
      u_tilde(i, t) = h / prec + rng.normal() / std::sqrt(prec);
    }
  }
  return es.vectors * u_tilde * et.vectors.transpose();
}

Chain run_mcmc(ModelKind kind, const Dataset& ds, const PriorSpec& prior,
               const McmcConfig& cfg, RngStream& rng,
               std::optional<ParamState> init) {
  cfg.validate();
  const LikelihoodContext ctx = LikelihoodContext::build(ds, cfg.max_dense_dim);
  const auto params = scalar_params(kind, prior);
  const ModelMeta meta = model_meta(kind);

  ParamState psi = init ? *init : default_init(kind, ds, prior);
  if (psi.beta.size() != ds.k()) {
    throw DomainError("run_mcmc: initial beta has wrong length");
  }

  std::vector<MhAdaptState> adapt(params.size());
  for (size_t j = 0; j < params.size(); ++j) adapt[j].target = cfg.mh_target_accept;

  Chain chain;
  chain.kind = kind;
  chain.prior = prior;
  chain.n_iter = cfg.n_iter;
  chain.burn_in = cfg.burn_in;
  chain.thin = cfg.thin;
  for (const auto& [name, value] : flatten_params(kind, prior, psi)) {
    (void)value;
    chain.param_names.push_back(name);
  }

  const long adapt_until = cfg.effective_adapt_until();
  using clock = std::chrono::steady_clock;

  for (long iter = 0; iter < cfg.n_iter; ++iter) {
    const auto t0 = clock::now();
    try {
      // Latent process first, then the conjugate block, then MH.
      if (meta.needs_enbloc) {
        psi.latent = enbloc_update_u(psi, ds, rng, ctx);
      } else if (meta.needs_ffbs) {
        if (kind == ModelKind::B) {
          psi.latent.row(0) = ffbs_model_b(psi, ds, rng, ctx).transpose();
        } else {
          psi.latent = ffbs_model_c(psi, ds, rng, ctx);
        }
      }

      psi.beta = beta_update(kind, psi, ds, prior, rng, ctx);
      for (const auto& sp : params) {
        if (sp.mh) continue;
        VarianceParam which = VarianceParam::Sigma2Eta;
        if (sp.name == "sigma2_omega") which = VarianceParam::Sigma2Omega;
        if (sp.name == "sigma2_eps") which = VarianceParam::Sigma2Eps;
        sp.set(psi, variance_gibbs_update(kind, which, psi, ds, prior, rng, ctx));
      }

      // One target evaluation per proposal; the current value is carried
      // across parameters within the sweep.
      double current_target = log_target(kind, prior, psi, ds, ctx);
      for (size_t j = 0; j < params.size(); ++j) {
        const auto& sp = params[j];
        if (!sp.mh) continue;
        adapt[j].adapting = iter < adapt_until;
        const double x = sp.get(psi);
        const double y = sp.transform.to_unconstrained(x);
        const double y_prop = y + std::exp(adapt[j].log_sd) * rng.normal();
        const double x_prop = sp.transform.to_natural(y_prop);
        ParamState trial = psi;
        sp.set(trial, x_prop);
        const double prop_target = log_target(kind, prior, trial, ds, ctx);
        double log_ratio = (prop_target + sp.transform.log_jacobian(y_prop)) -
                           (current_target + sp.transform.log_jacobian(y));
        if (std::isnan(log_ratio)) log_ratio = kNegInf;
        const bool accept = std::log(rng.uniform()) < log_ratio;
        adapt[j].iter++;
        adapt[j].attempts++;
        if (accept) adapt[j].accepts++;
        if (adapt[j].adapting) {
          const double alpha = std::min(1.0, std::exp(std::min(log_ratio, 0.0)));
          adapt[j].log_sd +=
              std::pow(static_cast<double>(adapt[j].iter), -0.6) *
              (alpha - adapt[j].target);
          adapt[j].log_sd = std::clamp(adapt[j].log_sd, -12.0, 6.0);
        } else {
          adapt[j].frozen_attempts++;
          if (accept) adapt[j].frozen_accepts++;
        }
        if (accept) {
          sp.set(psi, x_prop);
          current_target = prop_target;
        }
      }
    } catch (const ResourceError&) {
      throw;  // budget violations keep their type (exit code 4)
    } catch (const Error& e) {
      throw NumericalError("run_mcmc[" + to_string(kind) + "] iteration " +
                           std::to_string(iter) + ": " + e.what());
    }

    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    chain.est_seconds_total += secs;
    if (iter >= cfg.burn_in) {
      chain.est_seconds_post += secs;
      if ((iter - cfg.burn_in) % cfg.thin == 0) chain.draws.push_back(psi);
    }
  }

  for (size_t j = 0; j < params.size(); ++j) {
    if (params[j].mh) chain.acceptance[params[j].name] = adapt[j].acceptance_rate();
  }
  return chain;
}

std::vector<double> autocorrelations(const std::vector<double>& x, int max_lag) {
  const auto n = static_cast<long>(x.size());
  if (n < 2) return {1.0};
  std::vector<double> acf(std::min<long>(max_lag, n - 1) + 1, 0.0);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double denom = 0.0;
  for (double v : x) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) {
    acf[0] = 1.0;
    return acf;
  }
  for (size_t lag = 0; lag < acf.size(); ++lag) {
    double s = 0.0;
    for (long t = 0; t + static_cast<long>(lag) < n; ++t) {
      s += (x[t] - mean) * (x[t + lag] - mean);
    }
    acf[lag] = s / denom;
  }
  return acf;
}

double effective_sample_size(const std::vector<double>& x) {
  const auto n = static_cast<long>(x.size());
  if (n < 2) return 0.0;
  const auto acf = autocorrelations(x, static_cast<int>(std::min<long>(n - 1, 200)));
  // Geyer initial positive sequence: accumulate pair sums while positive.
  double tau = -1.0;
  for (size_t m = 0; m + 1 < acf.size(); m += 2) {
    const double pair = acf[m] + acf[m + 1];
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1e-8);
  return n / tau;
}

DiagnosticsReport diagnostics(const Chain& chain, int max_lag) {
  if (chain.draws.size() < 10) {
    throw DomainError("diagnostics: need at least 10 retained draws");
  }
  const MatrixXd m = chain.draw_matrix();
  DiagnosticsReport rep;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    ParamDiagnostics pd;
    pd.name = chain.param_names[c];
    std::vector<double> series(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) series[r] = m(r, c);
    pd.mean = m.col(c).mean();
    pd.sd = std::sqrt((m.col(c).array() - pd.mean).square().sum() /
                      std::max<long>(1, m.rows() - 1));
    pd.degenerate = pd.sd < 1e-12;
    pd.ess = pd.degenerate ? 0.0 : effective_sample_size(series);
    pd.acf = autocorrelations(series, max_lag);
    const auto it = chain.acceptance.find(pd.name);
    pd.accept_rate = it != chain.acceptance.end() ? it->second : -1.0;
    rep.params.push_back(std::move(pd));
  }
  return rep;
}

namespace {

std::vector<std::string> latent_column_names(ModelKind kind, int d, int T) {
  std::vector<std::string> names;
  if (kind == ModelKind::A2) {
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < d; ++i) {
        names.push_back("u_" + std::to_string(i) + "_" + std::to_string(t + 1));
      }
    }
  } else if (kind == ModelKind::B) {
    for (int t = 0; t <= T; ++t) names.push_back("y_" + std::to_string(t));
  } else if (kind == ModelKind::C) {
    for (int t = 0; t <= T; ++t) {
      for (int i = 0; i < d; ++i) {
        names.push_back("y_" + std::to_string(i) + "_" + std::to_string(t));
      }
    }
  }
  return names;
}

}  // namespace

void save_chain_csv(const Chain& chain, const std::string& path,
                    bool include_latent) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  const ModelMeta meta = model_meta(chain.kind);
  const bool latent = include_latent &&
                      (meta.needs_ffbs || meta.needs_enbloc) &&
                      !chain.draws.empty() &&
                      chain.draws.front().latent.size() > 0;

  out << "iter";
  for (const auto& n : chain.param_names) out << ',' << n;
  int ld = 0, lt = 0;
  if (latent) {
    const auto& l0 = chain.draws.front().latent;
    ld = static_cast<int>(l0.rows());
    lt = chain.kind == ModelKind::A2 ? static_cast<int>(l0.cols())
                                     : static_cast<int>(l0.cols()) - 1;
    for (const auto& n : latent_column_names(chain.kind, ld, lt)) out << ',' << n;
  }
  out << '\n';

  for (size_t r = 0; r < chain.draws.size(); ++r) {
    out << r;
    for (const auto& [name, value] :
         flatten_params(chain.kind, chain.prior, chain.draws[r])) {
      (void)name;
      out << ',' << fmt(value);
    }
    if (latent) {
      const auto& l = chain.draws[r].latent;
      for (Eigen::Index t = 0; t < l.cols(); ++t) {
        for (Eigen::Index i = 0; i < l.rows(); ++i) out << ',' << fmt(l(i, t));
      }
    }
    out << '\n';
  }
}

Chain load_chain_csv(const std::string& path, ModelKind kind,
                     const PriorSpec& prior, int n_sites, int n_days) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty chain file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }

  Chain chain;
  chain.kind = kind;
  chain.prior = prior;

  const auto params = scalar_params(kind, prior);
  const ModelMeta meta = model_meta(kind);

  std::map<std::string, int> pos;
  for (size_t c = 0; c < header.size(); ++c) pos[header[c]] = static_cast<int>(c);
  int n_beta = 0;
  while (pos.count("beta_" + std::to_string(n_beta))) ++n_beta;
  if (n_beta == 0) throw SchemaError(path + ": no beta columns");
  for (const auto& sp : params) {
    if (!pos.count(sp.name)) throw SchemaError(path + ": missing column " + sp.name);
  }
  const auto latent_names = latent_column_names(kind, n_sites, n_days);
  bool have_latent = !latent_names.empty();
  for (const auto& n : latent_names) {
    if (!pos.count(n)) {
      have_latent = false;
      break;
    }
  }
  if ((meta.needs_ffbs || meta.needs_enbloc) && !have_latent) {
    throw SchemaError(path + ": chain lacks latent columns required by model " +
                      to_string(kind));
  }

  for (int j = 0; j < n_beta; ++j) {
    chain.param_names.push_back("beta_" + std::to_string(j));
  }
  for (const auto& sp : params) chain.param_names.push_back(sp.name);

  // Prototype state with the right variant members for this kind.
  ParamState proto;
  proto.beta = VectorXd::Zero(n_beta);
  switch (kind) {
    case ModelKind::A1: proto.corr = ExpSpatialParams{}; break;
    case ModelKind::A2: proto.corr = SeparableParams{}; break;
    case ModelKind::A3_1: {
      GneitingParams g; g.variant = GneitingVariant::A3_1; proto.corr = g;
      break;
    }
    case ModelKind::A3_2: {
      GneitingParams g; g.variant = GneitingVariant::A3_2; proto.corr = g;
      break;
    }
    case ModelKind::B:
      proto.corr = ExpSpatialParams{};
      proto.dyn = DynamicsParams{0.0, 1.0, prior.sigma2_B};
      break;
    case ModelKind::C:
      proto.corr = ExpSpatialParams{};
      proto.dyn = DynamicsParams{0.0, 1.0, prior.sigma2_C};
      break;
  }

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    {
      std::stringstream ss(line);
      std::string f;
      while (std::getline(ss, f, ',')) vals.push_back(std::stod(f));
    }
    if (vals.size() != header.size()) throw ParseError(path + ": row width mismatch");
    ParamState psi = proto;
    for (int j = 0; j < n_beta; ++j) {
      psi.beta[j] = vals[pos.at("beta_" + std::to_string(j))];
    }
    for (const auto& sp : params) sp.set(psi, vals[pos.at(sp.name)]);
    if (have_latent) {
      if (kind == ModelKind::A2) {
        psi.latent = MatrixXd(n_sites, n_days);
      } else if (kind == ModelKind::B) {
        psi.latent = MatrixXd(1, n_days + 1);
      } else {
        psi.latent = MatrixXd(n_sites, n_days + 1);
      }
      size_t idx = 0;
      for (Eigen::Index t = 0; t < psi.latent.cols(); ++t) {
        for (Eigen::Index i = 0; i < psi.latent.rows(); ++i) {
          psi.latent(i, t) = vals[pos.at(latent_names[idx++])];
        }
      }
    }
    chain.draws.push_back(std::move(psi));
  }
  return chain;
}

}  // namespace stgm
