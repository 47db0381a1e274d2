#include "stgm/models.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "stgm/errors.hpp"

namespace stgm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
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

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::A1: return "A1";
    case ModelKind::A2: return "A2";
    case ModelKind::A3_1: return "A3-1";
    case ModelKind::A3_2: return "A3-2";
    case ModelKind::B: return "B";
    case ModelKind::C: return "C";
  }
  throw DomainError("to_string: bad ModelKind");
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "A1") return ModelKind::A1;
  if (name == "A2") return ModelKind::A2;
  if (name == "A3-1" || name == "A3_1") return ModelKind::A3_1;
  if (name == "A3-2" || name == "A3_2") return ModelKind::A3_2;
  if (name == "B") return ModelKind::B;
  if (name == "C") return ModelKind::C;
  throw ConfigError("unknown model '" + name + "' (expected A1,A2,A3-1,A3-2,B,C)");
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {
      ModelKind::A1, ModelKind::A2, ModelKind::A3_1,
      ModelKind::A3_2, ModelKind::B, ModelKind::C};
  return kinds;
}

ExpSpatialParams& ParamState::exp_params() {
  if (auto* p = std::get_if<ExpSpatialParams>(&corr)) return *p;
  throw ContractError("ParamState: exponential spatial parameters not present");
}
const ExpSpatialParams& ParamState::exp_params() const {
  return const_cast<ParamState*>(this)->exp_params();
}
SeparableParams& ParamState::sep_params() {
  if (auto* p = std::get_if<SeparableParams>(&corr)) return *p;
  throw ContractError("ParamState: separable parameters not present");
}
const SeparableParams& ParamState::sep_params() const {
  return const_cast<ParamState*>(this)->sep_params();
}
GneitingParams& ParamState::gneiting_params() {
  if (auto* p = std::get_if<GneitingParams>(&corr)) return *p;
  throw ContractError("ParamState: Gneiting parameters not present");
}
const GneitingParams& ParamState::gneiting_params() const {
  return const_cast<ParamState*>(this)->gneiting_params();
}

double ParamState::sigma2_omega() const {
  return std::visit([](const auto& p) { return p.sigma2_omega; }, corr);
}
void ParamState::set_sigma2_omega(double v) {
  std::visit([v](auto& p) { p.sigma2_omega = v; }, corr);
}

std::string to_string(BiggestMatrix m) {
  switch (m) {
    case BiggestMatrix::DxD: return "dxd";
    case BiggestMatrix::TxT: return "TxT";
    case BiggestMatrix::DTxDT: return "dTxdT";
  }
  throw DomainError("to_string: bad BiggestMatrix");
}

ModelMeta model_meta(ModelKind kind) {
  switch (kind) {
    case ModelKind::A1: return {3, 3, BiggestMatrix::DxD, false, false};
    case ModelKind::A2: return {4, 2, BiggestMatrix::TxT, false, true};
    case ModelKind::A3_1: return {7, 7, BiggestMatrix::DTxDT, false, false};
    case ModelKind::A3_2: return {8, 8, BiggestMatrix::DTxDT, false, false};
    case ModelKind::B: return {5, 4, BiggestMatrix::DxD, true, false};
    case ModelKind::C: return {4, 2, BiggestMatrix::DxD, true, false};
  }
  throw DomainError("model_meta: bad ModelKind");
}

double Transform::to_unconstrained(double x) const {
  if (kind == Kind::Log) return std::log(x);
  const double s = (x - lo) / (hi - lo);
  return std::log(s / (1.0 - s));
}

double Transform::to_natural(double y) const {
  if (kind == Kind::Log) return std::exp(y);
  const double s = 1.0 / (1.0 + std::exp(-y));
  return lo + (hi - lo) * s;
}

double Transform::log_jacobian(double y) const {
  if (kind == Kind::Log) return y;
  const double s = 1.0 / (1.0 + std::exp(-y));
  return std::log(hi - lo) + std::log(s) + std::log1p(-s);
}

double ScalarPrior::logpdf(double x) const {
  if (kind == Kind::InvGamma) {
    if (!(x > 0.0)) return kNegInf;
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
  }
  if (x <= lo || x >= hi) return kNegInf;
  return -std::log(hi - lo);
}

std::vector<ScalarParam> scalar_params(ModelKind kind, const PriorSpec& pr) {
  const Transform log_tr{Transform::Kind::Log, 0, 0};
  const ScalarPrior ig{ScalarPrior::Kind::InvGamma, pr.ig_shape, pr.ig_scale, 0, 0};
  auto unif = [](double lo, double hi) {
    return ScalarPrior{ScalarPrior::Kind::Uniform, 0, 0, lo, hi};
  };
  auto interval = [](double lo, double hi) {
    return Transform{Transform::Kind::Interval, lo, hi};
  };

  ScalarParam s2e{"sigma2_eps", true, log_tr, ig,
                  [](const ParamState& p) { return p.sigma2_eps; },
                  [](ParamState& p, double v) { p.sigma2_eps = v; }};
  ScalarParam s2w{"sigma2_omega", true, log_tr, ig,
                  [](const ParamState& p) { return p.sigma2_omega(); },
                  [](ParamState& p, double v) { p.set_sigma2_omega(v); }};

  std::vector<ScalarParam> out;
  switch (kind) {
    case ModelKind::A1: {
      out = {s2e, s2w};
      out.push_back({"theta", true, interval(pr.theta_lo, pr.theta_hi),
                     unif(pr.theta_lo, pr.theta_hi),
                     [](const ParamState& p) { return p.exp_params().theta; },
                     [](ParamState& p, double v) { p.exp_params().theta = v; }});
      break;
    }
    case ModelKind::A2: {
      s2e.mh = false;
      s2w.mh = false;
      out = {s2e, s2w};
      out.push_back({"theta1", true, interval(pr.theta1_lo, pr.theta1_hi),
                     unif(pr.theta1_lo, pr.theta1_hi),
                     [](const ParamState& p) { return p.sep_params().theta1; },
                     [](ParamState& p, double v) { p.sep_params().theta1 = v; }});
      out.push_back({"theta2", true, interval(pr.theta_lo, pr.theta_hi),
                     unif(pr.theta_lo, pr.theta_hi),
                     [](const ParamState& p) { return p.sep_params().theta2; },
                     [](ParamState& p, double v) { p.sep_params().theta2 = v; }});
      break;
    }
    case ModelKind::A3_1:
    case ModelKind::A3_2: {
      out = {s2e, s2w};
      auto gn = [](auto getter, auto setter) {
        return std::make_pair(
            std::function<double(const ParamState&)>(
                [getter](const ParamState& p) { return getter(p.gneiting_params()); }),
            std::function<void(ParamState&, double)>(
                [setter](ParamState& p, double v) { setter(p.gneiting_params(), v); }));
      };
      auto add = [&](const std::string& name, Transform tr, ScalarPrior sp,
                     auto getter, auto setter) {
        auto [g, s] = gn(getter, setter);
        out.push_back({name, true, tr, sp, g, s});
      };
      add("a", log_tr, unif(pr.gn_scale_lo, pr.gn_scale_hi),
          [](const GneitingParams& g) { return g.a; },
          [](GneitingParams& g, double v) { g.a = v; });
      add("alpha", interval(pr.gn_unit_lo, pr.gn_unit_hi),
          unif(pr.gn_unit_lo, pr.gn_unit_hi),
          [](const GneitingParams& g) { return g.alpha; },
          [](GneitingParams& g, double v) { g.alpha = v; });
      if (kind == ModelKind::A3_1) {
        add("b", interval(pr.gn_unit_lo, pr.gn_unit_hi),
            unif(pr.gn_unit_lo, pr.gn_unit_hi),
            [](const GneitingParams& g) { return g.b; },
            [](GneitingParams& g, double v) { g.b = v; });
      }
      add("c", log_tr, unif(pr.gn_scale_lo, pr.gn_scale_hi),
          [](const GneitingParams& g) { return g.c; },
          [](GneitingParams& g, double v) { g.c = v; });
      add("gamma", interval(pr.gn_unit_lo, pr.gn_unit_hi),
          unif(pr.gn_unit_lo, pr.gn_unit_hi),
          [](const GneitingParams& g) { return g.gamma; },
          [](GneitingParams& g, double v) { g.gamma = v; });
      if (kind == ModelKind::A3_2) {
        add("nu", log_tr, unif(pr.gn_scale_lo, pr.gn_scale_hi),
            [](const GneitingParams& g) { return g.nu; },
            [](GneitingParams& g, double v) { g.nu = v; });
        add("tau", interval(pr.gn_unit_lo, pr.gn_unit_hi),
            unif(pr.gn_unit_lo, pr.gn_unit_hi),
            [](const GneitingParams& g) { return g.tau; },
            [](GneitingParams& g, double v) { g.tau = v; });
      }
      break;
    }
    case ModelKind::B: {
      out = {s2e, s2w};
      out.push_back({"sigma2_eta", false, log_tr, ig,
                     [](const ParamState& p) { return p.dyn->sigma2_eta; },
                     [](ParamState& p, double v) { p.dyn->sigma2_eta = v; }});
      out.push_back({"theta", true, interval(pr.theta_lo, pr.theta_hi),
                     unif(pr.theta_lo, pr.theta_hi),
                     [](const ParamState& p) { return p.exp_params().theta; },
                     [](ParamState& p, double v) { p.exp_params().theta = v; }});
      out.push_back({"rho", true, interval(pr.rho_lo, pr.rho_hi),
                     unif(pr.rho_lo, pr.rho_hi),
                     [](const ParamState& p) { return p.dyn->rho; },
                     [](ParamState& p, double v) { p.dyn->rho = v; }});
      break;
    }
    case ModelKind::C: {
      s2e.mh = false;
      s2w.mh = false;
      out = {s2e, s2w};
      out.push_back({"theta", true, interval(pr.theta_lo, pr.theta_hi),
                     unif(pr.theta_lo, pr.theta_hi),
                     [](const ParamState& p) { return p.exp_params().theta; },
                     [](ParamState& p, double v) { p.exp_params().theta = v; }});
      out.push_back({"rho", true, interval(pr.rho_lo, pr.rho_hi),
                     unif(pr.rho_lo, pr.rho_hi),
                     [](const ParamState& p) { return p.dyn->rho; },
                     [](ParamState& p, double v) { p.dyn->rho = v; }});
      break;
    }
  }
  return out;
}

LikelihoodContext LikelihoodContext::build(const Dataset& ds, int max_dense_dim) {
  LikelihoodContext ctx;
  ctx.H = spatial_distance_matrix(ds.sites);
  ctx.max_dense_dim = max_dense_dim;
  std::map<std::vector<bool>, int> seen;
  for (int t = 0; t < ds.T(); ++t) {
    std::vector<bool> pat(ds.d());
    for (int i = 0; i < ds.d(); ++i) pat[i] = ds.present(i, t);
    auto [it, inserted] = seen.emplace(pat, static_cast<int>(ctx.groups.size()));
    if (inserted) {
      PatternGroup g;
      for (int i = 0; i < ds.d(); ++i) {
        if (pat[i]) g.rows.push_back(i);
      }
      ctx.groups.push_back(std::move(g));
    }
    ctx.groups[it->second].days.push_back(t);
  }
  return ctx;
}

double log_prior(ModelKind kind, const PriorSpec& prior, const ParamState& psi) {
  double lp = 0.0;
  for (Eigen::Index j = 0; j < psi.beta.size(); ++j) {
    lp += -0.5 * (kLog2Pi + std::log(prior.beta_var) +
                  psi.beta[j] * psi.beta[j] / prior.beta_var);
  }
  for (const auto& sp : scalar_params(kind, prior)) {
    lp += sp.prior.logpdf(sp.get(psi));
    if (lp == kNegInf) return kNegInf;
  }
  return lp;
}

namespace {

// Gaussian observation terms, day-by-day, with per-pattern factorization of
// sigma2_omega * C(rows) + sigma2_eps * I. mean_shift(t) is added to the
// trend X_t beta (used by Model B for K y_t).
double daily_marginal_terms(const ParamState& psi, const Dataset& ds,
                            const LikelihoodContext& ctx, double theta,
                            const std::function<double(int)>& mean_shift) {
  const MatrixXd corr = spatial_corr_matrix(theta, ctx.H);
  const double s2w = psi.sigma2_omega();
  double ll = 0.0;
  for (const auto& g : ctx.groups) {
    if (g.rows.empty()) continue;
    const auto n = static_cast<Eigen::Index>(g.rows.size());
    MatrixXd sig = s2w * subset_sym(corr, g.rows);
    sig.diagonal().array() += psi.sigma2_eps;
    const CholeskyFactor f = chol_psd(sig);
    const double ld = f.logdet();
    for (int t : g.days) {
      VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const int row = g.rows[i];
        r[i] = ds.z(row, t) - ds.X[t].row(row).dot(psi.beta) -
               (mean_shift ? mean_shift(t) : 0.0);
      }
      ll += -0.5 * (n * kLog2Pi + ld + f.invquad(r));
    }
  }
  return ll;
}

double loglik_a1(const ParamState& psi, const Dataset& ds,
                 const LikelihoodContext& ctx) {
  return daily_marginal_terms(psi, ds, ctx, psi.exp_params().theta, nullptr);
}

double loglik_a3(const ParamState& psi, const Dataset& ds,
                 const LikelihoodContext& ctx) {
  const auto& gp = psi.gneiting_params();
  const int d = ds.d();
  const long dim = static_cast<long>(d) * ds.T();
  if (dim > ctx.max_dense_dim) {
    throw ResourceError("A3 likelihood: dT=" + std::to_string(dim) +
                        " exceeds dense budget " + std::to_string(ctx.max_dense_dim));
  }
  const auto lag = gneiting_lag_matrices(gp, ctx.H, ds.T());

  std::vector<std::pair<int, int>> cells;  // (site, day), day-major
  for (int t = 0; t < ds.T(); ++t) {
    for (int i = 0; i < d; ++i) {
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
  const CholeskyFactor f = chol_psd(sig);
  return -0.5 * (n * kLog2Pi + f.logdet() + f.invquad(r));
}

double loglik_a2(const ParamState& psi, const Dataset& ds,
                 const LikelihoodContext& ctx) {
  const auto& sp = psi.sep_params();
  const int d = ds.d();
  const int T = ds.T();
  if (psi.latent.rows() != d || psi.latent.cols() != T) {
    throw DomainError("A2 likelihood: latent U must be d x T");
  }
  const KroneckerPair pair = separable_corr_matrix(sp, ctx.H, T);

  // Measurement terms over present cells.
  double ll = 0.0;
  long n_obs = 0;
  double ss = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < d; ++i) {
      if (!ds.present(i, t)) continue;
      const double e = ds.z(i, t) - psi.latent(i, t);
      ss += e * e;
      ++n_obs;
    }
  }
  ll += -0.5 * (n_obs * (kLog2Pi + std::log(psi.sigma2_eps)) + ss / psi.sigma2_eps);

  // Latent prior N(X beta, sigma2_omega * C_t (x) C_s).
  MatrixXd resid(d, T);
  for (int t = 0; t < T; ++t) {
    resid.col(t) = psi.latent.col(t) - ds.X[t] * psi.beta;
  }
  const Eigen::Map<const VectorXd> rv(resid.data(), static_cast<long>(d) * T);
  const VectorXd solved = kron_solve(pair, rv);
  const double quad = rv.dot(solved) / sp.sigma2_omega;
  const double dim = static_cast<double>(d) * T;
  ll += -0.5 * (dim * (kLog2Pi + std::log(sp.sigma2_omega)) +
                kron_logdet(pair) + quad);
  return ll;
}

double loglik_b(const ParamState& psi, const Dataset& ds,
                const LikelihoodContext& ctx) {
  const int T = ds.T();
  if (psi.latent.rows() != 1 || psi.latent.cols() != T + 1) {
    throw DomainError("B likelihood: latent must be 1 x (T+1)");
  }
  if (!psi.dyn) throw DomainError("B likelihood: dynamics parameters missing");
  const auto& dyn = *psi.dyn;

  double ll = daily_marginal_terms(
      psi, ds, ctx, psi.exp_params().theta,
      [&](int t) { return psi.latent(0, t + 1); });

  // AR(1) transitions y_t | y_{t-1} ~ N(rho y_{t-1}, sigma2_eta) plus the
  // fixed initial condition y_0 ~ N(0, sigma2_B).
  for (int t = 1; t <= T; ++t) {
    const double e = psi.latent(0, t) - dyn.rho * psi.latent(0, t - 1);
    ll += -0.5 * (kLog2Pi + std::log(dyn.sigma2_eta) + e * e / dyn.sigma2_eta);
  }
  const double y0 = psi.latent(0, 0);
  ll += -0.5 * (kLog2Pi + std::log(dyn.sigma2_init) + y0 * y0 / dyn.sigma2_init);
  return ll;
}

double loglik_c(const ParamState& psi, const Dataset& ds,
                const LikelihoodContext& ctx) {
  const int d = ds.d();
  const int T = ds.T();
  if (psi.latent.rows() != d || psi.latent.cols() != T + 1) {
    throw DomainError("C likelihood: latent must be d x (T+1)");
  }
  if (!psi.dyn) throw DomainError("C likelihood: dynamics parameters missing");
  const double rho = psi.dyn->rho;
  const auto& ep = psi.exp_params();

  // Measurement: diagonal noise over present cells.
  double ll = 0.0;
  long n_obs = 0;
  double ss = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < d; ++i) {
      if (!ds.present(i, t)) continue;
      const double e = ds.z(i, t) - ds.X[t].row(i).dot(psi.beta) -
                       psi.latent(i, t + 1);
      ss += e * e;
      ++n_obs;
    }
  }
  ll += -0.5 * (n_obs * (kLog2Pi + std::log(psi.sigma2_eps)) + ss / psi.sigma2_eps);

  // Transitions Y_t | Y_{t-1} ~ N(rho Y_{t-1}, sigma2_omega C(h)) and the
  // fixed initial condition Y_0 ~ N_d(0, sigma2_C I).
  MatrixXd sig = ep.sigma2_omega * spatial_corr_matrix(ep.theta, ctx.H);
  const CholeskyFactor f = chol_psd(sig);
  const double ld = f.logdet();
  for (int t = 1; t <= T; ++t) {
    const VectorXd w = psi.latent.col(t) - rho * psi.latent.col(t - 1);
    ll += -0.5 * (d * kLog2Pi + ld + f.invquad(w));
  }
  const double s2i = psi.dyn->sigma2_init;
  ll += -0.5 * (d * (kLog2Pi + std::log(s2i)) +
                psi.latent.col(0).squaredNorm() / s2i);
  return ll;
}

}  // namespace

double marginal_loglik(ModelKind kind, const ParamState& psi, const Dataset& ds,
                       const LikelihoodContext& ctx) {
  switch (kind) {
    case ModelKind::A1:
      return loglik_a1(psi, ds, ctx);
    case ModelKind::A3_1:
    case ModelKind::A3_2:
      return loglik_a3(psi, ds, ctx);
    default:
      throw ContractError("marginal_loglik: only A1/A3-1/A3-2 marginalize the latent");
  }
}

double marginal_loglik(ModelKind kind, const ParamState& psi, const Dataset& ds) {
  return marginal_loglik(kind, psi, ds, LikelihoodContext::build(ds));
}

double conditional_loglik(ModelKind kind, const ParamState& psi,
                          const Dataset& ds, const LikelihoodContext& ctx) {
  switch (kind) {
    case ModelKind::A2:
      return loglik_a2(psi, ds, ctx);
    case ModelKind::B:
      return loglik_b(psi, ds, ctx);
    case ModelKind::C:
      return loglik_c(psi, ds, ctx);
    default:
      throw ContractError("conditional_loglik: only A2/B/C carry a latent process");
  }
}

double conditional_loglik(ModelKind kind, const ParamState& psi,
                          const Dataset& ds) {
  return conditional_loglik(kind, psi, ds, LikelihoodContext::build(ds));
}

double log_target(ModelKind kind, const PriorSpec& prior, const ParamState& psi,
                  const Dataset& ds, const LikelihoodContext& ctx) {
  const double lp = log_prior(kind, prior, psi);
  if (lp == kNegInf) return kNegInf;
  double ll;
  if (kind == ModelKind::A1 || kind == ModelKind::A3_1 || kind == ModelKind::A3_2) {
    ll = marginal_loglik(kind, psi, ds, ctx);
  } else {
    ll = conditional_loglik(kind, psi, ds, ctx);
  }
  return lp + ll;
}

ParamState default_init(ModelKind kind, const Dataset& ds,
                        const PriorSpec& prior) {
  const int k = ds.k();
  // Pooled OLS over present cells.
  std::vector<std::pair<int, int>> cells;
  for (int t = 0; t < ds.T(); ++t) {
    for (int i = 0; i < ds.d(); ++i) {
      if (ds.present(i, t)) cells.emplace_back(i, t);
    }
  }
  VectorXd beta = VectorXd::Zero(k);
  double resid_var = 1.0;
  if (static_cast<int>(cells.size()) > k) {
    MatrixXd X(cells.size(), k);
    VectorXd y(cells.size());
    for (size_t a = 0; a < cells.size(); ++a) {
      X.row(a) = ds.X[cells[a].second].row(cells[a].first);
      y[a] = ds.z(cells[a].first, cells[a].second);
    }
    beta = X.colPivHouseholderQr().solve(y);
    resid_var = (y - X * beta).squaredNorm() / (cells.size() - k);
  }
  const double half = std::max(resid_var / 2.0, 1e-4);

  ParamState psi;
  psi.beta = beta;
  psi.sigma2_eps = half;
  switch (kind) {
    case ModelKind::A1:
      psi.corr = ExpSpatialParams{0.1, half};
      break;
    case ModelKind::A2: {
      psi.corr = SeparableParams{1.0, 0.1, half};
      psi.latent = MatrixXd(ds.d(), ds.T());
      for (int t = 0; t < ds.T(); ++t) psi.latent.col(t) = ds.X[t] * beta;
      break;
    }
    case ModelKind::A3_1: {
      GneitingParams g;
      g.variant = GneitingVariant::A3_1;
      g.a = 1.0; g.c = 1.0; g.alpha = 0.8; g.gamma = 0.8; g.b = 0.5;
      g.sigma2_omega = half;
      psi.corr = g;
      break;
    }
    case ModelKind::A3_2: {
      GneitingParams g;
      g.variant = GneitingVariant::A3_2;
      g.a = 1.0; g.c = 1.0; g.alpha = 0.8; g.gamma = 0.8; g.nu = 1.0; g.tau = 0.5;
      g.sigma2_omega = half;
      psi.corr = g;
      break;
    }
    case ModelKind::B:
      psi.corr = ExpSpatialParams{0.1, half};
      psi.dyn = DynamicsParams{0.5, std::max(resid_var / 4.0, 1e-4), prior.sigma2_B};
      psi.latent = MatrixXd::Zero(1, ds.T() + 1);
      break;
    case ModelKind::C:
      psi.corr = ExpSpatialParams{0.1, half};
      psi.dyn = DynamicsParams{0.5, 1.0, prior.sigma2_C};
      psi.latent = MatrixXd::Zero(ds.d(), ds.T() + 1);
      break;
  }
  return psi;
}

std::vector<std::pair<std::string, double>> flatten_params(
    ModelKind kind, const PriorSpec& prior, const ParamState& psi) {
  std::vector<std::pair<std::string, double>> out;
  for (Eigen::Index j = 0; j < psi.beta.size(); ++j) {
    out.emplace_back("beta_" + std::to_string(j), psi.beta[j]);
  }
  for (const auto& sp : scalar_params(kind, prior)) {
    out.emplace_back(sp.name, sp.get(psi));
  }
  return out;
}

}  // namespace stgm
