#include "stgm/commands.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stgm/errors.hpp"

namespace stgm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return j;
}

// Apply named truth overrides through the scalar parameter table so config
// keys match chain column names.
ParamState parse_truth(ModelKind kind, int k, const PriorSpec& prior,
                       const json& j) {
  ParamState truth = default_truth(kind, k, prior);
  if (j.is_null()) return truth;
  if (j.contains("beta")) {
    const auto& b = j.at("beta");
    if (!b.is_array() || static_cast<int>(b.size()) != k) {
      throw ConfigError("simulate.truth.beta must be an array of length k");
    }
    for (int i = 0; i < k; ++i) truth.beta[i] = b[i].get<double>();
  }
  for (const auto& sp : scalar_params(kind, prior)) {
    if (j.contains(sp.name)) sp.set(truth, j.at(sp.name).get<double>());
  }
  return truth;
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["seed"] = cfg.seed;
  j["config_hash"] = cfg.config_hash;
  json models = json::array();
  for (ModelKind kind : cfg.models) models.push_back(to_string(kind));
  j["models"] = models;
  std::ofstream out(fs::path(cfg.out_dir) / "manifest.json");
  out << j.dump(2) << '\n';
}

// Dataset preparation shared by fit/validate/compare: obtain the raw panel
// (from files or the simulator), log-transform, split the holdout, and
// standardize the training covariates.
struct Prepared {
  Dataset train;
  Dataset holdout;  // zero sites when no holdout requested
  StandardizationRecord record;  // identity when standardization is off
  std::optional<ParamState> truth;
};

StandardizationRecord identity_record(int k) {
  StandardizationRecord rec;
  rec.mean.assign(k, 0.0);
  rec.sd.assign(k, 1.0);
  return rec;
}

Dataset obtain_dataset(const RunConfig& cfg, std::optional<ParamState>* truth_out) {
  if (cfg.sim) {
    RngStream rng = RngStream(cfg.seed).derive(1);
    const Dataset ds = simulate(cfg.sim->kind, cfg.sim->layout, rng);
    if (truth_out) *truth_out = cfg.sim->layout.truth;
    return ds;
  }
  if (!cfg.data) {
    throw ConfigError("config needs either 'data' paths or a 'simulate' block");
  }
  Dataset ds = load_dataset(cfg.data->sites, cfg.data->observations,
                            cfg.data->covariates, cfg.missing_cap);
  if (cfg.log_input) ds = log_transform(ds);
  return ds;
}

Prepared prepare(const RunConfig& cfg) {
  Prepared prep;
  prep.truth = std::nullopt;
  Dataset full = obtain_dataset(cfg, &prep.truth);

  std::vector<std::string> holdout = cfg.holdout_ids;
  if (holdout.empty() && cfg.holdout_count > 0) {
    if (cfg.holdout_count >= full.d() - 1) {
      throw ConfigError("holdout count leaves fewer than 2 training sites");
    }
    for (int i = full.d() - cfg.holdout_count; i < full.d(); ++i) {
      holdout.push_back(full.sites[i].id);
    }
  }
  auto [train, hold] = split_validation(full, holdout);

  if (cfg.standardize_covariates) {
    auto [std_train, rec] = standardize(train);
    prep.train = std::move(std_train);
    prep.record = std::move(rec);
  } else {
    prep.train = std::move(train);
    prep.record = identity_record(full.k());
  }
  prep.holdout = std::move(hold);
  return prep;
}

void write_truth_json(const RunConfig& cfg, const ParamState& truth,
                      ModelKind kind) {
  json j;
  j["kind"] = to_string(kind);
  json beta = json::array();
  for (Eigen::Index i = 0; i < truth.beta.size(); ++i) beta.push_back(truth.beta[i]);
  j["beta"] = beta;
  for (const auto& [name, value] : flatten_params(kind, cfg.prior, truth)) {
    if (name.rfind("beta_", 0) == 0) continue;
    j[name] = value;
  }
  std::ofstream out(fs::path(cfg.out_dir) / "truth.json");
  out << j.dump(2) << '\n';
}

void write_standardization(const RunConfig& cfg, const Dataset& ds,
                           const StandardizationRecord& rec) {
  json j;
  j["covariates"] = ds.covariate_names;
  j["mean"] = rec.mean;
  j["sd"] = rec.sd;
  std::ofstream out(fs::path(cfg.out_dir) / "standardization.json");
  out << j.dump(2) << '\n';
}

StandardizationRecord load_standardization(const std::string& dir, int k) {
  const fs::path path = fs::path(dir) / "standardization.json";
  if (!fs::exists(path)) return identity_record(k);
  const json j = read_json(path.string());
  StandardizationRecord rec;
  rec.mean = j.at("mean").get<std::vector<double>>();
  rec.sd = j.at("sd").get<std::vector<double>>();
  if (static_cast<int>(rec.mean.size()) != k) {
    throw ConfigError("standardization.json covariate count mismatch");
  }
  return rec;
}

void write_exploratory(const RunConfig& cfg, const Dataset& train) {
  if (!cfg.exploratory) return;
  const auto diag = residual_diagnostics(train);
  save_diagnostics_cloud_csv(diag,
                             (fs::path(cfg.out_dir) / "diagnostics_cloud.csv").string());
  save_diagnostics_acf_csv(diag,
                           (fs::path(cfg.out_dir) / "diagnostics_acf.csv").string());
  if (!cfg.aic_candidates.empty()) {
    const auto ranked = aic_screen(train, cfg.aic_candidates);
    std::ofstream out(fs::path(cfg.out_dir) / "aic.csv");
    out << "rank,covariates,aic,ok\n";
    for (size_t r = 0; r < ranked.size(); ++r) {
      out << (r + 1) << ",\"";
      for (size_t c = 0; c < ranked[r].covariates.size(); ++c) {
        if (c) out << ' ';
        out << ranked[r].covariates[c];
      }
      out << "\"," << fmt(ranked[r].aic) << ',' << (ranked[r].ok ? 1 : 0) << '\n';
    }
  }
}

void write_diagnostics_csv(const RunConfig& cfg, ModelKind kind,
                           const Chain& chain) {
  const auto rep = diagnostics(chain);
  const std::string name = to_string(kind);
  {
    std::ofstream out(fs::path(cfg.out_dir) / ("diagnostics_" + name + ".csv"));
    out << "param,mean,sd,ess,degenerate,accept_rate\n";
    for (const auto& p : rep.params) {
      out << p.name << ',' << fmt(p.mean) << ',' << fmt(p.sd) << ','
          << fmt(p.ess) << ',' << (p.degenerate ? 1 : 0) << ',';
      if (p.accept_rate >= 0.0) out << fmt(p.accept_rate);
      out << '\n';
    }
  }
  {
    std::ofstream out(fs::path(cfg.out_dir) / ("acf_" + name + ".csv"));
    out << "param,lag,acf\n";
    for (const auto& p : rep.params) {
      for (size_t lag = 0; lag < p.acf.size(); ++lag) {
        out << p.name << ',' << lag << ',' << fmt(p.acf[lag]) << '\n';
      }
    }
  }
}

struct FitResult {
  std::map<std::string, Chain> chains;
  std::map<std::string, double> est_sec_per_iter;
};

FitResult fit_models(const RunConfig& cfg, const Dataset& train) {
  FitResult out;
  for (ModelKind kind : cfg.models) {
    // Chains are sequential but draw from disjoint streams keyed by
    // (seed, model, chain index); their retained draws are pooled.
    Chain chain;
    for (int ci = 0; ci < cfg.mcmc.n_chains; ++ci) {
      RngStream rng = RngStream(cfg.seed)
                          .derive(1000 + 16 * static_cast<int>(kind) + ci);
      Chain one = run_mcmc(kind, train, cfg.prior, cfg.mcmc, rng);
      if (ci == 0) {
        chain = std::move(one);
      } else {
        chain.draws.insert(chain.draws.end(), one.draws.begin(), one.draws.end());
        chain.est_seconds_total += one.est_seconds_total;
        chain.est_seconds_post += one.est_seconds_post;
        chain.n_iter += one.n_iter;
        chain.burn_in += one.burn_in;
        for (const auto& [pname, rate] : one.acceptance) {
          chain.acceptance[pname] =
              (chain.acceptance[pname] * ci + rate) / (ci + 1);
        }
      }
    }
    const std::string name = to_string(kind);
    save_chain_csv(chain,
                   (fs::path(cfg.out_dir) / ("chain_" + name + ".csv")).string(),
                   cfg.include_latent);
    write_diagnostics_csv(cfg, kind, chain);
    out.est_sec_per_iter[name] = chain.est_sec_per_iter();
    out.chains.emplace(name, std::move(chain));
  }
  return out;
}

void write_timing(const RunConfig& cfg,
                  const std::map<std::string, double>& est,
                  const std::map<std::string, double>& pred) {
  json j;
  for (const auto& [name, v] : est) j[name]["est_sec_per_iter"] = v;
  for (const auto& [name, v] : pred) j[name]["pred_sec_per_iter"] = v;
  std::ofstream out(fs::path(cfg.out_dir) / "timing.json");
  out << j.dump(2) << '\n';
}

// Observed series and matching predictive summaries for one holdout station.
StationIndexRow station_indexes(const RunConfig& cfg, const Dataset& holdout,
                                int site, const std::vector<PredictiveDraws>& preds,
                                long first_target_of_site) {
  StationIndexRow row;
  row.site_id = holdout.sites[site].id;
  std::vector<double> obs, mean, lo, hi;
  for (int t = 0; t < holdout.T(); ++t) {
    if (!holdout.present(site, t)) continue;
    const auto& pd = preds[first_target_of_site + t];
    const PredictiveSummary s = cfg.index_scale == "log"
                                    ? pd.summarize(cfg.level)
                                    : pd.summarize_concentration(cfg.level);
    const double z = holdout.scale == Scale::Log && cfg.index_scale != "log"
                         ? std::exp(holdout.z(site, t))
                         : holdout.z(site, t);
    obs.push_back(z);
    mean.push_back(s.mean);
    lo.push_back(s.lo);
    hi.push_back(s.hi);
  }
  row.n_days = static_cast<long>(obs.size());
  if (row.n_days < 2) {
    throw DomainError("validation station " + row.site_id +
                      " has fewer than 2 observed days");
  }
  row.nmbf = nmbf(obs, mean);
  row.wnnr = wnnr(obs, mean);
  row.nnr = nnr(obs, mean);
  const auto p = rmse_corr_coverage(obs, mean, lo, hi);
  row.rmse = p.rmse;
  row.corr = p.corr;
  row.coverage = p.coverage;
  return row;
}

struct ValidationResult {
  std::map<std::string, std::vector<StationIndexRow>> rows;
  std::map<std::string, double> pred_sec_per_iter;
};

ValidationResult validate_models(const RunConfig& cfg, const Prepared& prep,
                                 const FitResult& fits) {
  if (prep.holdout.d() == 0) {
    throw ConfigError("validation requires holdout sites (holdout ids or count)");
  }
  const auto targets = targets_from_dataset(prep.holdout, prep.record);
  ValidationResult out;
  for (ModelKind kind : cfg.models) {
    const std::string name = to_string(kind);
    const Chain& chain = fits.chains.at(name);
    RngStream rng = RngStream(cfg.seed).derive(2000 + static_cast<int>(kind));
    const auto t0 = std::chrono::steady_clock::now();
    const auto preds = predict(chain, prep.train, targets, rng,
                               cfg.mcmc.max_dense_dim, cfg.max_pred_draws);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const long n_used = preds.empty() ? 1 : static_cast<long>(preds[0].draws.size());
    out.pred_sec_per_iter[name] = secs / std::max<long>(1, n_used);
    save_predictions_csv(preds,
                         (fs::path(cfg.out_dir) / ("predictions_" + name + ".csv")).string(),
                         cfg.level, cfg.index_scale);
    std::vector<StationIndexRow> rows;
    for (int i = 0; i < prep.holdout.d(); ++i) {
      rows.push_back(station_indexes(cfg, prep.holdout, i, preds,
                                     static_cast<long>(i) * prep.holdout.T()));
    }
    out.rows[name] = std::move(rows);
  }
  return out;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  const json j = read_json(path);
  RunConfig cfg;
  cfg.config_hash = "fnv1a-" + std::to_string(fnv1a(j.dump()));

  if (j.contains("models")) {
    for (const auto& name : j.at("models")) {
      cfg.models.push_back(parse_model_kind(name.get<std::string>()));
    }
  } else {
    cfg.models = all_model_kinds();
  }
  cfg.seed = j.value("seed", 1ull);
  cfg.out_dir = j.value("out_dir", std::string("out"));

  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    cfg.prior.beta_var = p.value("beta_var", cfg.prior.beta_var);
    cfg.prior.ig_shape = p.value("ig_shape", cfg.prior.ig_shape);
    cfg.prior.ig_scale = p.value("ig_scale", cfg.prior.ig_scale);
    cfg.prior.sigma2_B = p.value("sigma2_B", cfg.prior.sigma2_B);
    cfg.prior.sigma2_C = p.value("sigma2_C", cfg.prior.sigma2_C);
    cfg.prior.theta_lo = p.value("theta_lo", cfg.prior.theta_lo);
    cfg.prior.theta_hi = p.value("theta_hi", cfg.prior.theta_hi);
    cfg.prior.theta1_lo = p.value("theta1_lo", cfg.prior.theta1_lo);
    cfg.prior.theta1_hi = p.value("theta1_hi", cfg.prior.theta1_hi);
    cfg.prior.gn_scale_hi = p.value("gn_scale_hi", cfg.prior.gn_scale_hi);
  }

  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    cfg.log_input = p.value("log_transform", cfg.log_input);
    cfg.standardize_covariates = p.value("standardize", cfg.standardize_covariates);
    cfg.missing_cap = p.value("missing_cap", cfg.missing_cap);
  }

  if (j.contains("data")) {
    const auto& d = j.at("data");
    RunConfig::DataPaths paths;
    paths.sites = d.at("sites").get<std::string>();
    paths.observations = d.at("observations").get<std::string>();
    paths.covariates = d.at("covariates").get<std::string>();
    for (const auto& p : {paths.sites, paths.observations, paths.covariates}) {
      if (!fs::exists(p)) throw ConfigError("data file does not exist: " + p);
    }
    cfg.data = paths;
  }
  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    RunConfig::SimConfig sim;
    sim.kind = parse_model_kind(s.value("kind", std::string("A1")));
    sim.layout.d = s.value("d", 10);
    sim.layout.T = s.value("T", 50);
    sim.layout.k = s.value("k", 3);
    if (s.contains("extent_km")) {
      sim.layout.extent_x_km = s.at("extent_km")[0].get<double>();
      sim.layout.extent_y_km = s.at("extent_km")[1].get<double>();
    }
    sim.layout.missing_rate = s.value("missing_rate", 0.0);
    sim.layout.truth = parse_truth(sim.kind, sim.layout.k, cfg.prior,
                                   s.contains("truth") ? s.at("truth") : json());
    cfg.sim = sim;
  }

  if (j.contains("holdout")) {
    const auto& h = j.at("holdout");
    if (h.contains("ids")) {
      for (const auto& id : h.at("ids")) cfg.holdout_ids.push_back(id.get<std::string>());
    }
    cfg.holdout_count = h.value("count", 0);
  }

  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    cfg.mcmc.n_iter = m.value("n_iter", cfg.mcmc.n_iter);
    cfg.mcmc.burn_in = m.value("burn_in", cfg.mcmc.burn_in);
    cfg.mcmc.thin = m.value("thin", cfg.mcmc.thin);
    cfg.mcmc.n_chains = m.value("n_chains", cfg.mcmc.n_chains);
    cfg.mcmc.mh_target_accept = m.value("target_accept", cfg.mcmc.mh_target_accept);
    cfg.mcmc.adapt_until = m.value("adapt_until", cfg.mcmc.adapt_until);
    cfg.mcmc.max_dense_dim = m.value("max_dense_dim", cfg.mcmc.max_dense_dim);
  }

  if (j.contains("prediction")) {
    const auto& p = j.at("prediction");
    cfg.targets_path = p.value("targets", std::string());
    cfg.chains_dir = p.value("chains_dir", std::string());
    cfg.level = p.value("level", cfg.level);
    cfg.index_scale = p.value("index_scale", cfg.index_scale);
    cfg.max_pred_draws = p.value("max_draws", cfg.max_pred_draws);
    cfg.include_latent = p.value("include_latent", cfg.include_latent);
    if (cfg.index_scale != "log" && cfg.index_scale != "concentration") {
      throw ConfigError("prediction.index_scale must be 'log' or 'concentration'");
    }
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
      throw ConfigError("prediction.level must lie in (0,1)");
    }
  }

  if (j.contains("exploratory")) {
    const auto& e = j.at("exploratory");
    cfg.exploratory = e.value("enabled", false);
    if (e.contains("aic_candidates")) {
      for (const auto& cand : e.at("aic_candidates")) {
        cfg.aic_candidates.push_back(cand.get<std::vector<int>>());
      }
    }
  }

  cfg.mcmc.seed = cfg.seed;
  return cfg;
}

void cmd_simulate(const RunConfig& cfg) {
  if (!cfg.sim) throw ConfigError("simulate: config needs a 'simulate' block");
  fs::create_directories(cfg.out_dir);
  RngStream rng = RngStream(cfg.seed).derive(1);
  const Dataset ds = simulate(cfg.sim->kind, cfg.sim->layout, rng);
  save_dataset_csv(ds, (fs::path(cfg.out_dir) / "sites.csv").string(),
                   (fs::path(cfg.out_dir) / "observations.csv").string(),
                   (fs::path(cfg.out_dir) / "covariates.csv").string());
  write_truth_json(cfg, cfg.sim->layout.truth, cfg.sim->kind);
  write_manifest(cfg, "simulate");
}

void cmd_fit(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const Prepared prep = prepare(cfg);
  if (cfg.standardize_covariates) write_standardization(cfg, prep.train, prep.record);
  if (prep.truth) write_truth_json(cfg, *prep.truth, cfg.sim->kind);
  write_exploratory(cfg, prep.train);
  const FitResult fits = fit_models(cfg, prep.train);
  write_timing(cfg, fits.est_sec_per_iter, {});
  write_manifest(cfg, "fit");
}

void cmd_predict(const RunConfig& cfg) {
  if (cfg.targets_path.empty()) {
    throw ConfigError("predict: config needs prediction.targets");
  }
  fs::create_directories(cfg.out_dir);
  const Prepared prep = prepare(cfg);
  const std::string chains_dir = cfg.chains_dir.empty() ? cfg.out_dir : cfg.chains_dir;

  // targets.csv: site_id,utmx_km,utmy_km,altitude_m,day,<covariate names...>
  std::ifstream in(cfg.targets_path);
  if (!in) throw ConfigError("cannot open targets file " + cfg.targets_path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("targets file is empty");
  std::vector<PredictionTarget> targets;
  const StandardizationRecord rec =
      cfg.standardize_covariates ? load_standardization(chains_dir, prep.train.k())
                                 : identity_record(prep.train.k());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (static_cast<int>(f.size()) != 5 + prep.train.k() - 1) {
      throw SchemaError(cfg.targets_path + ":" + std::to_string(line_no) +
                        ": expected site_id,utmx_km,utmy_km,altitude_m,day,covariates");
    }
    PredictionTarget t;
    t.site.id = f[0];
    t.site.x_km = std::stod(f[1]);
    t.site.y_km = std::stod(f[2]);
    t.site.altitude_m = std::stod(f[3]);
    t.day = std::stoi(f[4]);
    VectorXd raw = VectorXd::Ones(prep.train.k());
    for (int j = 1; j < prep.train.k(); ++j) raw[j] = std::stod(f[4 + j]);
    t.x = rec.apply(raw);
    targets.push_back(std::move(t));
  }

  for (ModelKind kind : cfg.models) {
    const std::string name = to_string(kind);
    const fs::path chain_path = fs::path(chains_dir) / ("chain_" + name + ".csv");
    const Chain chain = load_chain_csv(chain_path.string(), kind, cfg.prior,
                                       prep.train.d(), prep.train.T());
    RngStream rng = RngStream(cfg.seed).derive(2000 + static_cast<int>(kind));
    const auto preds = predict(chain, prep.train, targets, rng,
                               cfg.mcmc.max_dense_dim, cfg.max_pred_draws);
    save_predictions_csv(preds,
                         (fs::path(cfg.out_dir) / ("predictions_" + name + ".csv")).string(),
                         cfg.level, cfg.index_scale);
  }
  write_manifest(cfg, "predict");
}

void cmd_validate(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const Prepared prep = prepare(cfg);
  if (cfg.standardize_covariates) write_standardization(cfg, prep.train, prep.record);
  if (prep.truth) write_truth_json(cfg, *prep.truth, cfg.sim->kind);
  write_exploratory(cfg, prep.train);
  const FitResult fits = fit_models(cfg, prep.train);
  const ValidationResult val = validate_models(cfg, prep, fits);
  save_indexes_csv(val.rows, (fs::path(cfg.out_dir) / "indexes.csv").string());
  write_timing(cfg, fits.est_sec_per_iter, val.pred_sec_per_iter);
  write_manifest(cfg, "validate");
}

void cmd_compare(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const Prepared prep = prepare(cfg);
  if (cfg.standardize_covariates) write_standardization(cfg, prep.train, prep.record);
  if (prep.truth) write_truth_json(cfg, *prep.truth, cfg.sim->kind);
  write_exploratory(cfg, prep.train);

  // Partial failures are annotated per model; the report still covers the
  // models that completed.
  FitResult fits;
  ValidationResult val;
  std::vector<std::string> notes;
  std::vector<ModelKind> completed;
  for (ModelKind kind : cfg.models) {
    const std::string name = to_string(kind);
    try {
      RunConfig one = cfg;
      one.models = {kind};
      const FitResult f = fit_models(one, prep.train);
      const ValidationResult v = validate_models(one, prep, f);
      fits.chains.insert(f.chains.begin(), f.chains.end());
      fits.est_sec_per_iter.insert(f.est_sec_per_iter.begin(), f.est_sec_per_iter.end());
      val.rows.insert(v.rows.begin(), v.rows.end());
      val.pred_sec_per_iter.insert(v.pred_sec_per_iter.begin(),
                                   v.pred_sec_per_iter.end());
      completed.push_back(kind);
    } catch (const Error& e) {
      notes.push_back("model " + name + " failed: " + e.what());
    }
  }
  if (completed.empty()) {
    throw NumericalError("compare: every requested model failed");
  }

  save_indexes_csv(val.rows, (fs::path(cfg.out_dir) / "indexes.csv").string());
  ComparisonReport rep = comparison_report(completed, val.rows,
                                           fits.est_sec_per_iter,
                                           val.pred_sec_per_iter, cfg.level);
  rep.notes.insert(rep.notes.end(), notes.begin(), notes.end());
  save_report_csv(rep, (fs::path(cfg.out_dir) / "report.csv").string());
  save_report_txt(rep, (fs::path(cfg.out_dir) / "report.txt").string());
  write_timing(cfg, fits.est_sec_per_iter, val.pred_sec_per_iter);
  write_manifest(cfg, "compare");
}

}  // namespace stgm
