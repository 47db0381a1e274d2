#include "stgm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "stgm/errors.hpp"

namespace stgm {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void check_positive_pair(const std::vector<double>& observed,
                         const std::vector<double>& predicted,
                         const char* who) {
  if (observed.empty() || observed.size() != predicted.size()) {
    throw DomainError(std::string(who) + ": series must be nonempty and equal length");
  }
  for (size_t i = 0; i < observed.size(); ++i) {
    if (!(observed[i] > 0.0) || !(predicted[i] > 0.0)) {
      throw DomainError(std::string(who) + ": values must be positive");
    }
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double iqr_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double idx = p * (v.size() - 1);
    const auto lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (idx - lo) * (v[hi] - v[lo]);
  };
  return q(0.75) - q(0.25);
}

}  // namespace

double nmbf(const std::vector<double>& observed,
            const std::vector<double>& predicted) {
  check_positive_pair(observed, predicted, "nmbf");
  double so = 0.0, sp = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    so += observed[i];
    sp += predicted[i];
  }
  return sp >= so ? sp / so - 1.0 : 1.0 - so / sp;
}

double wnnr(const std::vector<double>& observed,
            const std::vector<double>& predicted) {
  check_positive_pair(observed, predicted, "wnnr");
  double zbar = 0.0;
  for (double z : observed) zbar += z;
  zbar /= observed.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    const double s = observed[i] / zbar;
    const double k = std::exp(-std::abs(std::log(predicted[i] / observed[i])));
    num += s * s * (1.0 - k) * (1.0 - k);
    den += s * k;
  }
  if (!(den > 0.0)) throw DomainError("wnnr: zero denominator");
  return num / den;
}

double nnr(const std::vector<double>& observed,
           const std::vector<double>& predicted) {
  check_positive_pair(observed, predicted, "nnr");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    const double k = std::exp(-std::abs(std::log(predicted[i] / observed[i])));
    num += (1.0 - k) * (1.0 - k);
    den += k;
  }
  if (!(den > 0.0)) throw DomainError("nnr: zero denominator");
  return num / den;
}

PointIndexes rmse_corr_coverage(const std::vector<double>& observed,
                                const std::vector<double>& predicted,
                                const std::vector<double>& lo,
                                const std::vector<double>& hi) {
  const size_t n = observed.size();
  if (n < 2 || predicted.size() != n || lo.size() != n || hi.size() != n) {
    throw DomainError("rmse_corr_coverage: need >= 2 aligned days");
  }
  PointIndexes out;
  double se = 0.0;
  long inside = 0;
  double mo = 0.0, mp = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mo += observed[i];
    mp += predicted[i];
  }
  mo /= n;
  mp /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = predicted[i] - observed[i];
    se += e * e;
    if (observed[i] >= lo[i] && observed[i] <= hi[i]) ++inside;
    sxy += (observed[i] - mo) * (predicted[i] - mp);
    sxx += (observed[i] - mo) * (observed[i] - mo);
    syy += (predicted[i] - mp) * (predicted[i] - mp);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw DomainError("rmse_corr_coverage: zero-variance series, correlation undefined");
  }
  out.rmse = std::sqrt(se / n);
  out.corr = sxy / std::sqrt(sxx * syy);
  out.coverage = static_cast<double>(inside) / n;
  return out;
}

std::map<std::string, int> star_rating(
    const std::map<std::string, std::vector<StationIndexRow>>& per_model_rows,
    double nominal_coverage) {
  if (per_model_rows.size() < 2) {
    throw DomainError("star_rating: need at least 2 models");
  }
  std::vector<std::string> models;
  for (const auto& [name, rows] : per_model_rows) {
    if (rows.empty()) throw DomainError("star_rating: model " + name + " has no rows");
    models.push_back(name);
  }

  // Per-index medians across stations, oriented so smaller is better.
  const int n_idx = 6;
  std::map<std::string, std::vector<double>> crit;
  for (const auto& m : models) {
    const auto& rows = per_model_rows.at(m);
    std::vector<double> abs_nmbf, wn, nn, rm, neg_corr, cov_err;
    for (const auto& r : rows) {
      abs_nmbf.push_back(std::abs(r.nmbf));
      wn.push_back(r.wnnr);
      nn.push_back(r.nnr);
      rm.push_back(r.rmse);
      neg_corr.push_back(-r.corr);
      cov_err.push_back(std::abs(r.coverage - nominal_coverage));
    }
    crit[m] = {median_of(abs_nmbf), median_of(wn),       median_of(nn),
               median_of(rm),       median_of(neg_corr), median_of(cov_err)};
  }

  // Competition ranks (ties share the better rank), averaged over indexes.
  std::map<std::string, double> avg_rank;
  for (const auto& m : models) {
    double total = 0.0;
    for (int j = 0; j < n_idx; ++j) {
      int better = 0;
      for (const auto& other : models) {
        if (crit[other][j] < crit[m][j]) ++better;
      }
      total += 1.0 + better;
    }
    avg_rank[m] = total / n_idx;
  }

  // Tertile position by count of strictly better models.
  const double n_models = static_cast<double>(models.size());
  std::map<std::string, int> stars;
  for (const auto& m : models) {
    int better = 0;
    for (const auto& other : models) {
      if (avg_rank[other] < avg_rank[m]) ++better;
    }
    const double frac = better / n_models;
    stars[m] = frac < 1.0 / 3.0 ? 3 : (frac < 2.0 / 3.0 ? 2 : 1);
  }
  return stars;
}

ResidualDiagnostics residual_diagnostics(const Dataset& ds) {
  if (ds.scale != Scale::Log) {
    throw DomainError("residual_diagnostics: expects a log-scale dataset");
  }
  // Pooled OLS over all present cells.
  std::vector<std::pair<int, int>> cells;
  for (int t = 0; t < ds.T(); ++t) {
    for (int i = 0; i < ds.d(); ++i) {
      if (ds.present(i, t)) cells.emplace_back(i, t);
    }
  }
  const int k = ds.k();
  if (static_cast<int>(cells.size()) <= k) {
    throw DomainError("residual_diagnostics: too few observations for OLS");
  }
  MatrixXd x(cells.size(), k);
  VectorXd y(cells.size());
  for (size_t a = 0; a < cells.size(); ++a) {
    x.row(a) = ds.X[cells[a].second].row(cells[a].first);
    y[a] = ds.z(cells[a].first, cells[a].second);
  }
  const auto qr = x.colPivHouseholderQr();
  if (qr.rank() < k) throw DomainError("residual_diagnostics: rank-deficient design");
  const VectorXd beta = qr.solve(y);

  MatrixXd resid = MatrixXd::Constant(ds.d(), ds.T(),
                                      std::numeric_limits<double>::quiet_NaN());
  for (const auto& [i, t] : cells) {
    resid(i, t) = ds.z(i, t) - ds.X[t].row(i).dot(beta);
  }

  ResidualDiagnostics out;
  const MatrixXd h = spatial_distance_matrix(ds.sites);
  for (int i = 0; i < ds.d(); ++i) {
    for (int j = i + 1; j < ds.d(); ++j) {
      std::vector<double> a, b;
      for (int t = 0; t < ds.T(); ++t) {
        if (ds.present(i, t) && ds.present(j, t)) {
          a.push_back(resid(i, t));
          b.push_back(resid(j, t));
        }
      }
      if (a.size() < 3) continue;
      double ma = 0.0, mb = 0.0;
      for (size_t s = 0; s < a.size(); ++s) {
        ma += a[s];
        mb += b[s];
      }
      ma /= a.size();
      mb /= b.size();
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      for (size_t s = 0; s < a.size(); ++s) {
        sab += (a[s] - ma) * (b[s] - mb);
        saa += (a[s] - ma) * (a[s] - ma);
        sbb += (b[s] - mb) * (b[s] - mb);
      }
      if (!(saa > 0.0) || !(sbb > 0.0)) continue;
      out.cloud.push_back({ds.sites[i].id, ds.sites[j].id, h(i, j),
                           sab / std::sqrt(saa * sbb),
                           static_cast<long>(a.size())});
    }
  }

  const int max_lag = 20;
  for (int i = 0; i < ds.d(); ++i) {
    double mean = 0.0;
    long n = 0;
    for (int t = 0; t < ds.T(); ++t) {
      if (ds.present(i, t)) {
        mean += resid(i, t);
        ++n;
      }
    }
    if (n < 3) continue;
    mean /= n;
    double denom = 0.0;
    for (int t = 0; t < ds.T(); ++t) {
      if (ds.present(i, t)) {
        denom += (resid(i, t) - mean) * (resid(i, t) - mean);
      }
    }
    if (!(denom > 0.0)) continue;
    for (int lag = 0; lag <= std::min(max_lag, ds.T() - 1); ++lag) {
      double s = 0.0;
      for (int t = 0; t + lag < ds.T(); ++t) {
        if (ds.present(i, t) && ds.present(i, t + lag)) {
          s += (resid(i, t) - mean) * (resid(i, t + lag) - mean);
        }
      }
      out.acf.push_back({ds.sites[i].id, lag, s / denom});
    }
  }
  return out;
}

std::vector<AicCandidate> aic_screen(
    const Dataset& ds, const std::vector<std::vector<int>>& candidates) {
  std::vector<std::pair<int, int>> cells;
  for (int t = 0; t < ds.T(); ++t) {
    for (int i = 0; i < ds.d(); ++i) {
      if (ds.present(i, t)) cells.emplace_back(i, t);
    }
  }
  const auto n = static_cast<long>(cells.size());

  std::vector<AicCandidate> out;
  for (const auto& cand : candidates) {
    AicCandidate row;
    row.covariates = cand;
    const int p_cols = static_cast<int>(cand.size()) + 1;  // + intercept
    for (int j : cand) {
      if (j < 1 || j >= ds.k()) {
        throw DomainError("aic_screen: covariate index " + std::to_string(j) +
                          " out of range");
      }
    }
    if (n <= p_cols + 1) throw DomainError("aic_screen: too few observations");
    MatrixXd x(n, p_cols);
    VectorXd y(n);
    for (long a = 0; a < n; ++a) {
      const auto [i, t] = cells[a];
      x(a, 0) = 1.0;
      for (size_t c = 0; c < cand.size(); ++c) {
        x(a, static_cast<Eigen::Index>(c + 1)) = ds.X[t](i, cand[c]);
      }
      y[a] = ds.z(i, t);
    }
    const auto qr = x.colPivHouseholderQr();
    if (qr.rank() < p_cols) {
      row.ok = false;
      row.aic = std::numeric_limits<double>::infinity();
      out.push_back(std::move(row));
      continue;
    }
    const VectorXd beta = qr.solve(y);
    const double rss = (y - x * beta).squaredNorm();
    const double sigma2 = rss / n;
    const double maxll =
        -0.5 * n * (std::log(2.0 * M_PI * sigma2) + 1.0);
    const int p = p_cols + 1;  // coefficients + variance
    row.aic = 2.0 * p - 2.0 * maxll;
    out.push_back(std::move(row));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AicCandidate& a, const AicCandidate& b) {
                     if (a.ok != b.ok) return a.ok;
                     return a.aic < b.aic;
                   });
  return out;
}

ComparisonReport comparison_report(
    const std::vector<ModelKind>& kinds,
    const std::map<std::string, std::vector<StationIndexRow>>& per_model_rows,
    const std::map<std::string, double>& est_sec_per_iter,
    const std::map<std::string, double>& pred_sec_per_iter,
    double nominal_coverage) {
  ComparisonReport rep;
  std::map<std::string, int> stars;
  if (per_model_rows.size() >= 2) {
    stars = star_rating(per_model_rows, nominal_coverage);
  }
  for (ModelKind kind : kinds) {
    const std::string name = to_string(kind);
    ModelReportRow row;
    row.kind = kind;
    row.meta = model_meta(kind);
    const auto et = est_sec_per_iter.find(name);
    const auto pt = pred_sec_per_iter.find(name);
    row.est_sec_per_iter = et != est_sec_per_iter.end() ? et->second : -1.0;
    row.pred_sec_per_iter = pt != pred_sec_per_iter.end() ? pt->second : -1.0;
    const auto it = per_model_rows.find(name);
    if (it == per_model_rows.end() || it->second.empty()) {
      rep.notes.push_back("model " + name + ": no validation rows");
    } else {
      std::map<std::string, std::vector<double>> cols;
      for (const auto& r : it->second) {
        cols["nmbf"].push_back(r.nmbf);
        cols["wnnr"].push_back(r.wnnr);
        cols["nnr"].push_back(r.nnr);
        cols["rmse"].push_back(r.rmse);
        cols["corr"].push_back(r.corr);
        cols["coverage"].push_back(r.coverage);
      }
      for (const auto& [k, v] : cols) {
        row.index_median[k] = median_of(v);
        row.index_iqr[k] = iqr_of(v);
      }
      const auto st = stars.find(name);
      row.stars = st != stars.end() ? st->second : 0;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

void save_indexes_csv(
    const std::map<std::string, std::vector<StationIndexRow>>& per_model_rows,
    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "model,site_id,n_days,nmbf,wnnr,nnr,rmse,corr,coverage\n";
  for (const auto& [model, rows] : per_model_rows) {
    for (const auto& r : rows) {
      out << model << ',' << r.site_id << ',' << r.n_days << ',' << fmt(r.nmbf)
          << ',' << fmt(r.wnnr) << ',' << fmt(r.nnr) << ',' << fmt(r.rmse)
          << ',' << fmt(r.corr) << ',' << fmt(r.coverage) << '\n';
    }
  }
}

namespace {
const char* kIndexOrder[] = {"nmbf", "wnnr", "nnr", "rmse", "corr", "coverage"};
}

void save_report_csv(const ComparisonReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "model,n_params_excl_beta,n_mh,biggest_matrix,stars";
  for (const char* idx : kIndexOrder) out << ',' << idx << "_median," << idx << "_iqr";
  out << '\n';
  for (const auto& r : report.rows) {
    out << to_string(r.kind) << ',' << r.meta.n_params_excl_beta << ','
        << r.meta.n_mh_params << ',' << to_string(r.meta.biggest_matrix) << ','
        << r.stars;
    for (const char* idx : kIndexOrder) {
      const auto m = r.index_median.find(idx);
      const auto q = r.index_iqr.find(idx);
      out << ',' << (m != r.index_median.end() ? fmt(m->second) : "");
      out << ',' << (q != r.index_iqr.end() ? fmt(q->second) : "");
    }
    out << '\n';
  }
}

void save_report_txt(const ComparisonReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "Model comparison (star rule " << report.star_rule << ")\n\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-28s", "Criteria");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%12s", to_string(r.kind).c_str());
    out << buf;
  }
  out << '\n';

  auto emit_row = [&](const std::string& label, auto getter) {
    std::snprintf(buf, sizeof(buf), "%-28s", label.c_str());
    out << buf;
    for (const auto& r : report.rows) {
      out << getter(r);
    }
    out << '\n';
  };
  emit_row("N. params (beta excl.)", [&](const ModelReportRow& r) {
    std::snprintf(buf, sizeof(buf), "%12d", r.meta.n_params_excl_beta);
    return std::string(buf);
  });
  emit_row("-- estimated by MH", [&](const ModelReportRow& r) {
    std::snprintf(buf, sizeof(buf), "%12d", r.meta.n_mh_params);
    return std::string(buf);
  });
  emit_row("Biggest matrix inverted", [&](const ModelReportRow& r) {
    std::snprintf(buf, sizeof(buf), "%12s", to_string(r.meta.biggest_matrix).c_str());
    return std::string(buf);
  });
  emit_row("Estimation time (s/iter)", [&](const ModelReportRow& r) {
    std::snprintf(buf, sizeof(buf), "%12.4g", r.est_sec_per_iter);
    return std::string(buf);
  });
  emit_row("Prediction time (s/iter)", [&](const ModelReportRow& r) {
    std::snprintf(buf, sizeof(buf), "%12.4g", r.pred_sec_per_iter);
    return std::string(buf);
  });
  for (const char* idx : kIndexOrder) {
    emit_row(std::string(idx) + " median", [&](const ModelReportRow& r) {
      const auto it = r.index_median.find(idx);
      std::snprintf(buf, sizeof(buf), "%12.4g",
                    it != r.index_median.end() ? it->second : std::nan(""));
      return std::string(buf);
    });
  }
  emit_row("Prediction capability", [&](const ModelReportRow& r) {
    std::string s(r.stars, '*');
    if (s.empty()) s = "-";
    std::snprintf(buf, sizeof(buf), "%12s", s.c_str());
    return std::string(buf);
  });
  if (!report.notes.empty()) {
    out << '\n';
    for (const auto& n : report.notes) out << "note: " << n << '\n';
  }
}

void save_diagnostics_cloud_csv(const ResidualDiagnostics& diag,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "site_i,site_j,distance_km,corr,n_days\n";
  for (const auto& r : diag.cloud) {
    out << r.site_i << ',' << r.site_j << ',' << fmt(r.distance_km) << ','
        << fmt(r.corr) << ',' << r.n_days << '\n';
  }
}

void save_diagnostics_acf_csv(const ResidualDiagnostics& diag,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "site_id,lag,acf\n";
  for (const auto& r : diag.acf) {
    out << r.site_id << ',' << r.lag << ',' << fmt(r.value) << '\n';
  }
}

}  // namespace stgm
