#pragma once

#include <map>
#include <string>
#include <vector>

#include "stgm/dataset.hpp"
#include "stgm/models.hpp"

namespace stgm {

// Normalised mean bias factor: symmetric around perfect prediction, branch
// chosen by comparing the series means.
double nmbf(const std::vector<double>& observed,
            const std::vector<double>& predicted);

// Normalised-ratio mean square errors, weighted (by s_t = z_t / mean z) and
// unweighted, with k_t = exp(-|ln(pred_t / z_t)|).
double wnnr(const std::vector<double>& observed,
            const std::vector<double>& predicted);
double nnr(const std::vector<double>& observed,
           const std::vector<double>& predicted);

struct PointIndexes {
  double rmse = 0.0;
  double corr = 0.0;
  double coverage = 0.0;
};

// RMSE and Pearson correlation of point predictions plus observed coverage
// of the [lo, hi] intervals.
PointIndexes rmse_corr_coverage(const std::vector<double>& observed,
                                const std::vector<double>& predicted,
                                const std::vector<double>& lo,
                                const std::vector<double>& hi);

struct StationIndexRow {
  std::string site_id;
  long n_days = 0;  // pairwise-complete overlap used
  double nmbf = 0.0;
  double wnnr = 0.0;
  double nnr = 0.0;
  double rmse = 0.0;
  double corr = 0.0;
  double coverage = 0.0;
};

// Deterministic proxy for the paper's boxplot-based star assignment
// (rule id "rank-tertile-v1"): per index, rank models by the median across
// stations (|NMBF|, WNNR, NNR, RMSE ascending; corr descending;
// |coverage - nominal| ascending), average the six ranks, and map
// average-rank tertiles to 3/2/1 stars; ties share the better star.
std::map<std::string, int> star_rating(
    const std::map<std::string, std::vector<StationIndexRow>>& per_model_rows,
    double nominal_coverage = 0.95);

struct ResidualDiagnostics {
  struct CloudRow {
    std::string site_i, site_j;
    double distance_km = 0.0;
    double corr = 0.0;
    long n_days = 0;
  };
  struct AcfRow {
    std::string site_id;
    int lag = 0;
    double value = 0.0;
  };
  std::vector<CloudRow> cloud;
  std::vector<AcfRow> acf;  // lags 0..20 per station
};

// Pooled OLS of z on X over all present cells, then the residual spatial
// correlation cloud and per-station residual autocorrelations.
ResidualDiagnostics residual_diagnostics(const Dataset& ds);

struct AicCandidate {
  std::vector<int> covariates;  // non-intercept column indices
  double aic = 0.0;
  bool ok = true;  // false when the design is rank deficient
};

// AIC = 2p - 2 max log likelihood under iid Gaussian errors per candidate
// covariate set (intercept always included); returned ascending by AIC with
// rank-deficient candidates flagged and placed last.
std::vector<AicCandidate> aic_screen(
    const Dataset& ds, const std::vector<std::vector<int>>& candidates);

struct ModelReportRow {
  ModelKind kind = ModelKind::A1;
  ModelMeta meta;
  double est_sec_per_iter = 0.0;
  double pred_sec_per_iter = 0.0;
  std::map<std::string, double> index_median;  // keyed by index name
  std::map<std::string, double> index_iqr;
  int stars = 0;
};

struct ComparisonReport {
  std::vector<ModelReportRow> rows;
  std::string star_rule = "rank-tertile-v1";
  std::vector<std::string> notes;  // per-model failures, annotations
};

ComparisonReport comparison_report(
    const std::vector<ModelKind>& kinds,
    const std::map<std::string, std::vector<StationIndexRow>>& per_model_rows,
    const std::map<std::string, double>& est_sec_per_iter,
    const std::map<std::string, double>& pred_sec_per_iter,
    double nominal_coverage = 0.95);

void save_indexes_csv(
    const std::map<std::string, std::vector<StationIndexRow>>& per_model_rows,
    const std::string& path);

// report.csv carries the deterministic columns only; the measured timings go
// to the human-readable report.txt (and timing.json upstream) so that
// identical (config, seed) runs produce byte-identical CSV output.
void save_report_csv(const ComparisonReport& report, const std::string& path);
void save_report_txt(const ComparisonReport& report, const std::string& path);

void save_diagnostics_cloud_csv(const ResidualDiagnostics& diag,
                                const std::string& path);
void save_diagnostics_acf_csv(const ResidualDiagnostics& diag,
                              const std::string& path);

}  // namespace stgm
