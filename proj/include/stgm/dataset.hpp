#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace stgm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Site {
  std::string id;
  double x_km = 0.0;       // UTMX, km
  double y_km = 0.0;       // UTMY, km
  double altitude_m = 0.0;
};

enum class Scale { Natural, Log };

// Observations z(s_i, t) with a missingness mask, plus the covariate array
// X(s_i, t). The first covariate is always the intercept column of ones.
// Missing cells never enter a likelihood; they are excluded by subsetting.
struct Dataset {
  std::vector<Site> sites;
  int n_days = 0;
  std::vector<std::string> covariate_names;  // size k, [0] == "intercept"
  std::vector<MatrixXd> X;                   // per day: d x k
  MatrixXd z;                                // d x T, NaN at missing cells
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> present;  // d x T
  Scale scale = Scale::Natural;

  int d() const { return static_cast<int>(sites.size()); }
  int T() const { return n_days; }
  int k() const { return static_cast<int>(covariate_names.size()); }
  long n_present() const { return present.count(); }
  std::vector<int> present_rows(int day) const;  // 0-based day index
  int site_index(const std::string& id) const;   // -1 if unknown

  void validate() const;  // shape and invariant checks
};

struct StandardizationRecord {
  std::vector<double> mean;  // size k; intercept entry 0
  std::vector<double> sd;    // size k; intercept entry 1

  VectorXd apply(const VectorXd& raw) const;
};

// Reads the three-file CSV schema:
//   sites.csv:         id,utmx_km,utmy_km,altitude_m
//   observations.csv:  site_id,day,value          (absent rows are missing)
//   covariates.csv:    site_id,day,<name1>,...    (intercept implicit)
// Any station whose missing fraction exceeds missing_cap is rejected.
Dataset load_dataset(const std::string& sites_path,
                     const std::string& observations_path,
                     const std::string& covariates_path,
                     double missing_cap = 0.20);

void save_dataset_csv(const Dataset& ds, const std::string& sites_path,
                      const std::string& observations_path,
                      const std::string& covariates_path);

// z <- ln z elementwise on present cells; requires natural scale and z > 0.
Dataset log_transform(const Dataset& ds);

// Center/scale every non-intercept covariate to mean 0, sd 1 over present
// cells (sample sd, n-1 divisor). The record reproduces the transform at
// prediction locations.
std::pair<Dataset, StandardizationRecord> standardize(const Dataset& ds);

MatrixXd spatial_distance_matrix(const std::vector<Site>& sites);

// Disjoint (train, holdout) partition by site id; covariates kept in both.
std::pair<Dataset, Dataset> split_validation(
    const Dataset& ds, const std::vector<std::string>& holdout_ids);

}  // namespace stgm
