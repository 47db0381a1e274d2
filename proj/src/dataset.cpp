#include "stgm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "stgm/errors.hpp"

namespace stgm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim whitespace and CR
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& file, int line_no) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(line_no) +
                     ": cannot parse number '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& file, int line_no) {
  try {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(line_no) +
                     ": cannot parse integer '" + s + "'");
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::vector<int> Dataset::present_rows(int day) const {
  std::vector<int> rows;
  for (int i = 0; i < d(); ++i) {
    if (present(i, day)) rows.push_back(i);
  }
  return rows;
}

int Dataset::site_index(const std::string& id) const {
  for (int i = 0; i < d(); ++i) {
    if (sites[i].id == id) return i;
  }
  return -1;
}

void Dataset::validate() const {
  if (d() < 1 || n_days < 1 || k() < 1) {
    throw SchemaError("dataset: needs at least one site, day and covariate");
  }
  if (covariate_names.front() != "intercept") {
    throw SchemaError("dataset: first covariate must be the intercept");
  }
  if (static_cast<int>(X.size()) != n_days) throw SchemaError("dataset: X day count");
  for (const auto& xt : X) {
    if (xt.rows() != d() || xt.cols() != k()) throw SchemaError("dataset: X shape");
    if ((xt.col(0).array() != 1.0).any()) {
      throw SchemaError("dataset: intercept column must be all ones");
    }
  }
  if (z.rows() != d() || z.cols() != n_days) throw SchemaError("dataset: z shape");
  if (present.rows() != d() || present.cols() != n_days) {
    throw SchemaError("dataset: mask shape");
  }
  std::set<std::string> ids;
  for (const auto& s : sites) {
    if (!std::isfinite(s.x_km) || !std::isfinite(s.y_km)) {
      throw SchemaError("dataset: non-finite coordinates for site " + s.id);
    }
    if (!ids.insert(s.id).second) {
      throw SchemaError("dataset: duplicate site id " + s.id);
    }
  }
}

VectorXd StandardizationRecord::apply(const VectorXd& raw) const {
  if (raw.size() != static_cast<Eigen::Index>(mean.size())) {
    throw DomainError("standardization record: covariate length mismatch");
  }
  VectorXd out(raw.size());
  for (Eigen::Index j = 0; j < raw.size(); ++j) {
    out[j] = (raw[j] - mean[j]) / sd[j];
  }
  return out;
}

Dataset load_dataset(const std::string& sites_path,
                     const std::string& observations_path,
                     const std::string& covariates_path, double missing_cap) {
  Dataset ds;

  // sites.csv
  {
    const auto lines = read_lines(sites_path);
    if (lines.empty() || split_csv_line(lines[0]) !=
        std::vector<std::string>{"id", "utmx_km", "utmy_km", "altitude_m"}) {
      throw SchemaError(sites_path + ": expected header id,utmx_km,utmy_km,altitude_m");
    }
    for (size_t n = 1; n < lines.size(); ++n) {
      if (lines[n].empty()) continue;
      const auto f = split_csv_line(lines[n]);
      if (f.size() != 4) {
        throw ParseError(sites_path + ":" + std::to_string(n + 1) + ": expected 4 fields");
      }
      Site s;
      s.id = f[0];
      s.x_km = parse_double(f[1], sites_path, static_cast<int>(n + 1));
      s.y_km = parse_double(f[2], sites_path, static_cast<int>(n + 1));
      s.altitude_m = parse_double(f[3], sites_path, static_cast<int>(n + 1));
      ds.sites.push_back(std::move(s));
    }
  }
  if (ds.sites.empty()) throw SchemaError(sites_path + ": no sites");

  // covariates.csv defines the day range and k
  std::map<std::pair<int, int>, VectorXd> covs;  // (site, day0) -> values
  {
    const auto lines = read_lines(covariates_path);
    if (lines.empty()) throw SchemaError(covariates_path + ": empty file");
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 2 || header[0] != "site_id" || header[1] != "day") {
      throw SchemaError(covariates_path + ": expected header site_id,day,<names...>");
    }
    ds.covariate_names.push_back("intercept");
    for (size_t j = 2; j < header.size(); ++j) ds.covariate_names.push_back(header[j]);
    int max_day = 0;
    for (size_t n = 1; n < lines.size(); ++n) {
      if (lines[n].empty()) continue;
      const auto f = split_csv_line(lines[n]);
      if (f.size() != header.size()) {
        throw ParseError(covariates_path + ":" + std::to_string(n + 1) + ": field count");
      }
      const int si = [&] {
        for (size_t i = 0; i < ds.sites.size(); ++i) {
          if (ds.sites[i].id == f[0]) return static_cast<int>(i);
        }
        throw SchemaError(covariates_path + ":" + std::to_string(n + 1) +
                          ": unknown site id '" + f[0] + "'");
      }();
      const int day = parse_int(f[1], covariates_path, static_cast<int>(n + 1));
      if (day < 1) {
        throw SchemaError(covariates_path + ":" + std::to_string(n + 1) + ": day must be >= 1");
      }
      max_day = std::max(max_day, day);
      VectorXd x(ds.covariate_names.size());
      x[0] = 1.0;
      for (size_t j = 2; j < f.size(); ++j) {
        x[static_cast<Eigen::Index>(j - 1)] =
            parse_double(f[j], covariates_path, static_cast<int>(n + 1));
      }
      if (!covs.emplace(std::make_pair(si, day - 1), std::move(x)).second) {
        throw SchemaError(covariates_path + ":" + std::to_string(n + 1) +
                          ": duplicate (site,day) " + f[0] + "," + f[1]);
      }
    }
    ds.n_days = max_day;
  }
  if (ds.n_days < 1) throw SchemaError(covariates_path + ": no data rows");

  const int d = ds.d();
  const int k = ds.k();
  ds.X.assign(ds.n_days, MatrixXd::Zero(d, k));
  for (int t = 0; t < ds.n_days; ++t) {
    for (int i = 0; i < d; ++i) {
      const auto it = covs.find({i, t});
      if (it == covs.end()) {
        throw SchemaError(covariates_path + ": missing covariate row for site " +
                          ds.sites[i].id + " day " + std::to_string(t + 1));
      }
      ds.X[t].row(i) = it->second.transpose();
    }
  }

  // observations.csv
  ds.z = MatrixXd::Constant(d, ds.n_days, kNaN);
  ds.present.setConstant(d, ds.n_days, false);
  {
    const auto lines = read_lines(observations_path);
    if (lines.empty() || split_csv_line(lines[0]) !=
        std::vector<std::string>{"site_id", "day", "value"}) {
      throw SchemaError(observations_path + ": expected header site_id,day,value");
    }
    for (size_t n = 1; n < lines.size(); ++n) {
      if (lines[n].empty()) continue;
      const auto f = split_csv_line(lines[n]);
      if (f.size() != 3) {
        throw ParseError(observations_path + ":" + std::to_string(n + 1) + ": expected 3 fields");
      }
      const int si = ds.site_index(f[0]);
      if (si < 0) {
        throw SchemaError(observations_path + ":" + std::to_string(n + 1) +
                          ": unknown site id '" + f[0] + "'");
      }
      const int day = parse_int(f[1], observations_path, static_cast<int>(n + 1));
      if (day < 1 || day > ds.n_days) {
        throw SchemaError(observations_path + ":" + std::to_string(n + 1) +
                          ": day " + f[1] + " outside 1.." + std::to_string(ds.n_days));
      }
      if (ds.present(si, day - 1)) {
        throw SchemaError(observations_path + ":" + std::to_string(n + 1) +
                          ": duplicate (site,day) " + f[0] + "," + f[1]);
      }
      ds.z(si, day - 1) = parse_double(f[2], observations_path, static_cast<int>(n + 1));
      ds.present(si, day - 1) = true;
    }
  }

  for (int i = 0; i < d; ++i) {
    const double missing_frac =
        1.0 - static_cast<double>(ds.present.row(i).count()) / ds.n_days;
    if (missing_frac > missing_cap) {
      throw SchemaError("station " + ds.sites[i].id + " has missing fraction " +
                        std::to_string(missing_frac) + " above cap " +
                        std::to_string(missing_cap));
    }
  }

  ds.scale = Scale::Natural;
  ds.validate();
  return ds;
}

void save_dataset_csv(const Dataset& ds, const std::string& sites_path,
                      const std::string& observations_path,
                      const std::string& covariates_path) {
  {
    std::ofstream out(sites_path);
    if (!out) throw ParseError("cannot write " + sites_path);
    out << "id,utmx_km,utmy_km,altitude_m\n";
    for (const auto& s : ds.sites) {
      out << s.id << ',' << fmt(s.x_km) << ',' << fmt(s.y_km) << ','
          << fmt(s.altitude_m) << '\n';
    }
  }
  {
    std::ofstream out(observations_path);
    if (!out) throw ParseError("cannot write " + observations_path);
    out << "site_id,day,value\n";
    for (int t = 0; t < ds.T(); ++t) {
      for (int i = 0; i < ds.d(); ++i) {
        if (!ds.present(i, t)) continue;
        const double v = ds.scale == Scale::Log ? std::exp(ds.z(i, t)) : ds.z(i, t);
        out << ds.sites[i].id << ',' << (t + 1) << ',' << fmt(v) << '\n';
      }
    }
  }
  {
    std::ofstream out(covariates_path);
    if (!out) throw ParseError("cannot write " + covariates_path);
    out << "site_id,day";
    for (int j = 1; j < ds.k(); ++j) out << ',' << ds.covariate_names[j];
    out << '\n';
    for (int t = 0; t < ds.T(); ++t) {
      for (int i = 0; i < ds.d(); ++i) {
        out << ds.sites[i].id << ',' << (t + 1);
        for (int j = 1; j < ds.k(); ++j) out << ',' << fmt(ds.X[t](i, j));
        out << '\n';
      }
    }
  }
}

Dataset log_transform(const Dataset& ds) {
  if (ds.scale != Scale::Natural) {
    throw DomainError("log_transform: dataset already on log scale");
  }
  Dataset out = ds;
  for (int t = 0; t < ds.T(); ++t) {
    for (int i = 0; i < ds.d(); ++i) {
      if (!ds.present(i, t)) continue;
      if (!(ds.z(i, t) > 0.0)) {
        throw DomainError("log_transform: nonpositive observation at site " +
                          ds.sites[i].id + " day " + std::to_string(t + 1));
      }
      out.z(i, t) = std::log(ds.z(i, t));
    }
  }
  out.scale = Scale::Log;
  return out;
}

std::pair<Dataset, StandardizationRecord> standardize(const Dataset& ds) {
  const int k = ds.k();
  StandardizationRecord rec;
  rec.mean.assign(k, 0.0);
  rec.sd.assign(k, 1.0);
  Dataset out = ds;

  const long n = static_cast<long>(ds.d()) * ds.T();
  for (int j = 1; j < k; ++j) {
    double sum = 0.0;
    for (int t = 0; t < ds.T(); ++t) sum += ds.X[t].col(j).sum();
    const double mean = sum / n;
    double ss = 0.0;
    for (int t = 0; t < ds.T(); ++t) {
      ss += (ds.X[t].col(j).array() - mean).square().sum();
    }
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    if (!(sd > 0.0)) {
      throw DomainError("standardize: covariate '" + ds.covariate_names[j] +
                        "' has zero variance");
    }
    rec.mean[j] = mean;
    rec.sd[j] = sd;
    for (int t = 0; t < ds.T(); ++t) {
      out.X[t].col(j) = (ds.X[t].col(j).array() - mean) / sd;
    }
  }
  return {std::move(out), std::move(rec)};
}

MatrixXd spatial_distance_matrix(const std::vector<Site>& sites) {
  if (sites.empty()) throw DomainError("spatial_distance_matrix: no sites");
  const int d = static_cast<int>(sites.size());
  MatrixXd h = MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      const double dx = sites[i].x_km - sites[j].x_km;
      const double dy = sites[i].y_km - sites[j].y_km;
      const double dist = std::hypot(dx, dy);
      h(i, j) = dist;
      h(j, i) = dist;
    }
  }
  return h;
}

std::pair<Dataset, Dataset> split_validation(
    const Dataset& ds, const std::vector<std::string>& holdout_ids) {
  std::set<std::string> hold(holdout_ids.begin(), holdout_ids.end());
  for (const auto& id : hold) {
    if (ds.site_index(id) < 0) {
      throw DomainError("split_validation: unknown site id '" + id + "'");
    }
  }
  std::vector<int> train_rows, hold_rows;
  for (int i = 0; i < ds.d(); ++i) {
    (hold.count(ds.sites[i].id) ? hold_rows : train_rows).push_back(i);
  }
  if (!hold.empty() && train_rows.size() < 2) {
    throw DomainError("split_validation: fewer than 2 training sites remain");
  }

  auto subset = [&](const std::vector<int>& rows) {
    Dataset sub;
    sub.n_days = ds.n_days;
    sub.covariate_names = ds.covariate_names;
    sub.scale = ds.scale;
    for (int r : rows) sub.sites.push_back(ds.sites[r]);
    const int nd = static_cast<int>(rows.size());
    sub.z = MatrixXd::Constant(nd, ds.T(), kNaN);
    sub.present.setConstant(nd, ds.T(), false);
    sub.X.assign(ds.T(), MatrixXd::Zero(nd, ds.k()));
    for (int t = 0; t < ds.T(); ++t) {
      for (int r = 0; r < nd; ++r) {
        sub.X[t].row(r) = ds.X[t].row(rows[r]);
        sub.z(r, t) = ds.z(rows[r], t);
        sub.present(r, t) = ds.present(rows[r], t);
      }
    }
    return sub;
  };

  return {subset(train_rows), subset(hold_rows)};
}

}  // namespace stgm
