#include "wishart/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace wishart {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix JSON must be a nonempty array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) throw ConfigError("ragged matrix JSON");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Json spec_to_json(const WishartSpec& spec) {
  Json j;
  j["d"] = spec.d;
  j["x"] = mat_to_json(spec.x);
  j["alpha"] = spec.alpha;
  j["b"] = mat_to_json(spec.b);
  j["a"] = mat_to_json(spec.a);
  return j;
}

WishartSpec spec_from_json(const Json& j) {
  if (!j.contains("x") || !j.contains("alpha") || !j.contains("b"))
    throw ConfigError("spec JSON needs x, alpha, b");
  const Mat x = mat_from_json(j.at("x"));
  const Mat b = mat_from_json(j.at("b"));
  const int d = static_cast<int>(x.rows());
  const Mat a = j.contains("a") ? mat_from_json(j.at("a")) : Mat(Mat::Identity(d, d));
  WishartSpec spec(x, j.at("alpha").get<double>(), b, a);
  spec.validate();
  return spec;
}

Json stats_to_json(const PathStats& stats) {
  Json j;
  j["d"] = stats.d;
  j["T"] = stats.T;
  j["x0"] = mat_to_json(stats.x0);
  j["X_T"] = mat_to_json(stats.X_T);
  j["R_T"] = mat_to_json(stats.R_T);
  j["spd_path"] = stats.spd_path;
  if (stats.has_qinv) j["Qinv_T"] = stats.Qinv_T;
  if (stats.has_z) j["Z_T"] = stats.Z_T;
  if (stats.has_general) {
    j["ito_linv"] = mat_to_json(stats.ito_linv);
    j["op_int"] = mat_to_json(stats.op_int);
  }
  j["euler_fallbacks"] = stats.euler_fallbacks;
  return j;
}

Json estimate_to_json(const Estimate& est) {
  Json j;
  j["variant"] = variant_name(est.variant);
  j["b_hat"] = mat_to_json(est.b_hat);
  if (est.has_alpha) j["alpha_hat"] = est.alpha_hat;
  if (est.has_a) {
    j["a_hat"] = mat_to_json(est.a_hat);
    j["ata_projected"] = est.ata_projected;
  }
  j["residual"] = est.residual;
  j["cond"] = est.cond;
  return j;
}

void write_path_csv(const std::string& file, const SamplePath& path) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open for writing: " + file);
  const int d = static_cast<int>(path.states.empty() ? 0 : path.states[0].rows());
  out << "t";
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) out << ", X_" << i << j;
  out << "\n";
  for (long k = 0; k < path.times.size(); ++k) {
    out << format_double(path.times(k));
    const Mat& x = path.states[static_cast<std::size_t>(k)];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << ", " << format_double(x(i, j));
    out << "\n";
  }
}

SamplePath read_path_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open: " + file);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty path file: " + file);
  int cols = 1;
  for (char c : line)
    if (c == ',') ++cols;
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cols - 1))));
  if (d * d + 1 != cols) throw ConfigError("path header is not t + d*d state columns");

  SamplePath path;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != cols) throw ConfigError("ragged row in " + file);
    times.push_back(vals[0]);
    Mat x(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = vals[1 + i * d + j];
    path.states.push_back(std::move(x));
  }
  if (times.size() < 2) throw ConfigError("path needs at least two nodes: " + file);
  path.times = Eigen::Map<const Vec>(times.data(), static_cast<long>(times.size()));
  return path;
}

}  // namespace wishart
