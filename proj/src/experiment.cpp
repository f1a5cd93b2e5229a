#include "wishart/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "wishart/pathstats.hpp"
#include "wishart/sim.hpp"

namespace wishart {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool case_has_scalar(LimitCase kind) {
  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::JointErgodicGeneral:
    case LimitCase::JointZeroDrift:
    case LimitCase::JointZeroDriftCritical:
      return true;
    default:
      return false;
  }
}

bool estimator_fits_case(EstimatorVariant est, LimitCase kind) {
  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::JointZeroDrift:
    case LimitCase::JointZeroDriftCritical:
      return est == EstimatorVariant::JointSym;
    case LimitCase::JointErgodicGeneral:
      return est == EstimatorVariant::JointGen;
    case LimitCase::BErgodic:
    case LimitCase::BZeroDrift:
    case LimitCase::BExpanding:
      return est == EstimatorVariant::BSym;
    case LimitCase::BErgodicGeneral:
      return est == EstimatorVariant::BGen;
    case LimitCase::BDiagonal:
      return est == EstimatorVariant::BDiag;
  }
  return false;
}

std::string marginal_label(int i, int j) {
  return "b_" + std::to_string(i + 1) + std::to_string(j + 1);
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

HistogramRow make_histogram(const std::string& label, const std::vector<double>& samples,
                            int bins = 30) {
  HistogramRow row;
  row.label = label;
  const std::vector<double> v = finite_only(samples);
  if (v.empty()) return row;
  row.lo = *std::min_element(v.begin(), v.end());
  row.hi = *std::max_element(v.begin(), v.end());
  row.counts.assign(bins, 0);
  const double width = row.hi - row.lo;
  for (double x : v) {
    int k = width > 0 ? static_cast<int>((x - row.lo) / width * bins) : 0;
    k = std::clamp(k, 0, bins - 1);
    ++row.counts[k];
  }
  return row;
}

Json probe_json(const Probe& p) {
  Json j;
  j["c"] = mat_to_json(p.c);
  j["lambda"] = p.lambda;
  return j;
}

Probe probe_from_json(const Json& j) {
  Probe p;
  p.c = mat_from_json(j.at("c"));
  p.lambda = j.value("lambda", 0.0);
  return p;
}

}  // namespace

std::string required_scaling(LimitCase kind) {
  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::JointErgodicGeneral:
    case LimitCase::BErgodic:
    case LimitCase::BErgodicGeneral:
      return "sqrt-t";
    case LimitCase::JointZeroDrift:
    case LimitCase::JointZeroDriftCritical:
    case LimitCase::BZeroDrift:
      return "t";
    case LimitCase::BExpanding:
      return "exp";
    case LimitCase::BDiagonal:
      return "diagonal";
  }
  throw ConfigError("required_scaling: unknown case");
}

Mat scaling_matrix(LimitCase kind, const Mat& b, double T) {
  const int d = static_cast<int>(b.rows());
  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::JointErgodicGeneral:
    case LimitCase::BErgodic:
    case LimitCase::BErgodicGeneral:
      return Mat::Constant(d, d, std::sqrt(T));
    case LimitCase::JointZeroDrift:
    case LimitCase::JointZeroDriftCritical:
    case LimitCase::BZeroDrift:
      return Mat::Constant(d, d, T);
    case LimitCase::BExpanding:
      return Mat::Constant(d, d, std::exp(b(0, 0) * T));
    case LimitCase::BDiagonal: {
      Mat s(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double bi = b(i, i), bj = b(j, j);
          const double rate_i = bi < 0 ? std::sqrt(T) : (bi == 0 ? T : std::exp(bi * T));
          s(i, j) = i == j ? rate_i
                           : std::min({std::sqrt(T), bi > 0 ? std::exp(bi * T) : std::sqrt(T),
                                       bj > 0 ? std::exp(bj * T) : std::sqrt(T)});
        }
      return s;
    }
  }
  throw ConfigError("scaling_matrix: unknown case");
}

double scaling_scalar(LimitCase kind, double T) {
  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicGeneral:
      return std::sqrt(T);
    case LimitCase::JointErgodicCritical:
      return T;
    case LimitCase::JointZeroDrift:
      return std::sqrt(std::log(T));
    case LimitCase::JointZeroDriftCritical:
      return std::log(T);
    default:
      return kNaN;
  }
}

void ExperimentConfig::validate() const {
  spec.validate();
  if (M < 2) throw ConfigError("config: M >= 2");
  if (N < 2) throw ConfigError("config: N >= 2");
  if (!(T > 0)) throw ConfigError("config: T > 0");
  if (limit_samples < 2) throw ConfigError("config: limit_samples >= 2");
  if ((spec.a - Mat::Identity(spec.d, spec.d)).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("config: limit comparisons need a = I; use mse-table for general a");
  if (estimator == EstimatorVariant::Pipeline)
    throw ConfigError("config: the pipeline estimator is exercised by mse-table");
  if (!estimator_fits_case(estimator, limit_case))
    throw ConfigError("config: estimator '" + variant_name(estimator) +
                      "' does not match limit case '" + limit_case_name(limit_case) + "'");
  if (scaling != required_scaling(limit_case))
    throw ConfigError("config: case '" + limit_case_name(limit_case) + "' scales by '" +
                      required_scaling(limit_case) + "', got '" + scaling + "'");
  check_case_parameters(limit_case, spec);
  for (const Probe& p : probes)
    if (p.c.rows() != spec.d || p.c.cols() != spec.d)
      throw ConfigError("config: probe dimension mismatch");
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  ExperimentConfig c;
  c.spec = spec_from_json(j.at("spec"));
  c.T = j.at("T").get<double>();
  c.N = j.at("N").get<long>();
  c.M = j.at("M").get<int>();
  c.estimator = variant_from_name(j.at("estimator").get<std::string>());
  c.limit_case = limit_case_from_name(j.at("limit_case").get<std::string>());
  c.scaling = j.value("scaling", required_scaling(c.limit_case));
  c.seed = j.value("seed", std::uint64_t{0});
  c.out_dir = j.value("out_dir", std::string{});
  if (j.contains("probes"))
    for (const Json& pj : j.at("probes")) c.probes.push_back(probe_from_json(pj));
  c.threads = j.value("threads", 0);
  c.limit_samples = j.value("limit_samples", 4000);
  c.n_inner = j.value("n_inner", 128);
  c.moment_samples = j.value("moment_samples", 0);
  return c;
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["spec"] = spec_to_json(spec);
  j["T"] = T;
  j["N"] = N;
  j["M"] = M;
  j["estimator"] = variant_name(estimator);
  j["limit_case"] = limit_case_name(limit_case);
  j["scaling"] = scaling;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  Json probes_j = Json::array();
  for (const Probe& p : probes) probes_j.push_back(probe_json(p));
  j["probes"] = probes_j;
  j["threads"] = threads;
  j["limit_samples"] = limit_samples;
  j["n_inner"] = n_inner;
  j["moment_samples"] = moment_samples;
  return j;
}

double pairwise_sum(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::vector<double> cur = v;
  while (cur.size() > 1) {
    std::vector<double> next((cur.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < cur.size(); i += 2) next[i / 2] = cur[i] + cur[i + 1];
    if (cur.size() % 2) next.back() = cur.back();
    cur = std::move(next);
  }
  return cur[0];
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!failed.exchange(true)) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failed) std::rethrow_exception(first_error);
}

std::vector<Probe> default_probes(int d, bool with_scalar) {
  const double s = with_scalar ? 1.0 : 0.0;
  std::vector<Probe> probes;
  Mat c1 = 0.05 * Mat::Identity(d, d);
  probes.push_back({c1, 0.0});
  probes.push_back({(-c1).eval(), 0.10 * s});
  Mat c3 = Mat::Zero(d, d);
  if (d > 1) {
    c3(0, 1) = c3(1, 0) = 0.04;
  } else {
    c3(0, 0) = 0.04;
  }
  probes.push_back({c3, -0.10 * s});
  Mat c4 = Mat::Zero(d, d);
  c4(0, 0) = 0.06;
  if (d > 1) c4(1, 1) = -0.03;
  probes.push_back({c4, 0.05 * s});
  Mat c5 = with_scalar ? Mat(Mat::Zero(d, d)) : Mat(0.02 * Mat::Ones(d, d));
  probes.push_back({c5, 0.15 * s});
  return probes;
}

std::vector<LaplaceRow> empirical_laplace(const std::vector<std::pair<Mat, double>>& samples,
                                          const std::vector<Probe>& probes) {
  std::vector<LaplaceRow> rows;
  rows.reserve(probes.size());
  for (const Probe& p : probes) {
    LaplaceRow row;
    row.probe = p;
    std::vector<double> terms;
    terms.reserve(samples.size());
    bool reject = false;
    for (const auto& [mat, scalar] : samples) {
      double e = p.c.cwiseProduct(mat).sum();
      if (p.lambda != 0.0) e += p.lambda * scalar;
      if (!std::isfinite(e) || e > 700.0) {
        reject = true;
        break;
      }
      terms.push_back(std::exp(e));
    }
    if (reject || terms.empty()) {
      row.rejected = true;
      row.empirical = kNaN;
      row.se_empirical = kNaN;
    } else {
      const double n = static_cast<double>(terms.size());
      row.empirical = pairwise_sum(terms) / n;
      std::vector<double> sq(terms.size());
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const double dlt = terms[i] - row.empirical;
        sq[i] = dlt * dlt;
      }
      row.se_empirical = terms.size() > 1 ? std::sqrt(pairwise_sum(sq) / (n - 1) / n) : 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

KsRow ks_two_sample(std::string label, std::vector<double> x, std::vector<double> y) {
  KsRow row;
  row.label = std::move(label);
  x = finite_only(x);
  y = finite_only(y);
  if (x.empty() || y.empty()) {
    row.stat = kNaN;
    row.p_value = kNaN;
    return row;
  }
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(i / nx - j / ny));
  }
  row.stat = d;
  const double ne = std::sqrt(nx * ny / (nx + ny));
  const double lam = (ne + 0.12 + 0.11 / ne) * d;
  if (lam < 1e-9) {
    row.p_value = 1.0;
    return row;
  }
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  row.p_value = std::clamp(p, 0.0, 1.0);
  return row;
}

double ExperimentReport::failure_rate() const {
  return reps.empty() ? 0.0 : static_cast<double>(failures) / static_cast<double>(reps.size());
}

Json ExperimentReport::summary_json() const {
  Json j;
  j["config"] = config.to_json();
  j["replications"] = static_cast<int>(reps.size());
  j["failures"] = failures;
  j["failure_rate"] = failure_rate();

  Json laplace_j = Json::array();
  for (const LaplaceRow& row : laplace) {
    Json r;
    r["probe"] = probe_json(row.probe);
    r["empirical"] = row.empirical;
    r["se_empirical"] = row.se_empirical;
    r["theoretical"] = row.theoretical;
    r["se_theoretical"] = row.se_theoretical;
    r["z"] = row.z;
    r["rejected"] = row.rejected;
    laplace_j.push_back(std::move(r));
  }
  j["laplace"] = laplace_j;

  Json ks_j = Json::array();
  for (const KsRow& row : ks) {
    Json r;
    r["label"] = row.label;
    r["stat"] = row.stat;
    r["p_value"] = row.p_value;
    ks_j.push_back(std::move(r));
  }
  j["ks"] = ks_j;

  Json hist_j = Json::array();
  for (const HistogramRow& row : histograms) {
    Json r;
    r["label"] = row.label;
    r["lo"] = row.lo;
    r["hi"] = row.hi;
    r["counts"] = row.counts;
    hist_j.push_back(std::move(r));
  }
  j["histograms"] = hist_j;

  if (!mse_rows.empty()) {
    Json rows = Json::array();
    for (const MseRow& row : mse_rows) {
      Json r;
      r["N"] = row.N;
      r["mse_b_known"] = mat_to_json(row.mse_b_known);
      r["mse_b_est"] = mat_to_json(row.mse_b_est);
      r["mse_alpha_known"] = row.mse_alpha_known;
      r["mse_alpha_est"] = row.mse_alpha_est;
      r["a_err"] = row.a_err;
      r["failures"] = row.failures;
      rows.push_back(std::move(r));
    }
    j["mse"] = rows;
    Json fit;
    fit["slope"] = a_fit.slope;
    fit["intercept"] = a_fit.intercept;
    fit["valid"] = a_fit.valid;
    j["a_error_fit"] = fit;
  }
  return j;
}

namespace {

Estimate run_estimator(const ExperimentConfig& config, const PathStats& stats) {
  switch (config.estimator) {
    case EstimatorVariant::JointSym: return mle_joint_sym(stats);
    case EstimatorVariant::JointGen: return mle_joint_gen(stats);
    case EstimatorVariant::BSym: return mle_b_sym(stats, config.spec.alpha);
    case EstimatorVariant::BGen: return mle_b_gen(stats, config.spec.alpha);
    case EstimatorVariant::BDiag: return mle_b_diag(stats, config.spec.alpha);
    case EstimatorVariant::Pipeline: break;
  }
  throw ConfigError("run_estimator: unsupported estimator");
}

StatsOptions stats_options_for(EstimatorVariant est) {
  StatsOptions opts;
  opts.qcov = false;
  switch (est) {
    case EstimatorVariant::JointSym:
      opts.general_ops = false;
      break;
    case EstimatorVariant::JointGen:
      break;
    case EstimatorVariant::BSym:
    case EstimatorVariant::BDiag:
      opts.qinv_z = false;
      opts.general_ops = false;
      break;
    case EstimatorVariant::BGen:
      opts.qinv_z = false;
      break;
    case EstimatorVariant::Pipeline:
      break;
  }
  return opts;
}

void write_errors_csv(const std::string& file, const ExperimentReport& report) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open for writing: " + file);
  const int d = report.config.spec.d;
  out << "rep, ok";
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) out << ", b_hat_" << i << j;
  out << ", alpha_hat";
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) out << ", scaled_err_" << i << j;
  out << ", scaled_err_alpha\n";
  for (const RepRecord& r : report.reps) {
    out << r.rep << ", " << (r.ok ? 1 : 0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << ", " << format_double(r.ok ? r.b_hat(i, j) : kNaN);
    out << ", " << format_double(r.ok ? r.alpha_hat : kNaN);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << ", " << format_double(r.ok ? r.scaled_error(i, j) : kNaN);
    out << ", " << format_double(r.ok ? r.scaled_scalar : kNaN) << "\n";
  }
}

void write_laplace_csv(const std::string& file, const ExperimentReport& report) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open for writing: " + file);
  const int d = report.config.spec.d;
  out << "probe";
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) out << ", c_" << i << j;
  out << ", lambda, empirical, se_empirical, theoretical, se_theoretical, z, rejected\n";
  for (std::size_t k = 0; k < report.laplace.size(); ++k) {
    const LaplaceRow& row = report.laplace[k];
    out << k;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << ", " << format_double(row.probe.c(i, j));
    out << ", " << format_double(row.probe.lambda) << ", " << format_double(row.empirical)
        << ", " << format_double(row.se_empirical) << ", " << format_double(row.theoretical)
        << ", " << format_double(row.se_theoretical) << ", " << format_double(row.z) << ", "
        << (row.rejected ? 1 : 0) << "\n";
  }
}

void write_report_json(const std::string& file, const ExperimentReport& report) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot open for writing: " + file);
  out << report.summary_json().dump(2) << "\n";
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();

  ExperimentReport report;
  report.config = config;
  if (report.config.probes.empty())
    report.config.probes = default_probes(config.spec.d, case_has_scalar(config.limit_case));

  const int d = config.spec.d;
  const Mat scale_mat = scaling_matrix(config.limit_case, config.spec.b, config.T);
  const double scale_sca = scaling_scalar(config.limit_case, config.T);

  // Limit law; stream ids M, M+1, M+2 are reserved for it (replications use 0..M-1).
  ErgodicMoments moments;
  const ErgodicMoments* moments_ptr = nullptr;
  switch (config.limit_case) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::JointErgodicGeneral:
    case LimitCase::BErgodic:
    case LimitCase::BErgodicGeneral: {
      RngStream moment_rng(config.seed, static_cast<std::uint64_t>(config.M) + 2);
      moments = ergodic_moments(config.spec.alpha, config.spec.b, config.moment_samples,
                                config.moment_samples > 0 ? &moment_rng : nullptr);
      moments_ptr = &moments;
      break;
    }
    default:
      break;
  }
  const LimitLaw law = limit_law(config.limit_case, config.spec, moments_ptr, config.n_inner);

  report.reps.assign(config.M, RepRecord{});
  std::atomic<int> failures{0};
  parallel_for(config.M, config.threads, [&](int m) {
    RepRecord rec;
    rec.rep = m;
    try {
      RngStream rng(config.seed, static_cast<std::uint64_t>(m));
      const SamplePath path = path_sample(config.spec, config.T, config.N, rng);
      const PathStats stats = path_functionals(path, stats_options_for(config.estimator));
      const Estimate est = run_estimator(config, stats);
      rec.b_hat = est.b_hat;
      rec.alpha_hat = est.has_alpha ? est.alpha_hat : kNaN;
      rec.scaled_error = scale_mat.cwiseProduct(est.b_hat - config.spec.b);
      rec.scaled_scalar =
          est.has_alpha ? scale_sca * (est.alpha_hat - config.spec.alpha) : kNaN;
      rec.ok = true;
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
      rec.b_hat = Mat::Constant(d, d, kNaN);
      rec.scaled_error = Mat::Constant(d, d, kNaN);
      rec.alpha_hat = kNaN;
      rec.scaled_scalar = kNaN;
      failures.fetch_add(1);
    }
    report.reps[m] = std::move(rec);
  });
  report.failures = failures.load();

  std::vector<std::pair<Mat, double>> emp_samples;
  emp_samples.reserve(config.M);
  for (const RepRecord& r : report.reps)
    if (r.ok) emp_samples.emplace_back(r.scaled_error, r.scaled_scalar);

  // Draws of the limit law, for the KS columns and the Monte Carlo probe values.
  RngStream law_rng(config.seed, static_cast<std::uint64_t>(config.M));
  std::vector<std::pair<Mat, double>> law_samples;
  law_samples.reserve(config.limit_samples);
  for (int k = 0; k < config.limit_samples; ++k) law_samples.push_back(law.sample(law_rng));

  report.laplace = empirical_laplace(emp_samples, report.config.probes);
  RngStream probe_rng(config.seed, static_cast<std::uint64_t>(config.M) + 1);
  for (LaplaceRow& row : report.laplace) {
    const LimitLaw::Value v =
        law.laplace(row.probe.c, row.probe.lambda, &probe_rng, config.limit_samples);
    row.theoretical = v.value;
    row.se_theoretical = v.se;
    const double se = std::sqrt(row.se_empirical * row.se_empirical + v.se * v.se);
    row.z = se > 0 ? (row.empirical - row.theoretical) / se : kNaN;
  }

  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      std::vector<double> emp, lim;
      for (const auto& [mat, sca] : emp_samples) emp.push_back(mat(i, j));
      for (const auto& [mat, sca] : law_samples) lim.push_back(mat(i, j));
      report.ks.push_back(ks_two_sample(marginal_label(i, j), emp, lim));
      report.histograms.push_back(make_histogram(marginal_label(i, j), emp));
    }
  if (case_has_scalar(config.limit_case)) {
    std::vector<double> emp, lim;
    for (const auto& [mat, sca] : emp_samples) emp.push_back(sca);
    for (const auto& [mat, sca] : law_samples) lim.push_back(sca);
    report.ks.push_back(ks_two_sample("alpha", emp, lim));
    report.histograms.push_back(make_histogram("alpha", emp));
  }

  if (!config.out_dir.empty()) {
    ensure_dir(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    write_errors_csv((dir / "errors.csv").string(), report);
    write_laplace_csv((dir / "laplace_cmp.csv").string(), report);
    write_report_json((dir / "report.json").string(), report);
  }
  return report;
}

ExperimentReport mse_table(const ExperimentConfig& base, const std::vector<long>& n_grid) {
  base.spec.validate();
  if (base.M < 2) throw ConfigError("mse_table: M >= 2");
  if (n_grid.empty()) throw ConfigError("mse_table: empty N grid");
  if (!base.spec.is_transformable())
    throw NotTransformable("mse_table: pipeline needs a transformable spec");

  ExperimentReport report;
  report.config = base;
  const int d = base.spec.d;

  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const long n = n_grid[g];
    if (n < 2) throw ConfigError("mse_table: N >= 2");
    struct Cell {
      bool ok = false;
      Mat sq_known, sq_est;
      double sq_alpha_known = 0.0, sq_alpha_est = 0.0;
      double tr_a_sq = 0.0;
    };
    std::vector<Cell> cells(base.M);
    parallel_for(base.M, base.threads, [&](int m) {
      Cell cell;
      try {
        RngStream rng(base.seed, g * static_cast<std::uint64_t>(base.M) + m);
        const SamplePath path = path_sample(base.spec, base.T, n, rng);
        const Estimate known = full_pipeline(path, base.spec.a);
        const Estimate est = full_pipeline(path);
        const Mat dk = known.b_hat - base.spec.b;
        const Mat de = est.b_hat - base.spec.b;
        cell.sq_known = dk.cwiseProduct(dk);
        cell.sq_est = de.cwiseProduct(de);
        cell.sq_alpha_known = (known.alpha_hat - base.spec.alpha) * (known.alpha_hat - base.spec.alpha);
        cell.sq_alpha_est = (est.alpha_hat - base.spec.alpha) * (est.alpha_hat - base.spec.alpha);
        const Mat da = est.a_hat - base.spec.a;
        cell.tr_a_sq = (da.transpose() * da).trace();
        cell.ok = true;
      } catch (const Error&) {
        cell.ok = false;
      }
      cells[m] = std::move(cell);
    });

    MseRow row;
    row.N = n;
    row.mse_b_known = Mat::Zero(d, d);
    row.mse_b_est = Mat::Zero(d, d);
    std::vector<double> ak, ae, aa;
    std::vector<Mat> bk, be;
    int ok_count = 0;
    for (const Cell& c : cells)
      if (c.ok) ++ok_count;
    row.failures = base.M - ok_count;
    if (ok_count > 0) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          std::vector<double> vk, ve;
          for (const Cell& c : cells)
            if (c.ok) {
              vk.push_back(c.sq_known(i, j));
              ve.push_back(c.sq_est(i, j));
            }
          row.mse_b_known(i, j) = pairwise_sum(vk) / ok_count;
          row.mse_b_est(i, j) = pairwise_sum(ve) / ok_count;
        }
      for (const Cell& c : cells)
        if (c.ok) {
          ak.push_back(c.sq_alpha_known);
          ae.push_back(c.sq_alpha_est);
          aa.push_back(c.tr_a_sq);
        }
      row.mse_alpha_known = pairwise_sum(ak) / ok_count;
      row.mse_alpha_est = pairwise_sum(ae) / ok_count;
      row.a_err = std::sqrt(pairwise_sum(aa) / ok_count);
    }
    report.failures += row.failures;
    report.mse_rows.push_back(std::move(row));
  }

  // log-log fit of the a-error against N
  std::vector<double> lx, ly;
  for (const MseRow& row : report.mse_rows)
    if (row.a_err > 0) {
      lx.push_back(std::log(static_cast<double>(row.N)));
      ly.push_back(std::log(row.a_err));
    }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom > 0) {
      report.a_fit.slope = (n * sxy - sx * sy) / denom;
      report.a_fit.intercept = (sy - report.a_fit.slope * sx) / n;
      report.a_fit.valid = true;
    }
  }

  if (!base.out_dir.empty()) {
    ensure_dir(base.out_dir);
    const std::filesystem::path dir(base.out_dir);
    std::ofstream out((dir / "mse_table.csv").string());
    if (!out) throw ConfigError("cannot open for writing: " + (dir / "mse_table.csv").string());
    out << "N";
    for (int i = 1; i <= d; ++i)
      for (int j = 1; j <= d; ++j) out << ", mse_b" << i << j << "_known";
    out << ", mse_alpha_known";
    for (int i = 1; i <= d; ++i)
      for (int j = 1; j <= d; ++j) out << ", mse_b" << i << j << "_est";
    out << ", mse_alpha_est, a_err, failures\n";
    for (const MseRow& row : report.mse_rows) {
      out << row.N;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << ", " << format_double(row.mse_b_known(i, j));
      out << ", " << format_double(row.mse_alpha_known);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << ", " << format_double(row.mse_b_est(i, j));
      out << ", " << format_double(row.mse_alpha_est) << ", " << format_double(row.a_err)
          << ", " << row.failures << "\n";
    }
    out.close();
    write_report_json((dir / "report.json").string(), report);
  }
  return report;
}

}  // namespace wishart
