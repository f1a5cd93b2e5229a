#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "wishart/io.hpp"
#include "wishart/limits.hpp"
#include "wishart/mle.hpp"
#include "wishart/types.hpp"

namespace wishart {

struct Probe {
  Mat c;
  double lambda = 0.0;
};

// A Monte Carlo run: M independent paths of horizon T on an N-step grid,
// an estimator, and the limit law its scaled errors are compared against.
struct ExperimentConfig {
  WishartSpec spec;
  double T = 0.0;
  long N = 0;
  int M = 0;
  EstimatorVariant estimator = EstimatorVariant::JointSym;
  LimitCase limit_case = LimitCase::JointErgodic;
  std::string scaling;  // "sqrt-t", "t", "exp" or "diagonal"; must match the case
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<Probe> probes;  // empty: a default panel of five
  int threads = 0;            // 0: all hardware threads
  int limit_samples = 4000;   // draws of the limit law for KS and Monte Carlo probes
  int n_inner = 128;          // unit-horizon grid of the zero-drift limit sampler
  int moment_samples = 0;     // stationary draws when the case needs sampled operators

  static ExperimentConfig from_json(const Json& j);
  Json to_json() const;
  void validate() const;
};

// Scaling tag required by a limit case, and the per-horizon factors:
// matrix part and (for the joint cases) scalar part.
std::string required_scaling(LimitCase kind);
Mat scaling_matrix(LimitCase kind, const Mat& b, double T);
double scaling_scalar(LimitCase kind, double T);

struct RepRecord {
  int rep = 0;
  bool ok = false;
  std::string error;
  Mat b_hat;
  double alpha_hat = 0.0;
  Mat scaled_error;           // elementwise scaled b_hat - b
  double scaled_scalar = 0.0; // scaled alpha_hat - alpha, NaN when absent
};

struct LaplaceRow {
  Probe probe;
  double empirical = 0.0;
  double se_empirical = 0.0;
  double theoretical = 0.0;
  double se_theoretical = 0.0;
  double z = 0.0;
  bool rejected = false;  // overflow guard tripped
};

struct KsRow {
  std::string label;
  double stat = 0.0;
  double p_value = 0.0;
};

struct HistogramRow {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<long> counts;
};

struct MseRow {
  long N = 0;
  Mat mse_b_known, mse_b_est;  // entrywise mean squared errors
  double mse_alpha_known = 0.0;
  double mse_alpha_est = 0.0;
  double a_err = 0.0;  // sqrt(mean tr((a_hat - a)^2))
  int failures = 0;
};

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool valid = false;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RepRecord> reps;
  std::vector<LaplaceRow> laplace;
  std::vector<KsRow> ks;
  std::vector<HistogramRow> histograms;
  std::vector<MseRow> mse_rows;
  RegressionFit a_fit;
  int failures = 0;

  double failure_rate() const;
  Json summary_json() const;
};

// Simulates replication m with stream id m, estimates, scales the errors, and
// compares against the configured limit law. Writes errors.csv, laplace_cmp.csv
// and report.json into out_dir when it is nonempty.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Table of estimator MSEs over a grid of step counts, running the estimation
// pipeline on each path twice: with the true a and with the estimated one.
// Writes mse_table.csv and report.json into out_dir when it is nonempty.
ExperimentReport mse_table(const ExperimentConfig& base, const std::vector<long>& n_grid);

// Mean of exp(<c, mat>_F + lambda * scalar) per probe with its standard error.
// A probe is rejected (NaN row) when any exponent exceeds 700.
std::vector<LaplaceRow> empirical_laplace(const std::vector<std::pair<Mat, double>>& samples,
                                          const std::vector<Probe>& probes);

std::vector<Probe> default_probes(int d, bool with_scalar);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
KsRow ks_two_sample(std::string label, std::vector<double> x, std::vector<double> y);

// Sum in pairwise (cascade) order, fixed by index.
double pairwise_sum(const std::vector<double>& v);

// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace wishart
