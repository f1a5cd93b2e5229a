#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wishart/experiment.hpp"
#include "wishart/io.hpp"
#include "wishart/laplace.hpp"
#include "wishart/mle.hpp"
#include "wishart/pathstats.hpp"
#include "wishart/sim.hpp"

namespace {

using namespace wishart;

Json load_json(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open: " + file);
  return Json::parse(in);
}

Mat load_mat(const std::string& file) { return mat_from_json(load_json(file)); }

int cmd_simulate(const std::string& spec_file, double T, long N, std::uint64_t seed,
                 const std::string& out) {
  const WishartSpec spec = spec_from_json(load_json(spec_file));
  RngStream rng(seed, 0);
  const SamplePath path = path_sample(spec, T, static_cast<int>(N), rng);
  write_path_csv(out, path);
  std::fprintf(stderr, "wrote %zu nodes to %s (euler fallbacks: %d)\n", path.states.size(),
               out.c_str(), path.euler_fallbacks);
  return 0;
}

int cmd_estimate(const std::string& path_file, const std::string& variant,
                 std::optional<double> alpha, const std::string& a_file,
                 const std::string& out) {
  const SamplePath path = read_path_csv(path_file);
  const EstimatorVariant v = variant_from_name(variant);

  Estimate est;
  if (v == EstimatorVariant::Pipeline) {
    est = a_file.empty() ? full_pipeline(path) : full_pipeline(path, load_mat(a_file));
  } else {
    const PathStats stats = path_functionals(path);
    switch (v) {
      case EstimatorVariant::JointSym: est = mle_joint_sym(stats); break;
      case EstimatorVariant::JointGen: est = mle_joint_gen(stats); break;
      case EstimatorVariant::BSym:
      case EstimatorVariant::BGen:
      case EstimatorVariant::BDiag: {
        if (!alpha) throw ConfigError("estimate: variant '" + variant + "' needs --alpha");
        if (v == EstimatorVariant::BSym) est = mle_b_sym(stats, *alpha);
        else if (v == EstimatorVariant::BGen) est = mle_b_gen(stats, *alpha);
        else est = mle_b_diag(stats, *alpha);
        break;
      }
      default: throw ConfigError("estimate: unsupported variant");
    }
  }
  const std::string text = estimate_to_json(est).dump(2);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream o(out);
    if (!o) throw ConfigError("cannot open for writing: " + out);
    o << text << "\n";
  }
  return 0;
}

int cmd_laplace(const std::string& spec_file, const std::string& v_file,
                const std::string& w_file, double t, bool oracle, bool stationary) {
  const WishartSpec spec = spec_from_json(load_json(spec_file));
  const Mat v = v_file.empty() ? Mat(Mat::Zero(spec.d, spec.d)) : load_mat(v_file);
  const Mat w = w_file.empty() ? Mat(Mat::Zero(spec.d, spec.d)) : load_mat(w_file);
  Json j;
  if (stationary) {
    j["stationary"] = stationary_laplace(spec.alpha, spec.b, v);
  } else {
    j["value"] = spec.is_canonical() ? joint_laplace(spec, v, w, t)
                                     : joint_laplace_general(spec, v, w, t);
    if (oracle) {
      if (!spec.is_canonical()) throw ConfigError("laplace: --oracle needs a canonical spec");
      j["oracle"] = riccati_oracle(spec, v, w, t);
    }
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_file, const std::string& out_dir) {
  ExperimentConfig config = ExperimentConfig::from_json(load_json(config_file));
  if (!out_dir.empty()) config.out_dir = out_dir;
  const ExperimentReport report = run_experiment(config);
  std::cout << report.summary_json().dump(2) << "\n";
  return report.failure_rate() > 0.5 ? 3 : 0;
}

int cmd_mse_table(const std::string& config_file, const std::vector<long>& n_grid,
                  const std::string& out_dir) {
  ExperimentConfig config = ExperimentConfig::from_json(load_json(config_file));
  if (!out_dir.empty()) config.out_dir = out_dir;
  const ExperimentReport report = mse_table(config, n_grid);
  std::cout << report.summary_json().dump(2) << "\n";
  const double rate =
      report.mse_rows.empty()
          ? 0.0
          : static_cast<double>(report.failures) /
                (static_cast<double>(config.M) * static_cast<double>(report.mse_rows.size()));
  return rate > 0.5 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wishart process simulation, estimation and limit-law checks"};
  app.require_subcommand(1);

  std::string spec_file, path_file, v_file, w_file, a_file, config_file, out, out_dir;
  std::string variant = "joint-sym";
  double T = 1.0, t = 1.0;
  long N = 100;
  std::uint64_t seed = 0;
  std::optional<double> alpha;
  bool oracle = false, stationary = false;
  std::vector<long> n_grid;

  auto* sim = app.add_subcommand("simulate", "Sample a path on a uniform grid, write CSV");
  sim->add_option("--spec", spec_file, "spec JSON file")->required();
  sim->add_option("--T", T, "horizon")->required();
  sim->add_option("--N", N, "number of steps")->required();
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--out", out, "output CSV")->required();

  auto* est = app.add_subcommand("estimate", "Estimate drift parameters from a path CSV");
  est->add_option("--path", path_file, "path CSV")->required();
  est->add_option("--variant", variant,
                  "joint-sym | joint-gen | b-sym | b-gen | b-diag | pipeline");
  est->add_option("--alpha", alpha, "known degree for the b-only variants");
  est->add_option("--known-a", a_file, "a matrix JSON for the pipeline variant");
  est->add_option("--out", out, "output JSON (stdout if omitted)");

  auto* lap = app.add_subcommand("laplace", "Joint Laplace transform of (X_t, R_t)");
  lap->add_option("--spec", spec_file, "spec JSON file")->required();
  lap->add_option("--v", v_file, "R_t coefficient matrix JSON");
  lap->add_option("--w", w_file, "X_t coefficient matrix JSON");
  lap->add_option("--t", t, "time");
  lap->add_flag("--oracle", oracle, "also integrate the Riccati ODE");
  lap->add_flag("--stationary", stationary, "stationary transform instead");

  auto* exp = app.add_subcommand("experiment", "Monte Carlo estimator-error experiment");
  exp->add_option("--config", config_file, "ExperimentConfig JSON")->required();
  exp->add_option("--out-dir", out_dir, "override the config output directory");

  auto* mse = app.add_subcommand("mse-table", "Pipeline MSE table over a grid of N");
  mse->add_option("--config", config_file, "ExperimentConfig JSON")->required();
  mse->add_option("--n-grid", n_grid, "comma separated step counts")->required()->delimiter(',');
  mse->add_option("--out-dir", out_dir, "override the config output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(spec_file, T, N, seed, out);
    if (est->parsed()) return cmd_estimate(path_file, variant, alpha, a_file, out);
    if (lap->parsed()) return cmd_laplace(spec_file, v_file, w_file, t, oracle, stationary);
    if (exp->parsed()) return cmd_experiment(config_file, out_dir);
    if (mse->parsed()) return cmd_mse_table(config_file, n_grid, out_dir);
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
