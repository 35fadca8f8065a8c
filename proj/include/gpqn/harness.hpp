#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gpqn/linalg.hpp"

namespace gpqn {

enum class Problem { quadratic, linear_ssm, nonlinear_ssm };
enum class Optimizer { alg1_hessian_gp, alg2_surrogate_gp, classic_bfgs };
enum class InitPolicy { uniform50, tenth };

struct ExperimentConfig {
  Problem problem = Problem::linear_ssm;
  Optimizer optimizer = Optimizer::alg2_surrogate_gp;
  int runs = 10;
  int data_length = 100;
  int particles = 500;
  int k_max = 100;
  double epsilon = 1e-3;
  InitPolicy init_policy = InitPolicy::uniform50;
  std::uint64_t master_seed = 1;

  // noise injected into the linear-SSM oracle (0 = noise-free)
  double cost_noise_std = 0.0;
  double grad_noise_std = 0.0;

  // Hessian-belief hyperparameters
  double alg1_b1 = 100.0;   // prior Hessian mean B1 = alg1_b1 * I
  double alg1_c1 = 1.0;     // prior covariance C1 = alg1_c1 * I
  double alg1_v = 1e-3;     // V = alg1_v * I
  double alg1_sigma_sq = 1.0;

  // surrogate kernel: sigma and the diagonal of V (empty = per-problem default)
  double alg2_sigma = 0.0;
  std::vector<double> alg2_v;
  // moving window on the surrogate dataset; inference is cubic in this, and a
  // recency window also keeps the surrogate local once iterates settle
  int alg2_capacity = 60;

  std::string problem_name() const;
  std::string optimizer_name() const;
};

/// Parse a flat key = value config file. Unknown keys and malformed values
/// are rejected.
ExperimentConfig load_config(const std::string& path);

struct RunSummary {
  int run_id = 0;
  Vector final_params;  // natural parameter space
  // ||final - truth|| / ||truth|| in natural space; infinity until a run
  // produces a final iterate, so aborted runs never read as accurate
  double rel_err = std::numeric_limits<double>::infinity();
  bool converged = false;  // rel_err <= 0.05
  std::string status;
};

struct ExperimentResult {
  std::vector<RunSummary> summaries;
  std::string out_dir;
};

/// Execute the configured Monte-Carlo experiment and persist iterates.csv,
/// summary.csv, manifest.txt and (linear problem only) bode.csv under
/// out_dir. Identical config + seed reproduces byte-identical files.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& out_dir);

struct ScreenResult {
  int total = 0;
  int retained = 0;
  std::vector<int> removed_runs;
};

/// Apply the relative-error divergence screen to a summary.csv file.
ScreenResult screen_runs(const std::string& summary_path, double threshold = 0.05);

/// Recompute Bode responses from the final parameters in a summary.csv and
/// write them to out_path.
void bode_from_summary(const std::string& summary_path, const std::string& out_path);

/// Quick self-checks of the core numerical identities; returns true when all
/// pass and prints one line per suite.
bool validate_invariants();

}  // namespace gpqn
