#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "gpqn/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gpqn - stochastic Newton-type optimization experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute a Monte-Carlo experiment");
  std::string config_path, out_dir = "results";
  std::uint64_t seed_override = 0;
  int runs_override = -1;
  bool have_seed = false;
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out-dir", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed_override, "override master_seed");
  run->add_option("--runs", runs_override, "override run count");

  auto* screen = app.add_subcommand("screen", "apply the divergence screen to a summary");
  std::string summary_path;
  double threshold = 0.05;
  screen->add_option("--summary", summary_path, "summary.csv path")->required();
  screen->add_option("--threshold", threshold, "relative-error threshold");

  auto* bode = app.add_subcommand("bode", "recompute Bode responses from a summary");
  std::string bode_summary, bode_out = "bode.csv";
  bode->add_option("--summary", bode_summary, "summary.csv path")->required();
  bode->add_option("--out", bode_out, "output csv path");

  app.add_subcommand("validate", "run the built-in invariant suites");

  CLI11_PARSE(app, argc, argv);
  have_seed = seed_opt->count() > 0;

  try {
    if (run->parsed()) {
      gpqn::ExperimentConfig cfg;
      try {
        cfg = gpqn::load_config(config_path);
      } catch (const std::exception& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 1;
      }
      if (have_seed) cfg.master_seed = seed_override;
      if (runs_override >= 0) cfg.runs = runs_override;
      auto result = gpqn::run_experiment(cfg, out_dir);
      int ok = 0;
      for (const auto& s : result.summaries)
        if (s.status == "ok") ++ok;
      std::printf("%d/%d runs completed, outputs in %s\n", ok,
                  static_cast<int>(result.summaries.size()), result.out_dir.c_str());
      return 0;
    }
    if (screen->parsed()) {
      auto res = gpqn::screen_runs(summary_path, threshold);
      std::printf("retained %d of %d runs (threshold %g)\n", res.retained, res.total, threshold);
      for (int id : res.removed_runs) std::printf("removed run %d\n", id);
      return 0;
    }
    if (bode->parsed()) {
      gpqn::bode_from_summary(bode_summary, bode_out);
      std::printf("wrote %s\n", bode_out.c_str());
      return 0;
    }
    // validate
    return gpqn::validate_invariants() ? 0 : 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
}
