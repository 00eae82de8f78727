// mgshadows: collect matchgate shadows, estimate observables from them, run
// the end-to-end overlap estimator, tabulate variance bounds and check the
// 3-design property.

#include <iostream>

#include <CLI11.hpp>

#include "mgshadows/cli.hpp"

namespace {

using mgs::cli::RunConfig;

void add_threads(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--threads", cfg.threads, "worker threads (default: MGSHADOWS_THREADS, then all cores)")
      ->check(CLI::NonNegativeNumber);
}

void add_ensemble(CLI::App* sub, std::string& ensemble) {
  sub->add_option("--ensemble", ensemble, "random circuit ensemble")
      ->check(CLI::IsMember({"haar", "clifford"}));
}

void add_seed(CLI::App* sub, RunConfig& cfg) {
  sub->add_option_function<std::uint64_t>("--seed", [&cfg](std::uint64_t s) { cfg.seed = s; },
                                          "RNG seed (required; runs are reproducible per seed)");
}

void add_accuracy(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--eps", cfg.eps, "target additive error")->check(CLI::PositiveNumber);
  sub->add_option("--delta", cfg.delta, "failure probability")->check(CLI::Range(0.0, 1.0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical shadows from random matchgate circuits"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string ensemble = "haar";

  auto* collect = app.add_subcommand("collect", "simulate shadow collection and write a JSONL shadow file");
  collect->add_option("--state", cfg.state_path, "statevector or Gaussian-state JSON")->required();
  collect->add_option("--samples", cfg.samples, "number of shadows")->required();
  collect->add_option("--out", cfg.out_path, "output JSONL file")->required();
  add_seed(collect, cfg);
  add_ensemble(collect, ensemble);
  add_threads(collect, cfg);

  auto* estimate = app.add_subcommand("estimate", "median-of-means estimates from a shadow file");
  estimate->add_option("--shadows", cfg.shadows_path, "JSONL shadow file")->required();
  estimate->add_option("--observables", cfg.observables_path, "observables JSON")->required();
  estimate->add_option("--out", cfg.out_path, "output JSON (default stdout)");
  add_accuracy(estimate, cfg);
  add_threads(estimate, cfg);

  auto* overlap = app.add_subcommand("overlap", "estimate <psi|phi_i> for Slater determinants end to end");
  overlap->add_option("--state", cfg.state_path, "statevector JSON")->required();
  overlap->add_option("--slaters", cfg.slaters_path, "JSON array of Slater specs")->required();
  overlap->add_option("--out", cfg.out_path, "output JSON (default stdout)");
  add_seed(overlap, cfg);
  add_accuracy(overlap, cfg);
  add_ensemble(overlap, ensemble);
  add_threads(overlap, cfg);

  auto* table = app.add_subcommand("variance-table", "CSV of the overlap variance bound b(n, zeta)");
  table->add_option("--grid", cfg.grid, "grid such as \"n=4..1000:log,zeta=0,2,10\" (default grid if omitted)");
  table->add_option("--out", cfg.out_path, "output CSV (default stdout)");
  table->add_flag("--include-slow", cfg.include_slow, "add the (n=1000, zeta=500) point to the default grid");
  add_threads(table, cfg);

  auto* design = app.add_subcommand("verify-design", "exhaustive 3-design check over signed permutations");
  design->add_option("--n", cfg.n, "number of modes (1 or 2)")->required();
  design->add_option("--out", cfg.out_path, "report file (default stdout)");
  add_threads(design, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mgs::cli::kInputError;
  }

  try {
    cfg.ensemble = mgs::parse_ensemble(ensemble);
    if (collect->parsed()) return cfg.command = "collect", mgs::cli::cmd_collect(cfg, std::cerr);
    if (estimate->parsed()) return cfg.command = "estimate", mgs::cli::cmd_estimate(cfg, std::cerr);
    if (overlap->parsed()) return cfg.command = "overlap", mgs::cli::cmd_overlap(cfg, std::cerr);
    if (table->parsed()) return cfg.command = "variance-table", mgs::cli::cmd_variance_table(cfg, std::cerr);
    cfg.command = "verify-design";
    return mgs::cli::cmd_verify_design(cfg, std::cerr);
  } catch (const mgs::InsufficientSamples& e) {
    std::cerr << "error: " << e.what() << "\nrequired shadows: " << e.required << "\n";
    return mgs::cli::kInsufficientSamples;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mgs::cli::exit_code_for(e);
  }
}
