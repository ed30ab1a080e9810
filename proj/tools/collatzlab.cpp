// SPDX-License-Identifier: Apache-2.0
//
// collatzlab: compute tau tables, fit the NB2 regression, calibrate the
// odd-block generators, and score everything on held-out data.
//
// Exit codes: 0 success, 2 validation error, 3 MCMC diagnostics failure,
// 4 missing artifact, 1 anything else.

#include <iostream>

#include "CLI11.hpp"

#include "collatz/errors.hpp"
#include "collatz/parallel.hpp"
#include "collatz/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace collatz;
  PipelineConfig config;
  config.threads = default_threads();
  std::string output_dir = config.output_dir.string();
  std::uint64_t trace_n = 27;

  CLI::App app{"Collatz stopping-time workbench"};
  app.set_config("--config", "", "TOML/INI file with option values (command-line flags win)");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--n-max", config.n_max, "Largest n in the tau table")->capture_default_str();
  app.add_option("--seed", config.seed, "Master RNG seed")->capture_default_str();
  app.add_option("--n-fit", config.n_fit, "Training subsample size")->capture_default_str();
  app.add_option("--n-test", config.n_test, "Held-out subsample size")->capture_default_str();
  app.add_option("--k-max", config.k_max, "Block-length cap")->capture_default_str();
  app.add_option("--chains", config.chains, "MCMC chains")->capture_default_str();
  app.add_option("--tune", config.tune, "Tuning iterations per chain")->capture_default_str();
  app.add_option("--draws", config.draws, "Retained draws per chain")->capture_default_str();
  app.add_option("--thin", config.thin, "Metropolis steps per retained draw")->capture_default_str();
  app.add_option("--target-accept", config.target_accept, "Random-walk acceptance target")->capture_default_str();
  app.add_option("--s-mc", config.s_mc, "Generator replicates per test point")->capture_default_str();
  app.add_option("--epsilon", config.epsilon, "Log-score floor for generator hit rates")->capture_default_str();
  app.add_option("--max-steps", config.max_steps, "Generator step budget")->capture_default_str();
  app.add_option("--ppc-draws", config.ppc_draws, "Posterior predictive draws per test point")->capture_default_str();
  app.add_flag("--include-g1", config.include_g1, "Also score the geometric generator");
  app.add_flag("--force", config.force, "Recompute even when a valid artifact exists");
  app.add_option("--threads", config.threads, "Worker threads")->capture_default_str();
  app.add_option("--output-dir", output_dir, "Artifact directory")->capture_default_str();

  auto* compute = app.add_subcommand("compute", "Build the tau table and its summary statistics (table1.csv)");
  auto* fit = app.add_subcommand("fit", "Fit the hierarchical NB2 regression");
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate block-length models");
  auto* evaluate = app.add_subcommand("evaluate", "Score all models on the held-out set");
  auto* trace = app.add_subcommand("trace", "Deterministic vs stochastic log2 trajectory");
  trace->add_option("--n", trace_n, "Starting value")->capture_default_str();
  auto* report = app.add_subcommand("report", "Regenerate CSV tables from existing artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  config.output_dir = output_dir;

  try {
    if (*compute) cmd_compute(config, std::cout);
    if (*fit) cmd_fit(config, std::cout);
    if (*calibrate) cmd_calibrate(config, std::cout);
    if (*evaluate) cmd_evaluate(config, std::cout);
    if (*trace) cmd_trace(trace_n, config, std::cout);
    if (*report) cmd_report(config, std::cout);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DiagnosticsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
