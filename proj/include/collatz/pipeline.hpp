// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end commands. Each reads and writes artifacts under
// PipelineConfig::output_dir:
//
//   compute    tau_table.bin, table1.csv, summary.json
//   fit        split.json, posterior.json, ppc.csv, diagnostics.txt
//   calibrate  block_counts.csv, model_{geometric,global,conditional8}.json,
//              pk_empirical.csv, pk_posterior.csv, pk_mod8.csv
//   evaluate   report_<model>.json, table2.csv, table2.txt, ppc_generators.csv
//   trace      trace_<n>.csv
//   report     regenerates the CSV tables from the JSON/binary artifacts

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "collatz/eval.hpp"
#include "collatz/generator.hpp"

namespace collatz {

struct PipelineConfig {
  std::uint64_t n_max = 10'000'000;
  std::uint64_t seed = 123;
  std::uint64_t n_fit = 50'000;
  std::uint64_t n_test = 50'000;
  unsigned k_max = 30;
  std::size_t chains = 2;
  std::size_t tune = 1000;
  std::size_t draws = 1000;
  std::size_t thin = 10;
  double target_accept = 0.3;
  std::size_t s_mc = 40;
  double epsilon = 1e-12;
  std::uint64_t max_steps = 200'000;
  std::size_t ppc_draws = 1;
  bool include_g1 = false;
  bool force = false;
  unsigned threads = 1;
  std::filesystem::path output_dir = "out";

  /// Throws ValidationError naming the first invalid field.
  void validate() const;
};

namespace artifact {
inline constexpr const char* kTauTable = "tau_table.bin";
inline constexpr const char* kTable1 = "table1.csv";
inline constexpr const char* kSummary = "summary.json";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kPosterior = "posterior.json";
inline constexpr const char* kRejectedPosterior = "posterior.rejected.json";
inline constexpr const char* kPpc = "ppc.csv";
inline constexpr const char* kDiagnostics = "diagnostics.txt";
inline constexpr const char* kBlockCounts = "block_counts.csv";
inline constexpr const char* kModelGeometric = "model_geometric.json";
inline constexpr const char* kModelGlobal = "model_global.json";
inline constexpr const char* kModelConditional8 = "model_conditional8.json";
inline constexpr const char* kPkEmpirical = "pk_empirical.csv";
inline constexpr const char* kPkPosterior = "pk_posterior.csv";
inline constexpr const char* kPkMod8 = "pk_mod8.csv";
inline constexpr const char* kTable2 = "table2.csv";
inline constexpr const char* kTable2Text = "table2.txt";
inline constexpr const char* kPpcGenerators = "ppc_generators.csv";
}  // namespace artifact

struct ComputeResult {
  SummaryStats summary;
  std::uint64_t checksum = 0;
  bool recomputed = false;
};

/// Builds (or, unless force is set, reuses a checksum-valid) tau table.
ComputeResult cmd_compute(const PipelineConfig& config, std::ostream& log);

/// Splits, fits, writes the posterior and the held-out PPC. Throws
/// DiagnosticsError after writing posterior.rejected.json when a gate fails.
NbPosterior cmd_fit(const PipelineConfig& config, std::ostream& log);

struct CalibrateResult {
  BlockLengthCounts counts;
  BlockLengthModel global;
  BlockLengthModel conditional8;
};

CalibrateResult cmd_calibrate(const PipelineConfig& config, std::ostream& log);

/// Ranked reports (table2 order).
std::vector<EvalReport> cmd_evaluate(const PipelineConfig& config, std::ostream& log);

TracePair cmd_trace(std::uint64_t n, const PipelineConfig& config, std::ostream& log);

/// Returns the list of files regenerated.
std::vector<std::filesystem::path> cmd_report(const PipelineConfig& config, std::ostream& log);

}  // namespace collatz
