// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "collatz/core.hpp"
#include "collatz/features.hpp"
#include "collatz/generator.hpp"
#include "collatz/posterior.hpp"

namespace collatz {

struct SummaryStats {
  std::uint64_t count = 0;
  std::uint64_t min = 0;
  std::uint64_t max = 0;
  double mean = 0.0;
  double variance_population = 0.0;  // divide by N
  double variance_sample = 0.0;      // divide by N - 1
  /// Which convention `variance` reports: "population" or "sample".
  std::string variance_convention = "population";
  double variance = 0.0;
  double dispersion_ratio = 0.0;  // variance / mean
};

/// Moments from exact 128-bit integer sums, so the result does not depend on
/// summation order.
SummaryStats summarize(std::span<const std::uint16_t> values);
SummaryStats summarize(std::span<const std::uint32_t> values);
SummaryStats summarize(const TauTable& table);

struct EvalReport {
  std::string model_id;
  double log_score = 0.0;
  double per_obs_log_score = 0.0;
  double w1 = 0.0;
  std::uint64_t n_test = 0;
  std::uint64_t s_mc = 0;  // 0 for the regression model
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t non_absorbed = 0;  // generator replicates that hit max_steps
};

/// Sum of predictive_log_density over the test rows. W1 compares the observed
/// tau values with one posterior-predictive draw per test point (substream
/// (seed, kPosteriorPredictive, i)).
EvalReport glm_log_score(const NbPosterior& posterior, std::span<const FeatureRow> test, std::uint64_t seed,
                         unsigned threads = 1, const std::string& model_id = "NB2-GLM",
                         std::vector<double>* w1_sample = nullptr);

/// Per point: s_mc generator replicates on substream (seed, kGenerator, i);
/// p-hat = hits / s_mc; score = sum log(p-hat + epsilon). Non-absorbed runs
/// never hit. W1 uses one more replicate per point on (seed, kGeneratorW1, i);
/// a non-absorbed replicate contributes its step count at the cutoff.
EvalReport gen_log_score(const BlockLengthModel& model, std::span<const FeatureRow> test, std::size_t s_mc,
                         double epsilon, const GenConfig& config, std::uint64_t seed, unsigned threads = 1,
                         const std::string& model_id = "", std::vector<double>* w1_sample = nullptr);

/// Score from per-point hit counts; exposed for tests of the floor behaviour.
double log_score_from_hits(std::span<const std::uint64_t> hits, std::size_t s_mc, double epsilon);

/// 1-Wasserstein distance between two empirical distributions. Throws
/// ValidationError for an empty sample.
double wasserstein1(std::span<const double> a, std::span<const double> b);

/// Sorted by log score (descending), ties broken by model_id.
std::vector<EvalReport> compare(std::vector<EvalReport> reports);
/// model,log_score,w1 table.
std::string table2_csv(std::span<const EvalReport> ranked);
std::string table2_text(std::span<const EvalReport> ranked);
std::string table1_csv(const SummaryStats& s);

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);
void to_json(nlohmann::json& j, const SummaryStats& s);

}  // namespace collatz
