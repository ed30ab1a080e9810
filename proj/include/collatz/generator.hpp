// SPDX-License-Identifier: Apache-2.0
#pragma once

// Stochastic odd-block generators. The deterministic odd-to-odd map
// m -> (3m+1) / 2^K(m) is replaced by M -> round_odd((3M+1) / 2^K) with K drawn
// from a block-length pmf on {1..k_max}:
//   geometric     P(K=k) = 2^-k, tail mass 2^-k_max folded into k_max
//   global        Dirichlet posterior over all odd m
//   conditional8  one Dirichlet posterior per odd residue class m mod 8

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "collatz/core.hpp"
#include "collatz/rng.hpp"

namespace collatz {

/// Elementwise prior + counts. Throws ValidationError on a length mismatch or a
/// non-positive prior entry.
std::vector<double> dirichlet_update(std::span<const double> prior, std::span<const std::uint64_t> counts);
std::vector<double> dirichlet_mean(std::span<const double> concentrations);
/// Var(p_k) = a_k (a0 - a_k) / (a0^2 (a0 + 1)), a0 = sum a.
std::vector<double> dirichlet_variance(std::span<const double> concentrations);

enum class Variant { kGeometric, kGlobal, kConditional8 };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

class BlockLengthModel {
 public:
  static BlockLengthModel geometric(unsigned k_max);
  /// rows: 1 row (global) or 8 rows (conditional8), k_max entries each.
  BlockLengthModel(Variant variant, unsigned k_max, std::vector<std::vector<double>> concentrations,
                   std::uint64_t source_n_max = 0);

  Variant variant() const noexcept { return variant_; }
  unsigned k_max() const noexcept { return k_max_; }
  std::uint64_t source_n_max() const noexcept { return source_n_max_; }
  const std::vector<std::vector<double>>& concentrations() const noexcept { return concentrations_; }

  /// Posterior-mean pmf over k = 1..k_max. For conditional8 the residue must be
  /// odd; other variants ignore it.
  std::vector<double> pmf(int residue8 = 1) const;
  /// Posterior standard deviation per cell (zeros for geometric).
  std::vector<double> posterior_sd(int residue8 = 1) const;

 private:
  const std::vector<double>& row(int residue8) const;

  Variant variant_;
  unsigned k_max_;
  std::vector<std::vector<double>> concentrations_;
  std::uint64_t source_n_max_;
};

/// Conjugate calibration from core::collect_block_lengths output with a
/// symmetric Dirichlet(prior_concentration) prior. Even-residue rows of a
/// conditional8 model stay at the prior and are never sampled.
BlockLengthModel calibrate(const BlockLengthCounts& counts, Variant variant, double prior_concentration = 1.0);

void to_json(nlohmann::json& j, const BlockLengthModel& m);
BlockLengthModel block_length_model_from_json(const nlohmann::json& j);

enum class PkSource { kPosteriorMean, kPosteriorDraw };

struct GenConfig {
  std::uint64_t max_steps = 200'000;
  PkSource pk_source = PkSource::kPosteriorMean;
};

/// Nearest integer (ties to even), then: <= 1 -> 1, odd -> itself, even -> +1.
/// Throws ValidationError for non-finite x or values beyond 2^63.
std::uint64_t round_odd(double x);

/// round_odd(numerator / 2^k) evaluated exactly in integer arithmetic.
std::uint64_t round_odd_quotient(std::uint64_t numerator, unsigned k);

/// Categorical sampler for one model; builds cumulative tables once.
class BlockLengthSampler {
 public:
  BlockLengthSampler(const BlockLengthModel& model, PkSource source = PkSource::kPosteriorMean);

  /// For kPosteriorDraw: draws fresh pmfs from the Dirichlet posterior. Call
  /// once per trajectory. No-op for kPosteriorMean and geometric.
  void refresh(Rng& rng);
  /// k in 1..k_max. Throws ValidationError for an even residue under conditional8.
  unsigned sample(int residue8, Rng& rng) const;

 private:
  void set_cdf(std::size_t row, const std::vector<double>& pmf);

  const BlockLengthModel* model_;
  PkSource source_;
  std::vector<std::vector<double>> cdf_;  // 1 row, or 8 rows for conditional8
};

/// Outcome of one generator run. absorbed == false means the step budget ran
/// out (or the state outgrew 64 bits); steps then holds the count so far.
struct GenOutcome {
  std::uint64_t steps = 0;
  bool absorbed = true;
};

GenOutcome simulate_tau(std::uint64_t n, const BlockLengthSampler& sampler, const GenConfig& config, Rng& rng);
GenOutcome simulate_tau(std::uint64_t n, const BlockLengthModel& model, const GenConfig& config, Rng& rng);

/// E[log2 3 - K]. The geometric variant uses the uncapped law (E[K] = 2).
/// For conditional8 without a residue, the four odd rows are averaged with
/// equal weight (odd residues are equally frequent among odd m).
double log_drift(const BlockLengthModel& model, std::optional<int> residue8 = std::nullopt);

/// log2 of the odd state after each block, M_1 .. M_J (so n = 1 or a power of
/// two gives an empty trace and the last entry is 0 for an absorbed run).
struct TracePair {
  std::vector<double> deterministic;
  std::vector<double> stochastic;
  bool stochastic_absorbed = true;
};

TracePair trace_compare(std::uint64_t n, const BlockLengthModel& model, const GenConfig& config, Rng& rng);

}  // namespace collatz
