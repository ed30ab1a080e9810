// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "collatz/features.hpp"
#include "collatz/glm.hpp"

namespace collatz {

struct FitConfig {
  std::size_t n_chains = 2;
  std::size_t n_tune = 1000;
  std::size_t n_draws = 1000;
  /// Metropolis steps per retained draw.
  std::size_t thin = 10;
  /// Random-walk acceptance target (NUTS-style 0.9 does not apply here).
  double target_accept = 0.3;
  std::uint64_t seed = 123;
  double max_rhat = 1.05;
  double min_ess = 100.0;
  /// Throw DiagnosticsError from fit_mcmc when a gate fails.
  bool enforce_gates = true;
  GlmPrior prior{};
};

struct ParamDiagnostics {
  double rhat = 0.0;
  double ess = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

struct NbPosterior {
  std::vector<GlmParams> draws;  // chain-major: chain c occupies [c*n_draws, (c+1)*n_draws)
  /// Sampled standardized offsets per draw; draws[i].u[r] == draws[i].sigma_u * z[i][r].
  std::vector<std::array<double, 8>> z;
  std::size_t n_chains = 0;
  std::size_t n_tune = 0;
  std::size_t n_draws = 0;
  std::size_t thin = 1;
  double target_accept = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> accept_rates;
  std::map<std::string, ParamDiagnostics> diagnostics;

  /// Names of parameters whose R-hat or ESS misses the gates (empty = pass).
  std::vector<std::string> failed_gates(double max_rhat, double min_ess) const;
  /// Multi-line per-parameter table.
  std::string diagnostics_report() const;
};

/// Attaches split R-hat, ESS, mean and sd per parameter (computed from the
/// retained draws only).
void compute_diagnostics(NbPosterior& posterior);

/// Throws DiagnosticsError listing every parameter that misses a gate.
void check_diagnostics(const NbPosterior& posterior, double max_rhat = 1.05, double min_ess = 100.0);

/// Adaptive random-walk Metropolis on the unconstrained coordinates, one
/// independent chain (and RNG substream) per chain index. Chains start from a
/// moment-based point estimate jittered with prior draws for the class
/// offsets.
NbPosterior fit_mcmc(std::span<const FeatureRow> data, const FitConfig& config);

/// For each n: draws_per_point values of tau-hat, each from a uniformly chosen
/// posterior draw followed by nb2_sample. Point i uses the substream
/// (seed, kPosteriorPredictive, i).
std::vector<std::vector<std::uint64_t>> posterior_predictive(const NbPosterior& posterior,
                                                             std::span<const std::uint64_t> ns,
                                                             std::size_t draws_per_point, std::uint64_t seed);

/// log( (1/S) sum_s Pr(y | mu_n^(s), alpha^(s)) ), evaluated with log-sum-exp.
double predictive_log_density(const NbPosterior& posterior, std::uint64_t n, std::uint64_t y);

/// predictive_log_density with per-draw constants hoisted out, for scoring
/// many points against one posterior. Thread-safe.
class PredictiveDensity {
 public:
  explicit PredictiveDensity(const NbPosterior& posterior);
  double operator()(std::uint64_t n, std::uint64_t y) const;

 private:
  struct Draw {
    double beta0, beta_log, log_alpha, r;
    std::array<double, 8> u;
  };
  std::vector<Draw> draws_;
};

void to_json(nlohmann::json& j, const GlmParams& p);
void from_json(const nlohmann::json& j, GlmParams& p);
void to_json(nlohmann::json& j, const NbPosterior& p);
void from_json(const nlohmann::json& j, NbPosterior& p);

}  // namespace collatz
