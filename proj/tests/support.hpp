// SPDX-License-Identifier: Apache-2.0
#pragma once
// Independent reference computations shared by the unit and acceptance tests.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "collatz/posterior.hpp"

namespace collatz::testing {

/// Literal iteration of the Collatz map with no shortcuts or tables.
std::uint64_t naive_tau(std::uint64_t n);
/// Trailing zero count by repeated division.
unsigned naive_v2(std::uint64_t n);

/// Data rows of a CSV file (header skipped), split on commas.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

/// Total NB2 mass, summed until the remaining tail is provably below 1e-15.
double nb2_total_mass(double mu, double alpha);

/// Gamma-Poisson model with a closed-form Gamma posterior, sampled through
/// AdaptiveMetropolis on ln lambda. Quantiles are compared at 5%, 50%, 95%.
struct ConjugateCheck {
  std::array<double, 3> probs{0.05, 0.5, 0.95};
  std::array<double, 3> sampled{};
  std::array<double, 3> exact{};
  double max_rel_error = 0.0;
};
ConjugateCheck conjugate_gamma_check(std::uint64_t seed, std::size_t n_draws);

/// Fit the GLM to synthetic data drawn from known parameters and report how
/// far each posterior mean sits from the truth in posterior SDs.
struct RecoveryCheck {
  std::vector<std::string> names;
  std::vector<double> truth, mean, sd, z;
  double max_abs_z = 0.0;
  std::vector<std::string> failed_gates;
};
GlmParams sbc_truth();
std::vector<FeatureRow> synthetic_rows(const GlmParams& truth, std::size_t n_rows, std::uint64_t n_max,
                                       std::uint64_t seed);
RecoveryCheck recovery_check(const GlmParams& truth, std::size_t n_rows, const FitConfig& config);

}  // namespace collatz::testing
