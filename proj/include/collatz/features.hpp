// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "collatz/core.hpp"

namespace collatz {

/// Regression covariates for one n. log_n is the natural log.
struct FeatureRow {
  std::uint64_t n = 0;
  double log_n = 0.0;
  int residue8 = 0;
  std::uint32_t tau = 0;
};

FeatureRow make_feature_row(std::uint64_t n, std::uint32_t tau);

/// One row per index, in input order. Throws ValidationError on an index
/// outside [1, table.n_max()].
std::vector<FeatureRow> make_features(const TauTable& table, std::span<const std::uint64_t> indices);

/// Disjoint fit/test index sets drawn uniformly without replacement from
/// {1..n_total}. Indices are kept in draw order.
struct SplitSpec {
  std::uint64_t seed = 0;
  std::uint64_t n_total = 0;
  std::uint64_t n_fit = 0;
  std::uint64_t n_test = 0;
  std::vector<std::uint64_t> fit_indices;
  std::vector<std::uint64_t> test_indices;
};

/// Partial Fisher-Yates shuffle of 1..n_total on the Stream::kSplit substream.
/// The first n_fit positions become the fit set; the test set continues the
/// same shuffle (and hence the same random stream) over the remaining pool.
SplitSpec make_split(std::uint64_t seed, std::uint64_t n_total, std::uint64_t n_fit, std::uint64_t n_test);

void to_json(nlohmann::json& j, const SplitSpec& s);
void from_json(const nlohmann::json& j, SplitSpec& s);

}  // namespace collatz
