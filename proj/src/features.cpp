// SPDX-License-Identifier: Apache-2.0
#include "collatz/features.hpp"

#include <cmath>
#include <numeric>

#include "collatz/errors.hpp"
#include "collatz/rng.hpp"

namespace collatz {

FeatureRow make_feature_row(std::uint64_t n, std::uint32_t tau) {
  return FeatureRow{n, std::log(static_cast<double>(n)), static_cast<int>(n & 7), tau};
}

std::vector<FeatureRow> make_features(const TauTable& table, std::span<const std::uint64_t> indices) {
  std::vector<FeatureRow> rows;
  rows.reserve(indices.size());
  for (auto n : indices) rows.push_back(make_feature_row(n, table.at(n)));
  return rows;
}

SplitSpec make_split(std::uint64_t seed, std::uint64_t n_total, std::uint64_t n_fit, std::uint64_t n_test) {
  if (n_total == 0 || n_fit == 0 || n_test == 0) {
    throw ValidationError("make_split: sizes must be positive");
  }
  if (n_fit > n_total || n_test > n_total - n_fit) {
    throw ValidationError("make_split: n_fit + n_test = " + std::to_string(n_fit + n_test) +
                          " exceeds n_total = " + std::to_string(n_total));
  }
  if (n_total > UINT32_MAX) throw ValidationError("make_split: n_total must fit in 32 bits");

  std::vector<std::uint32_t> pool(n_total);
  std::iota(pool.begin(), pool.end(), 1u);
  Rng rng = Rng::substream(seed, Stream::kSplit);
  const std::uint64_t draws = n_fit + n_test;
  for (std::uint64_t i = 0; i < draws; ++i) {
    const std::uint64_t j = i + rng.uniform_below(n_total - i);
    std::swap(pool[i], pool[j]);
  }

  SplitSpec s{seed, n_total, n_fit, n_test, {}, {}};
  s.fit_indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_fit));
  s.test_indices.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_fit),
                        pool.begin() + static_cast<std::ptrdiff_t>(draws));
  return s;
}

void to_json(nlohmann::json& j, const SplitSpec& s) {
  j = nlohmann::json{{"seed", s.seed},
                     {"n_total", s.n_total},
                     {"n_fit", s.n_fit},
                     {"n_test", s.n_test},
                     {"fit_indices", s.fit_indices},
                     {"test_indices", s.test_indices}};
}

void from_json(const nlohmann::json& j, SplitSpec& s) {
  j.at("seed").get_to(s.seed);
  j.at("n_total").get_to(s.n_total);
  j.at("n_fit").get_to(s.n_fit);
  j.at("n_test").get_to(s.n_test);
  j.at("fit_indices").get_to(s.fit_indices);
  j.at("test_indices").get_to(s.test_indices);
  if (s.fit_indices.size() != s.n_fit || s.test_indices.size() != s.n_test) {
    throw IoError("split: index list sizes disagree with n_fit/n_test");
  }
}

}  // namespace collatz
