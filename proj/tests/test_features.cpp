// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "collatz/core.hpp"
#include "collatz/errors.hpp"
#include "collatz/features.hpp"

using namespace collatz;

TEST_CASE("feature rows") {
  const auto r = make_feature_row(27, 111);
  CHECK(r.n == 27);
  CHECK(r.log_n == doctest::Approx(3.295836866004329).epsilon(1e-15));
  CHECK(r.residue8 == 3);
  CHECK(r.tau == 111);

  const auto one = make_feature_row(1, 0);
  CHECK(one.log_n == 0.0);
  CHECK(one.residue8 == 1);

  const TauTable t = build_tau_table(100);
  const std::vector<std::uint64_t> idx{8, 27, 1};
  const auto rows = make_features(t, idx);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].n == 8);
  CHECK(rows[0].tau == 3);
  CHECK(rows[0].residue8 == 0);
  CHECK(rows[1].tau == 111);
  CHECK(rows[2].tau == 0);

  const std::vector<std::uint64_t> bad{101};
  CHECK_THROWS_AS(make_features(t, bad), ValidationError);
  const std::vector<std::uint64_t> zero{0};
  CHECK_THROWS_AS(make_features(t, zero), ValidationError);
}

TEST_CASE("split properties") {
  for (std::uint64_t seed : {0ull, 1ull, 123ull, 99999ull}) {
    const auto s = make_split(seed, 1000, 300, 200);
    CHECK(s.fit_indices.size() == 300);
    CHECK(s.test_indices.size() == 200);
    std::set<std::uint64_t> fit(s.fit_indices.begin(), s.fit_indices.end());
    std::set<std::uint64_t> test(s.test_indices.begin(), s.test_indices.end());
    CHECK(fit.size() == 300);
    CHECK(test.size() == 200);
    for (auto n : fit) {
      CHECK(n >= 1);
      CHECK(n <= 1000);
      CHECK(test.count(n) == 0);
    }
    for (auto n : test) {
      CHECK(n >= 1);
      CHECK(n <= 1000);
    }
  }
}

TEST_CASE("split uses the whole population when asked") {
  const auto s = make_split(5, 50, 30, 20);
  std::vector<std::uint64_t> all = s.fit_indices;
  all.insert(all.end(), s.test_indices.begin(), s.test_indices.end());
  std::sort(all.begin(), all.end());
  for (std::uint64_t i = 0; i < 50; ++i) CHECK(all[i] == i + 1);
}

TEST_CASE("split determinism") {
  const auto a = make_split(123, 100000, 5000, 5000);
  const auto b = make_split(123, 100000, 5000, 5000);
  CHECK(a.fit_indices == b.fit_indices);
  CHECK(a.test_indices == b.test_indices);
  const auto c = make_split(124, 100000, 5000, 5000);
  CHECK(a.fit_indices != c.fit_indices);
}

TEST_CASE("split is roughly uniform") {
  // Mean of a uniform draw from 1..N is (N + 1) / 2 with sd N / sqrt(12 k).
  const std::uint64_t n_total = 1000000;
  const auto s = make_split(7, n_total, 20000, 20000);
  double mean = 0.0;
  for (auto n : s.fit_indices) mean += static_cast<double>(n);
  mean /= static_cast<double>(s.fit_indices.size());
  const double sd = static_cast<double>(n_total) / std::sqrt(12.0 * 20000.0);
  CHECK(std::abs(mean - (n_total + 1) / 2.0) < 5 * sd);
  std::array<int, 8> residues{};
  for (auto n : s.test_indices) ++residues[n % 8];
  for (int c : residues) CHECK(std::abs(c - 2500) < 5 * std::sqrt(2500.0));
}

TEST_CASE("split validation") {
  CHECK_THROWS_AS(make_split(1, 10, 6, 5), ValidationError);
  CHECK_THROWS_AS(make_split(1, 10, 0, 5), ValidationError);
  CHECK_THROWS_AS(make_split(1, 10, 5, 0), ValidationError);
  CHECK_NOTHROW(make_split(1, 10, 5, 5));
}

TEST_CASE("split json round trip") {
  const auto s = make_split(9, 500, 40, 30);
  const nlohmann::json j = s;
  const auto back = j.get<SplitSpec>();
  CHECK(back.seed == 9);
  CHECK(back.n_total == 500);
  CHECK(back.n_fit == 40);
  CHECK(back.n_test == 30);
  CHECK(back.fit_indices == s.fit_indices);
  CHECK(back.test_indices == s.test_indices);
}
