// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"

#include "collatz/core.hpp"
#include "collatz/errors.hpp"
#include "collatz/generator.hpp"
#include "collatz/rng.hpp"
#include "support.hpp"

using namespace collatz;

namespace {

// Concentrations for a numerically degenerate pmf at k = hot.
std::vector<double> spike(unsigned k_max, unsigned hot) {
  std::vector<double> row(k_max, 1e-300);
  row[hot - 1] = 1.0;
  return row;
}

}  // namespace

TEST_CASE("dirichlet update examples") {
  const std::vector<double> prior{1.0, 1.0};
  const std::vector<std::uint64_t> counts{3, 1};
  const auto post = dirichlet_update(prior, counts);
  CHECK(post == std::vector<double>{4.0, 2.0});
  const auto mean = dirichlet_mean(post);
  CHECK(mean[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(mean[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const std::vector<std::uint64_t> zeros{0, 0};
  CHECK(dirichlet_update(prior, zeros) == prior);

  const std::vector<double> prior3{1.0, 1.0, 1.0};
  const std::vector<std::uint64_t> counts3{0, 5, 0};
  const auto var = dirichlet_variance(dirichlet_update(prior3, counts3));
  CHECK(var[1] == doctest::Approx(12.0 / 576.0).epsilon(1e-15));

  const std::vector<std::uint64_t> wrong{1, 2, 3};
  CHECK_THROWS_AS(dirichlet_update(prior, wrong), ValidationError);
  const std::vector<double> bad_prior{0.0, 1.0};
  CHECK_THROWS_AS(dirichlet_update(bad_prior, counts), ValidationError);
}

TEST_CASE("dirichlet update commutes with count splitting") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.uniform_below(40);
    std::vector<double> prior(k);
    std::vector<std::uint64_t> c1(k), c2(k), c12(k);
    for (std::size_t i = 0; i < k; ++i) {
      prior[i] = 1.0 + static_cast<double>(rng.uniform_below(5));
      c1[i] = rng.uniform_below(1000000);
      c2[i] = rng.uniform_below(1000000);
      c12[i] = c1[i] + c2[i];
    }
    const auto step = dirichlet_update(prior, c1);
    CHECK(dirichlet_update(step, c2) == dirichlet_update(prior, c12));
  }
}

TEST_CASE("dirichlet mean and variance match the closed forms on random inputs") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.uniform_below(30);
    std::vector<double> a(k);
    for (auto& x : a) x = 0.1 + 50.0 * rng.uniform();
    long double a0 = 0.0L;
    for (double x : a) a0 += x;
    const auto mean = dirichlet_mean(a);
    const auto var = dirichlet_variance(a);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const long double m = a[i] / a0;
      const long double v = a[i] * (a0 - a[i]) / (a0 * a0 * (a0 + 1));
      CHECK(std::abs(mean[i] - static_cast<double>(m)) <= 1e-12 * static_cast<double>(m));
      CHECK(std::abs(var[i] - static_cast<double>(v)) <= 1e-12 * static_cast<double>(v));
      total += mean[i];
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("geometric model") {
  const auto g2 = BlockLengthModel::geometric(2);
  CHECK(g2.pmf() == std::vector<double>{0.5, 0.5});
  const auto g30 = BlockLengthModel::geometric(30);
  const auto p = g30.pmf();
  CHECK(p[0] == 0.5);
  CHECK(p[28] == std::ldexp(1.0, -29));
  CHECK(p[29] == std::ldexp(1.0, -29));
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == 1.0);
  CHECK_THROWS_AS(BlockLengthModel::geometric(0), ValidationError);
  CHECK_THROWS_AS(BlockLengthModel::geometric(64), ValidationError);
}

TEST_CASE("calibrate") {
  const auto counts = collect_block_lengths(100000, 30);
  const auto global = calibrate(counts, Variant::kGlobal);
  const auto cond = calibrate(counts, Variant::kConditional8);
  CHECK(global.source_n_max() == 100000);
  const auto gp = global.pmf();
  CHECK(std::abs(std::accumulate(gp.begin(), gp.end(), 0.0) - 1.0) < 1e-12);
  // Posterior mean (c_k + 1) / (N + k_max) computed directly.
  const auto marg = counts.marginal();
  const double n_odd = static_cast<double>(counts.total());
  for (unsigned k = 0; k < 30; ++k) {
    CHECK(gp[k] == doctest::Approx((static_cast<double>(marg[k]) + 1.0) / (n_odd + 30.0)).epsilon(1e-13));
  }
  for (int r = 1; r < 8; r += 2) {
    const auto p = cond.pmf(r);
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);
    for (double x : p) CHECK(x >= 0.0);
  }
  // m = 3 mod 8 always has K = 1.
  const auto p3 = cond.pmf(3);
  CHECK(std::max_element(p3.begin(), p3.end()) == p3.begin());
  CHECK_THROWS_AS(cond.pmf(2), ValidationError);

  const auto sd = global.posterior_sd();
  CHECK(sd[0] > 0.0);
  CHECK(sd[0] < 0.01);
  for (double x : BlockLengthModel::geometric(5).posterior_sd()) CHECK(x == 0.0);
}

TEST_CASE("model json round trip") {
  const auto counts = collect_block_lengths(1000, 12);
  for (Variant v : {Variant::kGlobal, Variant::kConditional8}) {
    const auto m = calibrate(counts, v);
    nlohmann::json j;
    to_json(j, m);
    const auto back = block_length_model_from_json(j);
    CHECK(back.variant() == v);
    CHECK(back.k_max() == 12);
    CHECK(back.concentrations() == m.concentrations());
    CHECK(back.source_n_max() == 1000);
  }
  CHECK(variant_from_string(to_string(Variant::kGeometric)) == Variant::kGeometric);
  CHECK_THROWS_AS(variant_from_string("nope"), ValidationError);
}

TEST_CASE("round_odd") {
  CHECK(round_odd(0.3) == 1);
  CHECK(round_odd(7.4) == 7);
  CHECK(round_odd(6.5) == 7);
  CHECK(round_odd(5.5) == 7);  // ties to even gives 6
  CHECK(round_odd(-4.0) == 1);
  CHECK(round_odd(2.0) == 3);
  CHECK_THROWS_AS(round_odd(NAN), ValidationError);
  CHECK_THROWS_AS(round_odd(INFINITY), ValidationError);

  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double x = 1.0 + 1e6 * rng.uniform();
    const auto r = round_odd(x);
    CHECK(r % 2 == 1);
    CHECK(std::abs(static_cast<double>(r) - x) <= 1.5);
  }
  for (int i = 0; i < 100000; ++i) {
    const double x = -3.0 + 6.0 * rng.uniform();
    CHECK(round_odd(x) % 2 == 1);
  }
}

TEST_CASE("round_odd_quotient agrees with real division for exactly representable inputs") {
  Rng rng(2);
  for (int i = 0; i < 200000; ++i) {
    const std::uint64_t num = rng.uniform_below(std::uint64_t{1} << 50);
    const unsigned k = static_cast<unsigned>(rng.uniform_below(30));
    CHECK(round_odd_quotient(num, k) == round_odd(std::ldexp(static_cast<double>(num), -static_cast<int>(k))));
  }
  CHECK(round_odd_quotient(13, 1) == 7);  // 6.5
  CHECK(round_odd_quotient(11, 1) == 7);  // 5.5
  CHECK(round_odd_quotient(1, 5) == 1);
}

TEST_CASE("block-length sampling frequencies") {
  SUBCASE("degenerate pmf") {
    const BlockLengthModel m(Variant::kGlobal, 5, {spike(5, 1)});
    const BlockLengthSampler s(m);
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) CHECK(s.sample(1, rng) == 1);
  }
  SUBCASE("geometric k = 1 frequency") {
    const auto m = BlockLengthModel::geometric(30);
    const BlockLengthSampler s(m);
    Rng rng(4);
    int ones = 0;
    for (int i = 0; i < 1000000; ++i) ones += s.sample(1, rng) == 1;
    CHECK(std::abs(ones / 1e6 - 0.5) < 0.002);
  }
  SUBCASE("conditional8 uses the row of the residue") {
    std::vector<std::vector<double>> rows(8, std::vector<double>{1.0, 1.0, 1.0});
    rows[1] = {8.0, 1.0, 1.0};
    rows[5] = {1.0, 1.0, 8.0};
    const BlockLengthModel m(Variant::kConditional8, 3, rows);
    const BlockLengthSampler s(m);
    Rng rng(5);
    std::array<int, 3> f1{}, f5{};
    constexpr int kDraws = 200000;
    for (int i = 0; i < kDraws; ++i) {
      ++f1[s.sample(1, rng) - 1];
      ++f5[s.sample(5, rng) - 1];
    }
    for (int k = 0; k < 3; ++k) {
      const double p1 = m.pmf(1)[k];
      const double p5 = m.pmf(5)[k];
      CHECK(std::abs(f1[k] / static_cast<double>(kDraws) - p1) < 5 * std::sqrt(p1 * (1 - p1) / kDraws));
      CHECK(std::abs(f5[k] / static_cast<double>(kDraws) - p5) < 5 * std::sqrt(p5 * (1 - p5) / kDraws));
    }
    CHECK_THROWS_AS(s.sample(2, rng), ValidationError);
  }
  SUBCASE("posterior draws refresh per trajectory") {
    const BlockLengthModel m(Variant::kGlobal, 3, {{2.0, 2.0, 2.0}});
    BlockLengthSampler s(m, PkSource::kPosteriorDraw);
    Rng rng(6);
    s.refresh(rng);
    for (int i = 0; i < 100; ++i) {
      const auto k = s.sample(1, rng);
      CHECK(k >= 1);
      CHECK(k <= 3);
    }
  }
}

TEST_CASE("simulate_tau examples") {
  const auto g = BlockLengthModel::geometric(30);
  const GenConfig cfg;
  Rng rng(7);
  CHECK(simulate_tau(1, g, cfg, rng).steps == 0);
  CHECK(simulate_tau(4, g, cfg, rng).steps == 2);
  CHECK(simulate_tau(1024, g, cfg, rng).steps == 10);
  CHECK_THROWS_AS(simulate_tau(0, g, cfg, rng), ValidationError);

  const BlockLengthSampler sampler(g);
  constexpr int kReps = 10000;
  std::vector<double> taus;
  for (int i = 0; i < kReps; ++i) {
    const auto out = simulate_tau(27, sampler, cfg, rng);
    REQUIRE(out.absorbed);
    taus.push_back(static_cast<double>(out.steps));
  }
  const double mean = std::accumulate(taus.begin(), taus.end(), 0.0) / kReps;
  std::nth_element(taus.begin(), taus.begin() + kReps / 2, taus.end());
  const double median = taus[kReps / 2];

  // Independent oracle: coin-flip block lengths on a separate engine, rounding
  // through long double. Both means estimate the same quantity, which is well
  // below tau(27) = 111 because 27 is an unusually slow start.
  std::mt19937_64 coin(2024);
  double oracle = 0.0, oracle_sq = 0.0;
  for (int i = 0; i < kReps; ++i) {
    std::uint64_t m = 27, steps = 0;
    while (m != 1) {
      unsigned k = 1;
      while (k < 30 && (coin() >> 63)) ++k;
      const long double q = std::nearbyint((3.0L * m + 1.0L) / std::ldexp(1.0L, static_cast<int>(k)));
      m = q <= 1 ? 1 : static_cast<std::uint64_t>(q);
      if (m % 2 == 0) ++m;
      steps += 1 + k;
    }
    oracle += static_cast<double>(steps);
    oracle_sq += static_cast<double>(steps) * static_cast<double>(steps);
  }
  oracle /= kReps;
  const double se = std::sqrt((oracle_sq / kReps - oracle * oracle) / kReps);
  CHECK(std::abs(mean - oracle) < 5 * std::sqrt(2.0) * se);
  CHECK(mean > 0.3 * 111);
  CHECK(mean < 111);
  CHECK(mean > median);  // right-skewed
}

TEST_CASE("simulate_tau is at least v2(n) and equals it only for powers of two") {
  const auto g = BlockLengthModel::geometric(30);
  const BlockLengthSampler s(g);
  const GenConfig cfg;
  Rng rng(8);
  for (std::uint64_t n = 1; n <= 3000; ++n) {
    const auto out = simulate_tau(n, s, cfg, rng);
    REQUIRE(out.absorbed);
    const std::uint64_t v = testing::naive_v2(n);
    CHECK(out.steps >= v);
    const bool odd_phase_empty = (n >> v) == 1;
    CHECK((out.steps == v) == odd_phase_empty);
  }
}

TEST_CASE("step budget") {
  // K = 1 always expands, so the run must stop at the budget.
  const BlockLengthModel up(Variant::kGlobal, 3, {spike(3, 1)});
  GenConfig cfg;
  cfg.max_steps = 500;
  Rng rng(9);
  const auto out = simulate_tau(27, up, cfg, rng);
  CHECK_FALSE(out.absorbed);
  CHECK(out.steps > 0);
  CHECK(out.steps <= cfg.max_steps + 2);

  const auto trace = trace_compare(27, up, cfg, rng);
  CHECK_FALSE(trace.stochastic_absorbed);
  CHECK(trace.stochastic.size() <= cfg.max_steps);
}

TEST_CASE("degenerate K = 2 model") {
  const BlockLengthModel two(Variant::kGlobal, 4, {spike(4, 2)});
  const BlockLengthSampler s(two);
  const GenConfig cfg;
  Rng rng(10);

  // Brute force: every n whose deterministic odd blocks all have K = 2 is
  // reproduced exactly.
  int found = 0;
  for (std::uint64_t n = 1; n <= 100000; ++n) {
    const auto t = odd_block_trace(n);
    if (!std::all_of(t.block_lengths.begin(), t.block_lengths.end(), [](unsigned k) { return k == 2; })) continue;
    ++found;
    CHECK(simulate_tau(n, s, cfg, rng).steps == testing::naive_tau(n));
  }
  CHECK(found > 0);

  // Against an independent iteration of M -> round_odd((3M + 1) / 4) using
  // long double division and nearbyint.
  for (std::uint64_t n = 1; n <= 2000; n += 2) {
    std::uint64_t m = n, steps = 0;
    bool absorbed = true;
    while (m != 1) {
      long double q = std::nearbyint((3.0L * m + 1.0L) / 4.0L);
      std::uint64_t next = q <= 1 ? 1 : static_cast<std::uint64_t>(q);
      if (next % 2 == 0) ++next;
      steps += 3;
      m = next;
      if (steps > 10000) {
        absorbed = false;
        break;
      }
    }
    if (!absorbed) continue;
    CHECK(simulate_tau(n, s, cfg, rng).steps == steps);
  }
}

TEST_CASE("larger block lengths shorten generated trajectories") {
  // Shift the geometric law up by one: P(K = k) = 2^-(k-1) for k >= 2.
  std::vector<double> shifted(30);
  shifted[0] = 1e-300;
  for (unsigned k = 2; k <= 30; ++k) shifted[k - 1] = std::ldexp(1.0, -static_cast<int>(k - 1));
  const BlockLengthModel heavy(Variant::kGlobal, 30, {shifted});
  const auto g = BlockLengthModel::geometric(30);
  const GenConfig cfg;
  const BlockLengthSampler sg(g), sh(heavy);
  Rng rng(11);
  double mean_g = 0.0, mean_h = 0.0;
  for (int i = 0; i < 10000; ++i) {
    mean_g += static_cast<double>(simulate_tau(100000, sg, cfg, rng).steps);
    mean_h += static_cast<double>(simulate_tau(100000, sh, cfg, rng).steps);
  }
  CHECK(mean_h < mean_g);
}

TEST_CASE("log drift") {
  const double log2_3 = std::log2(3.0);
  CHECK(std::abs(log_drift(BlockLengthModel::geometric(30)) - (log2_3 - 2.0)) < 1e-12);
  CHECK(std::abs(log_drift(BlockLengthModel::geometric(3)) - (log2_3 - 2.0)) < 1e-12);
  const BlockLengthModel one(Variant::kGlobal, 4, {spike(4, 1)});
  CHECK(std::abs(log_drift(one) - (log2_3 - 1.0)) < 1e-12);

  const auto counts = collect_block_lengths(200000, 30);
  CHECK(log_drift(calibrate(counts, Variant::kGlobal)) < 0.0);
  const auto cond = calibrate(counts, Variant::kConditional8);
  // Residue 3 always has K = 1: expansion.
  CHECK(log_drift(cond, 3) > 0.0);
  CHECK(log_drift(cond) < 0.0);
}

TEST_CASE("trace_compare") {
  const auto g = BlockLengthModel::geometric(30);
  const GenConfig cfg;
  Rng rng(12);
  const auto t27 = trace_compare(27, g, cfg, rng);
  REQUIRE(t27.deterministic.size() == 41);
  CHECK(t27.deterministic.back() == 0.0);
  CHECK(t27.deterministic.front() == doctest::Approx(std::log2(41.0)));  // (3*27+1)/2 = 41
  CHECK(t27.stochastic_absorbed);
  CHECK(t27.stochastic.back() == 0.0);

  for (std::uint64_t n : {1ull, 128ull}) {
    const auto t = trace_compare(n, g, cfg, rng);
    CHECK(t.deterministic.empty());
    CHECK(t.stochastic.empty());
  }
}
