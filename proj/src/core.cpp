// SPDX-License-Identifier: Apache-2.0
#include "collatz/core.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <memory>
#include <thread>

#include "collatz/errors.hpp"

namespace collatz {

std::uint64_t checked_three_n_plus_one(std::uint64_t n) {
  std::uint64_t r;
  if (__builtin_mul_overflow(n, std::uint64_t{3}, &r) || __builtin_add_overflow(r, std::uint64_t{1}, &r)) {
    throw OverflowError(n);
  }
  return r;
}

std::uint64_t tau_direct(std::uint64_t n, std::uint64_t max_steps) {
  if (n == 0) throw ValidationError("tau_direct: n must be >= 1");
  std::uint64_t steps = 0;
  while (n != 1) {
    if (steps == max_steps) throw NonConvergenceError(n, max_steps);
    n = (n & 1) ? checked_three_n_plus_one(n) : n >> 1;
    ++steps;
  }
  return steps;
}

std::uint64_t tau_checksum(std::span<const TauTable::value_type> values) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto v : values) {
    h = (h ^ (v & 0xffu)) * 0x100000001b3ULL;
    h = (h ^ (v >> 8)) * 0x100000001b3ULL;
  }
  return h;
}

TauTable::TauTable(std::uint64_t n_max, std::vector<value_type> values)
    : n_max_(n_max), values_(std::move(values)) {
  if (n_max_ == 0 || values_.size() != n_max_) {
    throw ValidationError("TauTable: value count does not match n_max");
  }
  checksum_ = tau_checksum(values_);
}

std::uint32_t TauTable::at(std::uint64_t n) const {
  if (n == 0 || n > n_max_) {
    throw ValidationError("index " + std::to_string(n) + " outside tau table [1, " +
                          std::to_string(n_max_) + "]");
  }
  return values_[n - 1];
}

namespace {

TauTable::value_type narrow(std::uint64_t tau, std::uint64_t n) {
  if (tau > std::numeric_limits<TauTable::value_type>::max()) {
    throw ValidationError("tau(" + std::to_string(n) + ") = " + std::to_string(tau) +
                          " does not fit the 16-bit table width");
  }
  return static_cast<TauTable::value_type>(tau);
}

void fill_sequential(std::vector<TauTable::value_type>& v, std::uint64_t n_max) {
  // v[i-1] = tau(i)
  v[0] = 0;
  for (std::uint64_t i = 2; i <= n_max; ++i) {
    std::uint64_t x = i;
    std::uint64_t k = 0;
    while (x >= i) {
      x = (x & 1) ? checked_three_n_plus_one(x) : x >> 1;
      if (++k > kDefaultMaxSteps) throw NonConvergenceError(i, kDefaultMaxSteps);
    }
    v[i - 1] = narrow(k + v[x - 1], i);
  }
}

void fill_parallel(std::vector<TauTable::value_type>& v, std::uint64_t n_max, unsigned threads) {
  constexpr std::uint64_t kBlock = 1u << 16;
  const std::uint64_t n_blocks = (n_max + kBlock - 1) / kBlock;
  auto done = std::make_unique<std::atomic<bool>[]>(n_blocks);
  for (std::uint64_t b = 0; b < n_blocks; ++b) done[b].store(false, std::memory_order_relaxed);
  std::atomic<std::uint64_t> next{0};

  auto worker = [&] {
    for (std::uint64_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
      const std::uint64_t lo = b * kBlock + 1;
      const std::uint64_t hi = std::min(n_max, lo + kBlock - 1);
      for (std::uint64_t i = lo; i <= hi; ++i) {
        if (i == 1) {
          v[0] = 0;
          continue;
        }
        auto usable = [&](std::uint64_t x) {
          if (x == 1) return true;
          if (x >= i) return false;
          if (x >= lo) return true;
          return done[(x - 1) / kBlock].load(std::memory_order_acquire);
        };
        std::uint64_t x = i;
        std::uint64_t k = 0;
        do {
          x = (x & 1) ? checked_three_n_plus_one(x) : x >> 1;
          if (++k > kDefaultMaxSteps) throw NonConvergenceError(i, kDefaultMaxSteps);
        } while (!usable(x));
        v[i - 1] = narrow(k + (x == 1 ? 0 : v[x - 1]), i);
      }
      done[b].store(true, std::memory_order_release);
    }
  };

  std::vector<std::jthread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        next.store(n_blocks);
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

TauTable build_tau_table(std::uint64_t n_max, unsigned threads) {
  if (n_max == 0) throw ValidationError("build_tau_table: n_max must be >= 1");
  std::vector<TauTable::value_type> values(n_max);
  if (threads <= 1 || n_max < (1u << 17)) {
    fill_sequential(values, n_max);
  } else {
    fill_parallel(values, n_max, threads);
  }
  return TauTable(n_max, std::move(values));
}

Trajectory trajectory(std::uint64_t n, std::uint64_t max_steps) {
  if (n == 0) throw ValidationError("trajectory: n must be >= 1");
  Trajectory t{n, {n}};
  while (n != 1) {
    if (t.states.size() > max_steps) throw NonConvergenceError(t.start_n, max_steps);
    n = (n & 1) ? checked_three_n_plus_one(n) : n >> 1;
    t.states.push_back(n);
  }
  return t;
}

std::uint64_t OddBlockTrace::total_steps() const noexcept {
  std::uint64_t s = initial_halvings;
  for (auto k : block_lengths) s += 1 + k;
  return s;
}

OddBlockTrace odd_block_trace(std::uint64_t n, std::uint64_t max_steps) {
  if (n == 0) throw ValidationError("odd_block_trace: n must be >= 1");
  OddBlockTrace t;
  t.start_n = n;
  t.initial_halvings = v2(n);
  std::uint64_t m = n >> t.initial_halvings;
  std::uint64_t steps = t.initial_halvings;
  while (m != 1) {
    if (steps > max_steps) throw NonConvergenceError(n, max_steps);
    const std::uint64_t up = checked_three_n_plus_one(m);
    const unsigned k = v2(up);
    t.odd_sequence.push_back(m);
    t.block_lengths.push_back(k);
    steps += 1 + k;
    m = up >> k;
  }
  t.terminal = m;
  return t;
}

std::vector<std::uint64_t> BlockLengthCounts::marginal() const {
  std::vector<std::uint64_t> out(k_cap, 0);
  for (const auto& row : counts) {
    for (std::size_t k = 0; k < row.size(); ++k) out[k] += row[k];
  }
  return out;
}

std::uint64_t BlockLengthCounts::total() const {
  std::uint64_t s = 0;
  for (auto c : marginal()) s += c;
  return s;
}

BlockLengthCounts collect_block_lengths(std::uint64_t n_max, unsigned k_cap, unsigned threads) {
  if (n_max == 0) throw ValidationError("collect_block_lengths: n_max must be >= 1");
  if (k_cap == 0) throw ValidationError("collect_block_lengths: k_cap must be >= 1");
  if (n_max > (std::numeric_limits<std::uint64_t>::max() - 1) / 3) throw OverflowError(n_max);
  BlockLengthCounts out;
  out.n_max = n_max;
  out.k_cap = k_cap;
  for (auto& row : out.counts) row.assign(k_cap, 0);

  auto count_range = [k_cap](std::uint64_t first_odd, std::uint64_t last, BlockLengthCounts& acc) {
    for (std::uint64_t m = first_odd; m <= last; m += 2) {
      const unsigned k = std::min(v2(checked_three_n_plus_one(m)), k_cap);
      ++acc.counts[m & 7][k - 1];
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1 || n_max < (1u << 16)) {
    count_range(1, n_max, out);
    return out;
  }
  // Disjoint odd ranges, merged by addition in thread order.
  std::vector<BlockLengthCounts> partial(threads, out);
  const std::uint64_t odd_total = (n_max + 1) / 2;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t a = odd_total * t / threads;
      const std::uint64_t b = odd_total * (t + 1) / threads;
      if (a == b) continue;
      pool.emplace_back([&, a, b, t] { count_range(2 * a + 1, 2 * b - 1, partial[t]); });
    }
  }
  for (const auto& p : partial) {
    for (int r = 0; r < kResidues; ++r) {
      for (unsigned k = 0; k < k_cap; ++k) out.counts[r][k] += p.counts[r][k];
    }
  }
  return out;
}

}  // namespace collatz
