// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exact integer Collatz dynamics.
//
// T(n) = n/2 for even n, 3n+1 for odd n; tau(n) is the number of T-steps from
// n to 1. All intermediate arithmetic is 64-bit and overflow-checked.

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace collatz {

inline constexpr std::uint64_t kDefaultMaxSteps = 1'000'000;

/// Largest k with 2^k | n. Requires n >= 1.
constexpr unsigned v2(std::uint64_t n) noexcept { return static_cast<unsigned>(std::countr_zero(n)); }

/// 3n+1, throwing OverflowError instead of wrapping.
std::uint64_t checked_three_n_plus_one(std::uint64_t n);

/// Steps from n to 1 by plain iteration.
/// Throws NonConvergenceError if more than max_steps steps are needed.
std::uint64_t tau_direct(std::uint64_t n, std::uint64_t max_steps = kDefaultMaxSteps);

/// Dense tau(1..n_max) table. Values are 16-bit (tau <= 685 below 10^7);
/// construction throws if a value does not fit.
class TauTable {
 public:
  using value_type = std::uint16_t;
  static constexpr std::uint8_t kValueWidth = sizeof(value_type);

  TauTable() = default;
  TauTable(std::uint64_t n_max, std::vector<value_type> values);

  std::uint64_t n_max() const noexcept { return n_max_; }
  /// tau(n), 1-based. Throws ValidationError when n is out of range.
  std::uint32_t at(std::uint64_t n) const;
  std::uint32_t operator[](std::uint64_t n) const noexcept { return values_[n - 1]; }
  std::span<const value_type> values() const noexcept { return values_; }
  std::uint64_t checksum() const noexcept { return checksum_; }

 private:
  std::uint64_t n_max_ = 0;
  std::vector<value_type> values_;
  std::uint64_t checksum_ = 0;
};

/// FNV-1a over the little-endian 16-bit encoding of the values.
std::uint64_t tau_checksum(std::span<const TauTable::value_type> values) noexcept;

/// Memoized construction: each trajectory is followed only until it drops
/// below its start (or into an already-filled range), then tau(i) = k + tau(m).
/// threads == 1 fills sequentially in ascending order. threads > 1 hands out
/// ascending blocks dynamically and falls back to plain iteration whenever the
/// needed entry belongs to an unfinished block; the result is identical.
TauTable build_tau_table(std::uint64_t n_max, unsigned threads = 1);

struct Trajectory {
  std::uint64_t start_n = 0;
  std::vector<std::uint64_t> states;  // start_n, T(start_n), ..., 1
};

Trajectory trajectory(std::uint64_t n, std::uint64_t max_steps = kDefaultMaxSteps);

/// Odd-to-odd form of a trajectory: n = 2^v2(n) m0, m_{j+1} = (3 m_j + 1) / 2^K_j.
struct OddBlockTrace {
  std::uint64_t start_n = 0;
  unsigned initial_halvings = 0;
  std::vector<std::uint64_t> odd_sequence;  // m_0 .. m_{J-1}
  std::vector<unsigned> block_lengths;      // K_0 .. K_{J-1}
  std::uint64_t terminal = 1;               // m_J

  /// v2(n) + sum_j (1 + K_j); equals tau(start_n) for a complete trace.
  std::uint64_t total_steps() const noexcept;
};

OddBlockTrace odd_block_trace(std::uint64_t n, std::uint64_t max_steps = kDefaultMaxSteps);

inline constexpr int kResidues = 8;

/// counts[r][k-1]: number of odd m <= n_max with m mod 8 == r and
/// min(v2(3m+1), k_cap) == k. Rows for even r stay zero.
struct BlockLengthCounts {
  std::uint64_t n_max = 0;
  unsigned k_cap = 0;
  std::array<std::vector<std::uint64_t>, kResidues> counts;

  std::vector<std::uint64_t> marginal() const;
  std::uint64_t total() const;
};

BlockLengthCounts collect_block_lengths(std::uint64_t n_max, unsigned k_cap, unsigned threads = 1);

}  // namespace collatz
