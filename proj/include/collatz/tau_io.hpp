// SPDX-License-Identifier: Apache-2.0
#pragma once

// Binary tau-table file, little-endian:
//   "CTAU" | version u32 | n_max u64 | value width u8 | checksum u64 | payload
// The payload holds tau(1), tau(2), ... packed at the declared width.

#include <cstdint>
#include <filesystem>

#include "collatz/core.hpp"

namespace collatz {

inline constexpr std::uint32_t kTauFileVersion = 1;

void write_tau_table(const TauTable& table, const std::filesystem::path& path);

/// Reads and validates magic, version, width and checksum.
TauTable read_tau_table(const std::filesystem::path& path);

/// Header-only check: true when the file exists, parses, and its stored
/// checksum matches the payload and the requested n_max.
bool tau_table_file_valid(const std::filesystem::path& path, std::uint64_t n_max);

/// CSV with columns n,tau.
void write_tau_csv(const TauTable& table, const std::filesystem::path& path);

}  // namespace collatz
