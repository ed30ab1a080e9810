// SPDX-License-Identifier: Apache-2.0
#include "collatz/tau_io.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "collatz/errors.hpp"

namespace collatz {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'T', 'A', 'U'};

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw IoError("tau table: truncated header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

struct Header {
  std::uint32_t version;
  std::uint64_t n_max;
  std::uint8_t width;
  std::uint64_t checksum;
};

Header read_header(std::istream& is, const std::filesystem::path& path) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(path.string() + ": not a CTAU tau-table file");
  }
  Header h{};
  h.version = get_le<std::uint32_t>(is);
  h.n_max = get_le<std::uint64_t>(is);
  h.width = get_le<std::uint8_t>(is);
  h.checksum = get_le<std::uint64_t>(is);
  if (h.version != kTauFileVersion) {
    throw IoError(path.string() + ": unsupported format version " + std::to_string(h.version));
  }
  if (h.width != TauTable::kValueWidth) {
    throw IoError(path.string() + ": unsupported value width " + std::to_string(h.width));
  }
  return h;
}

}  // namespace

void write_tau_table(const TauTable& table, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kTauFileVersion);
  put_le<std::uint64_t>(os, table.n_max());
  put_le<std::uint8_t>(os, TauTable::kValueWidth);
  put_le<std::uint64_t>(os, table.checksum());
  std::vector<unsigned char> payload(table.values().size() * 2);
  for (std::size_t i = 0; i < table.values().size(); ++i) {
    payload[2 * i] = static_cast<unsigned char>(table.values()[i] & 0xff);
    payload[2 * i + 1] = static_cast<unsigned char>(table.values()[i] >> 8);
  }
  os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

TauTable read_tau_table(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const Header h = read_header(is, path);
  std::vector<unsigned char> payload(h.n_max * 2);
  if (!is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()))) {
    throw IoError(path.string() + ": truncated payload");
  }
  std::vector<TauTable::value_type> values(h.n_max);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<TauTable::value_type>(payload[2 * i] | (payload[2 * i + 1] << 8));
  }
  TauTable table(h.n_max, std::move(values));
  if (table.checksum() != h.checksum) throw IoError(path.string() + ": checksum mismatch");
  return table;
}

bool tau_table_file_valid(const std::filesystem::path& path, std::uint64_t n_max) {
  if (!std::filesystem::exists(path)) return false;
  try {
    std::ifstream is(path, std::ios::binary);
    const Header h = read_header(is, path);
    if (h.n_max != n_max) return false;
    return read_tau_table(path).checksum() == h.checksum;
  } catch (const Error&) {
    return false;
  }
}

void write_tau_csv(const TauTable& table, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "n,tau\n";
  for (std::uint64_t n = 1; n <= table.n_max(); ++n) os << n << ',' << table[n] << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace collatz
