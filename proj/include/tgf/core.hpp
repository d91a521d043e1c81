#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tgf {

using Bytes = std::vector<uint8_t>;
using FileId = std::string;

// Module-relative program counter paired with the inode of the module it
// belongs to. Inodes disambiguate same-named binaries across firmware images.
struct CodeLocation {
  uint64_t inode = 0;
  uint64_t pc = 0;

  auto operator<=>(const CodeLocation&) const = default;
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Splitting would produce an empty region (leading, trailing, or doubled
// delimiter in the raw capture).
struct ConsecutiveDelimiters : Error {
  using Error::Error;
};

// Lookup sequence longer than the index was built for.
struct SeqTooLong : Error {
  using Error::Error;
};

// Even the minimum indexable length blows the memory budget.
struct MemoryFloorReached : Error {
  using Error::Error;
};

struct InvalidScenario : Error {
  using Error::Error;
};

// Crash attributed to a process the scenario's process table does not know.
struct UnknownTopology : Error {
  using Error::Error;
};

// Asked for the attribution window of a region whose request never completed.
struct NoWindow : Error {
  using Error::Error;
};

inline uint64_t fnv1a64(const void* data, size_t n) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const Bytes& b) { return fnv1a64(b.data(), b.size()); }
inline uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

// splitmix64 finalizer; used to spread (inode, pc) pairs over the bitmap.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline Bytes str_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string bytes_str(const Bytes& b) {
  return std::string(b.begin(), b.end());
}

std::string hex_u64(uint64_t v);              // lowercase, 0x-prefixed, no padding
std::string hex_byte(uint8_t v);              // two lowercase digits, no prefix
uint64_t parse_u64(const std::string& tok);   // decimal, throws Error
uint64_t parse_hex(const std::string& tok);   // with or without 0x, throws Error

std::vector<std::string> split_ws(const std::string& line);

}  // namespace tgf
