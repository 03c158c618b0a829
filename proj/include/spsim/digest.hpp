#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace spsim::digest {

// FNV-1a 64-bit, hex encoded. Stable across runs and platforms.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace spsim::digest
