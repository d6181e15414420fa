#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace ballot {

// FNV-1a, used for domain/config fingerprints in report files. Stable across
// platforms; not cryptographic.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 1469598103934665603ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace ballot
