#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace emotok {

// All randomness flows from one run seed; named substreams (split, negatives,
// masking, init, ...) are derived so each pipeline stage can be reproduced on
// its own.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : name) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  h ^= seed + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view substream) {
  return std::mt19937_64(substream_seed(seed, substream));
}

}  // namespace emotok
