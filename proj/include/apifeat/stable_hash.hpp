#pragma once

#include <cstdint>
#include <string_view>

// Explicit, platform-stable hash primitives. std::hash is implementation
// defined and must not leak into any persisted artifact or feature value.

namespace apifeat {

constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t state = kFnvOffsetBasis) {
  for (char c : data) {
    state ^= static_cast<std::uint8_t>(c);
    state *= kFnvPrime;
  }
  return state;
}

constexpr std::uint64_t fnv1a64(std::uint64_t value, std::uint64_t state) {
  for (int i = 0; i < 8; ++i) {
    state ^= (value >> (8 * i)) & 0xffu;
    state *= kFnvPrime;
  }
  return state;
}

// Finalizer from the splitmix64 generator; used to derive independent
// per-item seeds from one master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t seeded_hash(std::string_view data, std::uint64_t seed) {
  return fnv1a64(data, splitmix64(seed) ^ kFnvOffsetBasis);
}

}  // namespace apifeat
