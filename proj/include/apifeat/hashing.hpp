#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "apifeat/report.hpp"

namespace apifeat {

enum class HashKind { Integer, Address };

// Signed feature hashing of named numeric parameters. Bucket index and sign
// come from two independently seeded FNV-1a hashes, so both are stable
// across runs, platforms and process restarts. For addresses the key also
// carries the memory segment (user/kernel, split at segment_boundary).
struct HashEncoder {
  int dim = 16;
  bool segment_aware = false;
  std::uint64_t bucket_seed = 0x9d7f3a2c15ebull;
  std::uint64_t sign_seed = 0x51c6a7e08b43ull;
  std::uint64_t segment_boundary = 1ull << 31;

  static HashEncoder for_integers(int dim = 16);
  static HashEncoder for_addresses(int dim = 20);

  int bucket(std::string_view key) const;
  int sign(std::string_view key) const;  // -1 or +1

  std::string address_key(std::string_view name, std::uint64_t address) const;
};

// Bucket i accumulates sign(key) * ln(|value| + 1) over all matching-kind
// arguments whose key hashes to i; key is the parameter name for integers
// and (name, segment) for addresses. Terms are accumulated in 2^-32 fixed
// point, which makes concatenation exactly additive. Arguments of the other
// value kinds are ignored; an empty list encodes to the zero vector.
Eigen::VectorXd hash_encode(const std::vector<Argument>& args, HashKind kind,
                            const HashEncoder& enc);

}  // namespace apifeat
