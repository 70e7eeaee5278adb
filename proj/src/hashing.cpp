#include "apifeat/hashing.hpp"

#include <cmath>

#include "apifeat/stable_hash.hpp"

namespace apifeat {

HashEncoder HashEncoder::for_integers(int dim) {
  HashEncoder enc;
  enc.dim = dim;
  enc.segment_aware = false;
  return enc;
}

HashEncoder HashEncoder::for_addresses(int dim) {
  HashEncoder enc;
  enc.dim = dim;
  enc.segment_aware = true;
  return enc;
}

int HashEncoder::bucket(std::string_view key) const {
  return static_cast<int>(seeded_hash(key, bucket_seed) %
                          static_cast<std::uint64_t>(dim));
}

int HashEncoder::sign(std::string_view key) const {
  return (seeded_hash(key, sign_seed) & 1u) ? 1 : -1;
}

std::string HashEncoder::address_key(std::string_view name,
                                     std::uint64_t address) const {
  std::string key(name);
  key += '\x1f';
  key += address < segment_boundary ? "user" : "kernel";
  return key;
}

namespace {

// magnitude of an int64 without overflow on INT64_MIN
std::uint64_t abs_u64(std::int64_t v) {
  return v < 0 ? ~static_cast<std::uint64_t>(v) + 1 : static_cast<std::uint64_t>(v);
}

constexpr double kFixedScale = 0x1.0p32;

std::int64_t fixed_term(int sign, std::uint64_t magnitude) {
  double term = static_cast<double>(sign) *
                std::log(static_cast<double>(magnitude) + 1.0);
  return static_cast<std::int64_t>(std::llround(term * kFixedScale));
}

}  // namespace

Eigen::VectorXd hash_encode(const std::vector<Argument>& args, HashKind kind,
                            const HashEncoder& enc) {
  std::vector<std::int64_t> buckets(static_cast<std::size_t>(enc.dim), 0);

  for (const Argument& arg : args) {
    if (kind == HashKind::Integer) {
      if (!arg.value.is_int()) continue;
      buckets[static_cast<std::size_t>(enc.bucket(arg.name))] +=
          fixed_term(enc.sign(arg.name), abs_u64(arg.value.int_value()));
    } else {
      if (!arg.value.is_vaddr()) continue;
      std::string key = enc.address_key(arg.name, arg.value.address());
      buckets[static_cast<std::size_t>(enc.bucket(key))] +=
          fixed_term(enc.sign(key), arg.value.address());
    }
  }

  Eigen::VectorXd out(enc.dim);
  for (int i = 0; i < enc.dim; ++i) {
    out[i] = static_cast<double>(buckets[static_cast<std::size_t>(i)]) / kFixedScale;
  }
  return out;
}

}  // namespace apifeat
