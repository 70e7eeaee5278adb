#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace apifeat {

// mt19937_64 with hand-rolled output transforms. The engine's output stream
// is pinned by the standard; std::uniform_*_distribution is not, so every
// draw that ends up in an artifact goes through these instead.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform in [0, n); n must be positive
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling keeps the draw unbiased and fully deterministic
    std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // sample k distinct indices from [0, n) in selection order
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

private:
  std::mt19937_64 engine_;
};

inline std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n,
                                                                std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  if (k > n) k = n;
  std::vector<std::size_t> picked;
  picked.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + below(n - i);
    std::swap(pool[i], pool[j]);
    picked.push_back(pool[i]);
  }
  return picked;
}

}  // namespace apifeat
