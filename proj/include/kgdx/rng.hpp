#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace kgdx {

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

/// Stable child seed: splitmix64 over (seed, fnv1a64(label)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// Seeded generator whose draws are identical across standard libraries.
/// (std::uniform_int_distribution is implementation-defined, so bounded draws
/// use rejection sampling directly on the engine output.)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    if (items.empty()) throw std::invalid_argument("Rng::pick on empty list");
    return items[below(items.size())];
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  double unit();  // uniform in [0, 1)

 private:
  std::mt19937_64 engine_;
};

}  // namespace kgdx
