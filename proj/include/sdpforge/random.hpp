#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sdpforge {

// Seeded generator whose output sequence is identical on every platform.
//
// std::mt19937_64 has a fully specified sequence, but the standard
// distributions (and std::shuffle) do not, so all derived draws go through
// the helpers below instead:
//   uniform_index(n)  rejection sampling on the top bits, no modulo bias
//   uniform_real()    53 high bits scaled to [0, 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::size_t uniform_index(std::size_t n);
  double uniform_real();
  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform_real();
  }

  // Partial Fisher-Yates: the first k entries of a random permutation of
  // [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Mixes a base seed with a tag (FNV-1a over the tag, then splitmix64) so
// that independent streams can be derived from a single user-facing seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

}  // namespace sdpforge
