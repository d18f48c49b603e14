#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fedfair {

// Deterministic, platform-independent PRNG (splitmix64). The standard
// library's distributions and std::shuffle are unspecified across
// implementations, so all sampling primitives live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0. Modulo rejection keeps the
  // result unbiased and reproducible.
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via inverse-CDF (Acklam's rational approximation).
  double normal();

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in selection order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_;
};

// Stable 64-bit hash of a tag string (FNV-1a).
std::uint64_t hash_tag(std::string_view tag);

// Derives a stage seed from a master seed and a stage name. Documented in
// docs/determinism.md; changing this breaks byte-reproducibility of outputs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::string_view sub);

// Identity permutation [0, n) shuffled by rng.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace fedfair
