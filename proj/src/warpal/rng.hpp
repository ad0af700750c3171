#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace warpal {

// Deterministic seed derivation: the same (root, label) pair always yields the same child seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);

// Thin wrapper over mt19937_64 with library-independent uniform/normal conversions,
// so traces are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // standard normal
  std::uint64_t below(std::uint64_t n);   // uniform integer in [0, n)

  [[nodiscard]] Rng child(std::string_view label) { return Rng(derive_seed(next_u64(), label)); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace warpal
