#pragma once

#include "warpal/common.hpp"
#include "warpal/rng.hpp"

#include <cstdint>
#include <optional>

namespace warpal {

// Sobol low-discrepancy sequence (Joe-Kuo direction numbers, Gray-code order).
// Scrambling applies a random linear matrix scramble followed by a digital shift.
class SobolSequence {
 public:
  static constexpr int kMaxDim = 16;
  static constexpr int kBits = 32;

  explicit SobolSequence(int dim, std::optional<std::uint64_t> scramble_seed = std::nullopt);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  // Next n points as rows of an n x dim matrix.
  Matrix next(Index n);
  void skip(std::uint64_t n);

 private:
  int dim_;
  std::vector<std::uint32_t> directions_;  // dim_ x kBits
  std::vector<std::uint32_t> state_;
  std::uint64_t index_ = 0;

  void advance();
};

// First n points of a (possibly scrambled) Sobol sequence in [0,1)^dim.
Matrix sobol_points(Index n, int dim, std::optional<std::uint64_t> scramble_seed = std::nullopt);

// Latin hypercube sample: each column, scaled by n and floored, is a permutation of 0..n-1.
Matrix lhs_sample(Index n, int dim, Rng& rng);

// Greedy max-min subset of the pool, seeded with the pool row nearest the domain centre.
Matrix farthest_point_sample(const Matrix& pool, Index n);

}  // namespace warpal
