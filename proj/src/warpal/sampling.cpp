#include "warpal/sampling.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <numeric>

namespace warpal {

namespace {

struct DirectionSeed {
  std::uint32_t poly;  // primitive polynomial including leading and trailing terms
  std::array<std::uint32_t, 8> m;
};

// new-joe-kuo-6.21201, first 16 dimensions.
constexpr std::array<DirectionSeed, SobolSequence::kMaxDim> kDirectionSeeds{{
    {1, {1, 0, 0, 0, 0, 0, 0, 0}},
    {3, {1, 0, 0, 0, 0, 0, 0, 0}},
    {7, {1, 3, 0, 0, 0, 0, 0, 0}},
    {11, {1, 3, 1, 0, 0, 0, 0, 0}},
    {13, {1, 1, 1, 0, 0, 0, 0, 0}},
    {19, {1, 1, 3, 3, 0, 0, 0, 0}},
    {25, {1, 3, 5, 13, 0, 0, 0, 0}},
    {37, {1, 1, 5, 5, 17, 0, 0, 0}},
    {41, {1, 1, 5, 5, 5, 0, 0, 0}},
    {47, {1, 1, 7, 11, 19, 0, 0, 0}},
    {55, {1, 1, 5, 1, 1, 0, 0, 0}},
    {59, {1, 1, 1, 3, 11, 0, 0, 0}},
    {61, {1, 3, 5, 5, 31, 0, 0, 0}},
    {67, {1, 3, 3, 9, 7, 49, 0, 0}},
    {91, {1, 1, 1, 15, 21, 21, 0, 0}},
    {97, {1, 3, 1, 13, 27, 49, 0, 0}},
}};

constexpr int kBits = SobolSequence::kBits;

std::vector<std::uint32_t> base_directions(int d) {
  std::vector<std::uint32_t> v(kBits);
  if (d == 0) {
    for (int j = 0; j < kBits; ++j) v[j] = std::uint32_t{1} << (kBits - 1 - j);
    return v;
  }
  const auto& seed = kDirectionSeeds[d];
  const int degree = std::bit_width(seed.poly) - 1;
  std::vector<std::uint64_t> m(kBits);
  for (int j = 0; j < degree; ++j) m[j] = seed.m[j];
  for (int j = degree; j < kBits; ++j) {
    std::uint64_t mj = m[j - degree] ^ (m[j - degree] << degree);
    for (int k = 1; k < degree; ++k) {
      if ((seed.poly >> (degree - k)) & 1U) mj ^= m[j - k] << k;
    }
    m[j] = mj;
  }
  for (int j = 0; j < kBits; ++j) v[j] = static_cast<std::uint32_t>(m[j] << (kBits - 1 - j));
  return v;
}

}  // namespace

SobolSequence::SobolSequence(int dim, std::optional<std::uint64_t> scramble_seed) : dim_(dim) {
  require(dim >= 1 && dim <= kMaxDim, ErrorCode::invalid_argument, "sobol: dimension out of range");
  directions_.resize(static_cast<std::size_t>(dim) * kBits);
  state_.assign(dim, 0);
  std::optional<Rng> rng;
  if (scramble_seed) rng.emplace(*scramble_seed);
  for (int d = 0; d < dim; ++d) {
    auto v = base_directions(d);
    if (rng) {
      // Lower-triangular binary matrix with unit diagonal, rows indexed from the most significant bit.
      std::array<std::uint32_t, kBits> rows{};
      for (int i = 0; i < kBits; ++i) {
        const std::uint32_t diag = std::uint32_t{1} << (kBits - 1 - i);
        const std::uint32_t above = i == 0 ? 0U : ~((diag << 1) - 1U);  // bits more significant than diag
        rows[i] = diag | (static_cast<std::uint32_t>(rng->next_u64()) & above);
      }
      for (auto& vj : v) {
        std::uint32_t out = 0;
        for (int i = 0; i < kBits; ++i) {
          if (std::popcount(rows[i] & vj) & 1) out |= std::uint32_t{1} << (kBits - 1 - i);
        }
        vj = out;
      }
      state_[d] = static_cast<std::uint32_t>(rng->next_u64());
    }
    std::copy(v.begin(), v.end(), directions_.begin() + static_cast<std::ptrdiff_t>(d) * kBits);
  }
}

void SobolSequence::advance() {
  const int c = std::countr_one(index_);
  require(c < kBits, ErrorCode::invalid_argument, "sobol: sequence exhausted");
  for (int d = 0; d < dim_; ++d) state_[d] ^= directions_[static_cast<std::size_t>(d) * kBits + c];
  ++index_;
}

Matrix SobolSequence::next(Index n) {
  Matrix out(n, dim_);
  for (Index i = 0; i < n; ++i) {
    for (int d = 0; d < dim_; ++d) out(i, d) = static_cast<double>(state_[d]) * 0x1.0p-32;
    advance();
  }
  return out;
}

void SobolSequence::skip(std::uint64_t n) {
  for (std::uint64_t i = 0; i < n; ++i) advance();
}

Matrix sobol_points(Index n, int dim, std::optional<std::uint64_t> scramble_seed) {
  SobolSequence seq(dim, scramble_seed);
  return seq.next(n);
}

Matrix lhs_sample(Index n, int dim, Rng& rng) {
  require(n >= 1, ErrorCode::invalid_argument, "lhs_sample: n must be >= 1");
  Matrix out(n, dim);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (int d = 0; d < dim; ++d) {
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(perm[i], perm[j]);
    }
    for (Index i = 0; i < n; ++i) {
      double v = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
      // Guard the open upper end and keep each value inside its stratum.
      out(i, d) = std::min(v, std::nextafter((static_cast<double>(perm[i]) + 1.0) / static_cast<double>(n), 0.0));
    }
  }
  return out;
}

Matrix farthest_point_sample(const Matrix& pool, Index n) {
  require(n >= 1, ErrorCode::invalid_argument, "farthest_point_sample: n must be >= 1");
  require(pool.rows() >= n, ErrorCode::invalid_argument, "farthest_point_sample: pool smaller than n");
  const Index m = pool.rows();
  const Vector centre = Vector::Constant(pool.cols(), 0.5);
  Index first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < m; ++i) {
    const double d = (pool.row(i).transpose() - centre).squaredNorm();
    if (d < best) {
      best = d;
      first = i;
    }
  }
  Matrix out(n, pool.cols());
  Vector min_dist(m);
  out.row(0) = pool.row(first);
  for (Index i = 0; i < m; ++i) min_dist[i] = (pool.row(i) - pool.row(first)).squaredNorm();
  for (Index k = 1; k < n; ++k) {
    Index pick = 0;
    min_dist.maxCoeff(&pick);  // first maximal index on ties
    out.row(k) = pool.row(pick);
    for (Index i = 0; i < m; ++i) min_dist[i] = std::min(min_dist[i], (pool.row(i) - pool.row(pick)).squaredNorm());
  }
  return out;
}

}  // namespace warpal
