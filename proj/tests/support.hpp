#pragma once

#include <cstdint>
#include <random>

#include "rscatter/datagen.hpp"
#include "rscatter/matcore.hpp"

namespace rscatter::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = z(rng);
  }
  return m;
}

inline SymMatrix random_symmetric(Index q, std::uint64_t seed) {
  const Matrix a = random_matrix(q, q, seed);
  return SymMatrix(0.5 * (a + a.transpose()));
}

inline SpdMatrix random_spd(Index q, std::uint64_t seed) {
  const Matrix a = random_matrix(q, q, seed);
  return SpdMatrix(SymMatrix(a * a.transpose() + 0.5 * Matrix::Identity(q, q)));
}

inline Dataset gaussian_data(Index n, Index q, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.shape = SymMatrix::identity(q);
  spec.n = n;
  spec.seed = seed;
  return sample(spec);
}

inline double frob(const Matrix& a, const Matrix& b) { return (a - b).norm(); }

}  // namespace rscatter::testing
