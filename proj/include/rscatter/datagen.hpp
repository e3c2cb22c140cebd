#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <variant>

#include "rscatter/dataset.hpp"

namespace rscatter {

/// Engine keyed by (seed, key...) so that any row or replication can be
/// regenerated on its own, in any order or thread.
std::mt19937_64 keyed_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

struct GeneratorSpec {
  enum class Distribution { kGaussian, kStudentT };

  Distribution distribution = Distribution::kGaussian;
  /// Degrees of freedom for kStudentT.
  double dof = 3.0;
  SymMatrix shape = SymMatrix::identity(2);
  Index n = 0;
  std::uint64_t seed = 0;
};

/// Elliptical sample x = A z (gaussian) or A z / sqrt(w / dof) (student t),
/// z ~ N(0, I), w ~ chi^2(dof), A the symmetric square root of the shape.
Dataset sample(const GeneratorSpec& spec);

/// All x_i - x_j, i < j.
Dataset pairwise_differences(const Dataset& data);

struct Rotate {
  Matrix q;
};
struct Scale {
  double alpha;
};
struct Translate {
  Vector a;
};
using Transform = std::variant<Rotate, Scale, Translate>;

/// Row-wise x -> Q x, alpha x, or x + a. Rotations must be orthogonal within 1e-10.
Dataset transform(const Dataset& data, const Transform& op);

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
Matrix random_orthogonal(Index q, std::uint64_t seed);

}  // namespace rscatter
