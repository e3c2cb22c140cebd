#include "rscatter/datagen.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rscatter {

std::mt19937_64 keyed_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (key.size() + 1));
  const auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (std::uint64_t k : key) push(k);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

Dataset sample(const GeneratorSpec& spec) {
  if (spec.n < 0) throw std::invalid_argument("sample: n must be non-negative");
  const bool student = spec.distribution == GeneratorSpec::Distribution::kStudentT;
  if (student && !(spec.dof > 0.0)) throw std::invalid_argument("sample: dof must be > 0");
  const Index q = spec.shape.dim();
  const Matrix root = SpdMatrix(spec.shape).sqrt();

  Matrix rows(spec.n, q);
  for (Index i = 0; i < spec.n; ++i) {
    auto rng = keyed_engine(spec.seed, {static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> normal;
    Vector z(q);
    for (Index j = 0; j < q; ++j) z(j) = normal(rng);
    Vector x = root * z;
    if (student) {
      std::chi_squared_distribution<double> chi2(spec.dof);
      x /= std::sqrt(chi2(rng) / spec.dof);
    }
    rows.row(i) = x.transpose();
  }
  return Dataset(std::move(rows));
}

Dataset pairwise_differences(const Dataset& data) {
  const Index n = data.n();
  if (n < 2) throw std::invalid_argument("pairwise_differences: need at least 2 observations");
  Matrix rows(n * (n - 1) / 2, data.q());
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) rows.row(k++) = data.row(i) - data.row(j);
  }
  return Dataset(std::move(rows), CenterRecord{"fixed", Vector::Zero(data.q())});
}

Dataset transform(const Dataset& data, const Transform& op) {
  const Index q = data.q();
  Matrix rows = std::visit(
      [&](const auto& t) -> Matrix {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, Rotate>) {
          if (t.q.rows() != q || t.q.cols() != q) {
            throw std::invalid_argument("transform: rotation has the wrong dimension");
          }
          if ((t.q * t.q.transpose() - Matrix::Identity(q, q)).norm() > 1e-10) {
            throw std::invalid_argument("transform: matrix is not orthogonal");
          }
          return data.rows() * t.q.transpose();
        } else if constexpr (std::is_same_v<T, Scale>) {
          return t.alpha * data.rows();
        } else {
          if (t.a.size() != q) {
            throw std::invalid_argument("transform: translation has the wrong dimension");
          }
          return data.rows().rowwise() + t.a.transpose();
        }
      },
      op);
  return Dataset(std::move(rows));
}

Matrix random_orthogonal(Index q, std::uint64_t seed) {
  auto rng = keyed_engine(seed, {0x6f727468ULL});
  std::normal_distribution<double> normal;
  Matrix g(q, q);
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < q; ++j) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix qm = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < q; ++j) {
    if (r(j, j) < 0.0) qm.col(j) *= -1.0;
  }
  return qm;
}

}  // namespace rscatter
