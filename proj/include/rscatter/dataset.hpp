#pragma once

#include <optional>
#include <string>

#include "rscatter/matcore.hpp"

namespace rscatter {

/// Location that was subtracted from a dataset's rows.
struct CenterRecord {
  std::string method;
  Vector center;
};

/// n observations in R^q stored as the rows of an n x q matrix.
class Dataset {
 public:
  Dataset() = default;
  /// q must be at least 1; n may be zero.
  explicit Dataset(Matrix rows, std::optional<CenterRecord> center_meta = std::nullopt);

  Index n() const { return rows_.rows(); }
  Index q() const { return rows_.cols(); }
  const Matrix& rows() const { return rows_; }
  auto row(Index i) const { return rows_.row(i); }

  const std::optional<CenterRecord>& center_meta() const { return center_meta_; }

 private:
  Matrix rows_;
  std::optional<CenterRecord> center_meta_;
};

}  // namespace rscatter
