#include "rscatter/dataset.hpp"

#include <stdexcept>

namespace rscatter {

Dataset::Dataset(Matrix rows, std::optional<CenterRecord> center_meta)
    : rows_(std::move(rows)), center_meta_(std::move(center_meta)) {
  if (rows_.cols() < 1) throw std::invalid_argument("Dataset: dimension q must be at least 1");
  if (center_meta_ && center_meta_->center.size() != rows_.cols()) {
    throw std::invalid_argument("Dataset: center dimension does not match data");
  }
}

}  // namespace rscatter
