#pragma once

#include <cstddef>
#include <vector>

#include "mxp/tensor.hpp"

namespace mxp {

// Images stored flat (N×I) with the spatial geometry kept alongside so
// convolutional models can view them as N×C×H×W.
struct Dataset {
  Tensor images;                    // N×I, values in [0,1]
  std::vector<std::size_t> labels;  // N, values in [0,10)
  std::size_t channels = 1;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t image_dim() const { return channels * rows * cols; }

  void validate() const {
    if (images.rank() != 2 || images.dim(0) != labels.size()) {
      throw DimensionError("Dataset: images must be N×I with N labels");
    }
    if (images.dim(1) != image_dim()) {
      throw DimensionError("Dataset: geometry does not match image length");
    }
    for (std::size_t l : labels) {
      if (l >= 10) throw ArgumentError("Dataset: label out of [0,10)");
    }
  }

  // Copy of rows [begin, end).
  Dataset slice(std::size_t begin, std::size_t end) const {
    Dataset d;
    d.channels = channels;
    d.rows = rows;
    d.cols = cols;
    const std::size_t I = images.dim(1);
    d.images = Tensor({end - begin, I});
    for (std::size_t n = begin; n < end; ++n) {
      for (std::size_t i = 0; i < I; ++i) {
        d.images(n - begin, i) = images(n, i);
      }
    }
    d.labels.assign(labels.begin() + begin, labels.begin() + end);
    return d;
  }
};

}  // namespace mxp
