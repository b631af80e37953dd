#pragma once

#include <vector>

#include "localmax/matrix.hpp"

namespace localmax {

/// Per-feature affine normalization fit on a training split.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> std; // 0 marks a constant feature (mapped to 0)

  Matrix apply(const Matrix& x) const;
  bool operator==(const Standardization&) const = default;
};

Standardization fit_standardization(const Matrix& x);

} // namespace localmax
