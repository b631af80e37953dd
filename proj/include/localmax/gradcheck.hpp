#pragma once

#include <functional>
#include <span>

#include "localmax/network.hpp"

namespace localmax {

/// Scalar loss of a network output. When `grad` is non-null it receives
/// d loss / d output (same shape as `output`).
using OutputLoss = std::function<double(const Matrix& output, Matrix* grad)>;

/// |a - n| / max(1, |a|, |n|), maximized over paired entries.
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Central finite differences of `loss(forward(net, batch, train))` against
/// backward(), over every parameter and every input entry. Returns the worst
/// relative error as defined by max_relative_error().
double grad_check(const Network& net, const OutputLoss& loss, const Matrix& batch,
                  double step = 1e-5);

} // namespace localmax
