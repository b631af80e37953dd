#include "localmax/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace localmax {

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size())
    throw InternalError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double err = std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
    worst = std::max(worst, err);
  }
  return worst;
}

double grad_check(const Network& net, const OutputLoss& loss, const Matrix& batch, double step) {
  const auto trace = forward(net, batch, Mode::train);
  Matrix out_grad(trace.output().rows(), trace.output().cols());
  loss(trace.output(), &out_grad);
  const Gradients analytic = backward(net, trace, out_grad);

  Network probe = net;
  auto value = [&](const Network& n, const Matrix& b) {
    return loss(forward(n, b, Mode::train).output(), nullptr);
  };

  std::vector<double> numeric, exact;
  auto params = probe.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].size(); ++k) {
      const double saved = params[i][k];
      params[i][k] = saved + step;
      const double up = value(probe, batch);
      params[i][k] = saved - step;
      const double down = value(probe, batch);
      params[i][k] = saved;
      numeric.push_back((up - down) / (2.0 * step));
      exact.push_back(analytic.params[i][k]);
    }
  }
  Matrix shifted = batch;
  for (std::size_t k = 0; k < shifted.size(); ++k) {
    const double saved = shifted.values()[k];
    shifted.values()[k] = saved + step;
    const double up = value(probe, shifted);
    shifted.values()[k] = saved - step;
    const double down = value(probe, shifted);
    shifted.values()[k] = saved;
    numeric.push_back((up - down) / (2.0 * step));
    exact.push_back(analytic.input.values()[k]);
  }
  return max_relative_error(exact, numeric);
}

} // namespace localmax
