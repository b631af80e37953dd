#pragma once

#include <cstdint>
#include <vector>

#include "localmax/network.hpp"

namespace localmax {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<std::vector<double>> first;  // one tensor per network parameter tensor
  std::vector<std::vector<double>> second;
  std::uint64_t step = 0;

  static AdamState for_network(const Network& net, AdamHyper hyper = {});
  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update. Throws NumericError (and leaves `net` and
/// `state` untouched) if any gradient entry is non-finite.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

} // namespace localmax
