#include "localmax/adam.hpp"

#include <cmath>
#include <string>

namespace localmax {

AdamState AdamState::for_network(const Network& net, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (auto p : net.parameters()) {
    s.first.emplace_back(p.size(), 0.0);
    s.second.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  auto params = net.parameters();
  if (grads.params.size() != params.size() || state.first.size() != params.size())
    throw ConfigError("adam_step: gradient/state layout does not match network");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads.params[i].size() != params[i].size() || state.first[i].size() != params[i].size())
      throw ConfigError("adam_step: tensor " + std::to_string(i) + " has mismatched size");
    for (std::size_t k = 0; k < grads.params[i].size(); ++k)
      if (!std::isfinite(grads.params[i][k]))
        throw NumericError("adam_step: non-finite gradient in tensor " + std::to_string(i) +
                           " entry " + std::to_string(k) + " at step " +
                           std::to_string(state.step + 1));
  }

  const auto& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first[i];
    auto& v = state.second[i];
    const auto& g = grads.params[i];
    for (std::size_t k = 0; k < g.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      params[i][k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

} // namespace localmax
