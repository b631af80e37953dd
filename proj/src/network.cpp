#include "localmax/network.hpp"

#include <cmath>
#include <random>

#include "localmax/hash.hpp"
#include "localmax/kernels.hpp"
#include "localmax/rng.hpp"

namespace localmax {

std::string to_string(LayerKind kind) {
  switch (kind) {
  case LayerKind::affine: return "affine";
  case LayerKind::relu: return "relu";
  case LayerKind::leaky_relu: return "leaky-relu";
  case LayerKind::sigmoid: return "sigmoid";
  case LayerKind::tanh: return "tanh";
  case LayerKind::batch_norm: return "batch-norm";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& name) {
  for (auto k : {LayerKind::affine, LayerKind::relu, LayerKind::leaky_relu, LayerKind::sigmoid,
                 LayerKind::tanh, LayerKind::batch_norm})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown layer kind '" + name + "'");
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.in_dim == 0 || s.out_dim == 0)
      throw ConfigError("layer " + std::to_string(i) + ": dimensions must be positive");
    if (s.kind != LayerKind::affine && s.in_dim != s.out_dim)
      throw ConfigError("layer " + std::to_string(i) + ": " + to_string(s.kind) +
                        " must have in_dim == out_dim");
    if (s.kind == LayerKind::leaky_relu && !(s.slope > 0.0 && s.slope < 1.0))
      throw ConfigError("layer " + std::to_string(i) + ": leaky-relu slope must be in (0,1)");
    if (i > 0 && specs[i - 1].out_dim != s.in_dim)
      throw ConfigError("layer " + std::to_string(i) + ": in_dim " + std::to_string(s.in_dim) +
                        " does not match previous out_dim " +
                        std::to_string(specs[i - 1].out_dim));
  }
}

namespace {

bool feeds_rectifier(std::span<const LayerSpec> specs, std::size_t i) {
  for (std::size_t j = i + 1; j < specs.size(); ++j) {
    if (specs[j].kind == LayerKind::batch_norm) continue;
    return specs[j].kind == LayerKind::relu || specs[j].kind == LayerKind::leaky_relu;
  }
  return false;
}

std::uint64_t shape_hash(const std::vector<Layer>& layers) {
  Fnv1a h;
  for (const auto& l : layers) {
    h.update(static_cast<std::uint64_t>(l.spec.kind));
    h.update(static_cast<std::uint64_t>(l.spec.in_dim));
    h.update(static_cast<std::uint64_t>(l.spec.out_dim));
  }
  return h.digest();
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

} // namespace

Network init_network(std::span<const LayerSpec> specs, std::uint64_t seed) {
  validate_specs(specs);
  Network net;
  net.seed = seed;
  Rng rng(substream_seed(seed, "init"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Layer layer;
    layer.spec = specs[i];
    const auto n = specs[i].out_dim;
    if (specs[i].kind == LayerKind::affine) {
      const double fan_in = static_cast<double>(specs[i].in_dim);
      const double std = std::sqrt((feeds_rectifier(specs, i) ? 2.0 : 1.0) / fan_in);
      layer.weight = Matrix(n, specs[i].in_dim);
      for (double& w : layer.weight.values()) w = std * normal(rng);
      layer.bias.assign(n, 0.0);
    } else if (specs[i].kind == LayerKind::batch_norm) {
      layer.gamma.assign(n, 1.0);
      layer.beta.assign(n, 0.0);
      layer.running_mean.assign(n, 0.0);
      layer.running_var.assign(n, 1.0);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::size_t Network::in_dim() const { return layers.empty() ? 0 : layers.front().spec.in_dim; }
std::size_t Network::out_dim() const { return layers.empty() ? 0 : layers.back().spec.out_dim; }

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> s;
  for (const auto& l : layers) s.push_back(l.spec);
  return s;
}

bool Network::has_batch_norm() const {
  for (const auto& l : layers)
    if (l.spec.kind == LayerKind::batch_norm) return true;
  return false;
}

std::vector<std::span<double>> Network::parameters() {
  std::vector<std::span<double>> p;
  for (auto& l : layers) {
    if (l.spec.kind == LayerKind::affine) {
      p.emplace_back(l.weight.values());
      p.emplace_back(l.bias);
    } else if (l.spec.kind == LayerKind::batch_norm) {
      p.emplace_back(l.gamma);
      p.emplace_back(l.beta);
    }
  }
  return p;
}

std::vector<std::span<const double>> Network::parameters() const {
  std::vector<std::span<const double>> p;
  for (const auto& l : layers) {
    if (l.spec.kind == LayerKind::affine) {
      p.emplace_back(l.weight.values());
      p.emplace_back(l.bias);
    } else if (l.spec.kind == LayerKind::batch_norm) {
      p.emplace_back(l.gamma);
      p.emplace_back(l.beta);
    }
  }
  return p;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (auto p : parameters()) n += p.size();
  return n;
}

std::uint64_t Network::parameter_hash() const {
  Fnv1a h;
  for (auto p : parameters()) h.update(p);
  return h.digest();
}

std::uint64_t Network::state_hash() const {
  Fnv1a h;
  h.update(parameter_hash());
  for (const auto& l : layers) {
    h.update(std::span<const double>(l.running_mean));
    h.update(std::span<const double>(l.running_var));
  }
  return h.digest();
}

ForwardTrace forward(const Network& net, const Matrix& batch, Mode mode) {
  if (net.layers.empty()) throw ConfigError("forward: empty network");
  if (batch.cols() != net.in_dim())
    throw ConfigError("forward: batch has " + std::to_string(batch.cols()) +
                      " columns, network expects " + std::to_string(net.in_dim()));
  for (double v : batch.values())
    if (!std::isfinite(v)) throw NumericError("forward: non-finite input");
  if (mode == Mode::train && batch.rows() == 0 && net.has_batch_norm())
    throw ConfigError("forward: empty batch in train mode with batch-norm");

  ForwardTrace trace;
  trace.mode = mode;
  trace.network_shape = shape_hash(net.layers);
  trace.activations.reserve(net.layers.size() + 1);
  trace.activations.push_back(batch);
  trace.batch_norm.resize(net.layers.size());

  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& layer = net.layers[li];
    const Matrix& x = trace.activations.back();
    Matrix y;
    switch (layer.spec.kind) {
    case LayerKind::affine:
      kernels::affine_forward(x, layer.weight, layer.bias, y);
      break;
    case LayerKind::relu:
      y = x;
      for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
      break;
    case LayerKind::leaky_relu:
      y = x;
      for (double& v : y.values()) v = v > 0.0 ? v : layer.spec.slope * v;
      break;
    case LayerKind::sigmoid:
      y = x;
      for (double& v : y.values()) v = sigmoid(v);
      break;
    case LayerKind::tanh:
      y = x;
      for (double& v : y.values()) v = std::tanh(v);
      break;
    case LayerKind::batch_norm: {
      const std::size_t n = x.rows(), f = x.cols();
      BatchNormCache& cache = trace.batch_norm[li];
      cache.mean.assign(f, 0.0);
      cache.var.assign(f, 0.0);
      cache.inv_std.assign(f, 0.0);
      if (mode == Mode::train) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < f; ++j) cache.mean[j] += x(i, j);
        for (std::size_t j = 0; j < f; ++j) cache.mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < f; ++j) {
            const double d = x(i, j) - cache.mean[j];
            cache.var[j] += d * d;
          }
        for (std::size_t j = 0; j < f; ++j) cache.var[j] /= static_cast<double>(n);
      } else {
        cache.mean = layer.running_mean;
        cache.var = layer.running_var;
      }
      for (std::size_t j = 0; j < f; ++j)
        cache.inv_std[j] = 1.0 / std::sqrt(cache.var[j] + net.batch_norm.eps);
      cache.normalized = Matrix(n, f);
      y = Matrix(n, f);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < f; ++j) {
          const double xh = (x(i, j) - cache.mean[j]) * cache.inv_std[j];
          cache.normalized(i, j) = xh;
          y(i, j) = layer.gamma[j] * xh + layer.beta[j];
        }
      break;
    }
    }
    trace.activations.push_back(std::move(y));
  }
  return trace;
}

Matrix predict(const Network& net, const Matrix& batch, Mode mode) {
  return std::move(forward(net, batch, mode).activations.back());
}

void commit_running_stats(Network& net, const ForwardTrace& trace) {
  if (trace.mode != Mode::train) return;
  if (trace.network_shape != shape_hash(net.layers))
    throw InternalError("commit_running_stats: trace does not belong to this network");
  const double mom = net.batch_norm.momentum;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer& layer = net.layers[li];
    if (layer.spec.kind != LayerKind::batch_norm) continue;
    const auto& cache = trace.batch_norm[li];
    for (std::size_t j = 0; j < layer.running_mean.size(); ++j) {
      layer.running_mean[j] = mom * layer.running_mean[j] + (1.0 - mom) * cache.mean[j];
      layer.running_var[j] = mom * layer.running_var[j] + (1.0 - mom) * cache.var[j];
    }
  }
}

Gradients Gradients::zeros_like(const Network& net, std::size_t batch_rows) {
  Gradients g;
  for (auto p : net.parameters()) g.params.emplace_back(p.size(), 0.0);
  g.input = Matrix(batch_rows, net.in_dim());
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  if (other.params.size() != params.size())
    throw InternalError("Gradients::accumulate: parameter layout mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != other.params[i].size())
      throw InternalError("Gradients::accumulate: tensor size mismatch");
    for (std::size_t k = 0; k < params[i].size(); ++k) params[i][k] += other.params[i][k];
  }
  if (input.empty()) {
    input = other.input;
  } else if (!other.input.empty()) {
    if (input.rows() != other.input.rows() || input.cols() != other.input.cols())
      throw InternalError("Gradients::accumulate: input gradient shape mismatch");
    auto dst = input.values();
    auto src = other.input.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

void Gradients::scale(double factor) {
  for (auto& p : params)
    for (double& v : p) v *= factor;
  for (double& v : input.values()) v *= factor;
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> out;
  for (const auto& p : params) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& output_grad) {
  if (trace.mode != Mode::train) throw InternalError("backward: trace must come from train mode");
  if (trace.network_shape != shape_hash(net.layers) ||
      trace.activations.size() != net.layers.size() + 1)
    throw InternalError("backward: trace does not belong to this network");
  const Matrix& out = trace.output();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols())
    throw InternalError("backward: output gradient shape mismatch");

  Gradients grads = Gradients::zeros_like(net);
  // Parameter tensors are laid out per layer; walk them back to front.
  std::size_t param_slot = grads.params.size();

  Matrix dy = output_grad;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const Matrix& x = trace.activations[li];
    const Matrix& y = trace.activations[li + 1];
    Matrix dx;
    switch (layer.spec.kind) {
    case LayerKind::affine: {
      param_slot -= 2;
      Matrix dw(layer.weight.rows(), layer.weight.cols());
      kernels::affine_backward_params(dy, x, dw, grads.params[param_slot + 1]);
      grads.params[param_slot] = std::move(dw.storage());
      kernels::affine_backward_input(dy, layer.weight, dx);
      break;
    }
    case LayerKind::relu:
      dx = dy;
      for (std::size_t k = 0; k < dx.size(); ++k)
        if (!(x.values()[k] > 0.0)) dx.values()[k] = 0.0;
      break;
    case LayerKind::leaky_relu:
      dx = dy;
      for (std::size_t k = 0; k < dx.size(); ++k)
        if (!(x.values()[k] > 0.0)) dx.values()[k] *= layer.spec.slope;
      break;
    case LayerKind::sigmoid:
      dx = dy;
      for (std::size_t k = 0; k < dx.size(); ++k) {
        const double s = y.values()[k];
        dx.values()[k] *= s * (1.0 - s);
      }
      break;
    case LayerKind::tanh:
      dx = dy;
      for (std::size_t k = 0; k < dx.size(); ++k) {
        const double t = y.values()[k];
        dx.values()[k] *= 1.0 - t * t;
      }
      break;
    case LayerKind::batch_norm: {
      param_slot -= 2;
      const auto& cache = trace.batch_norm[li];
      const std::size_t n = dy.rows(), f = dy.cols();
      auto& dgamma = grads.params[param_slot];
      auto& dbeta = grads.params[param_slot + 1];
      dx = Matrix(n, f);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < f; ++j) {
        double sum_dxh = 0.0, sum_dxh_xh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          dgamma[j] += dy(i, j) * cache.normalized(i, j);
          dbeta[j] += dy(i, j);
          const double dxh = dy(i, j) * layer.gamma[j];
          sum_dxh += dxh;
          sum_dxh_xh += dxh * cache.normalized(i, j);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double dxh = dy(i, j) * layer.gamma[j];
          dx(i, j) = inv_n * cache.inv_std[j] *
                     (static_cast<double>(n) * dxh - sum_dxh - cache.normalized(i, j) * sum_dxh_xh);
        }
      }
      break;
    }
    }
    dy = std::move(dx);
  }
  grads.input = std::move(dy);
  return grads;
}

} // namespace localmax
