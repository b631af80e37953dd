#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "localmax/matrix.hpp"

namespace localmax {

enum class LayerKind { affine, relu, leaky_relu, sigmoid, tanh, batch_norm };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::affine;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  double slope = 0.0; // leaky-relu only

  static LayerSpec affine(std::size_t in, std::size_t out) { return {LayerKind::affine, in, out}; }
  static LayerSpec relu(std::size_t n) { return {LayerKind::relu, n, n}; }
  static LayerSpec leaky_relu(std::size_t n, double slope) {
    return {LayerKind::leaky_relu, n, n, slope};
  }
  static LayerSpec sigmoid(std::size_t n) { return {LayerKind::sigmoid, n, n}; }
  static LayerSpec tanh(std::size_t n) { return {LayerKind::tanh, n, n}; }
  static LayerSpec batch_norm(std::size_t n) { return {LayerKind::batch_norm, n, n}; }

  bool operator==(const LayerSpec&) const = default;
};

struct BatchNormConfig {
  double momentum = 0.9;
  double eps = 1e-5;

  bool operator==(const BatchNormConfig&) const = default;
};

/// One layer with its parameters. Only the members relevant to `spec.kind`
/// are populated: affine uses weight (out x in) and bias; batch-norm uses
/// gamma, beta and the running statistics.
struct Layer {
  LayerSpec spec;
  Matrix weight;
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;

  bool operator==(const Layer&) const = default;
};

class Network {
public:
  std::vector<Layer> layers;
  std::uint64_t seed = 0;
  BatchNormConfig batch_norm;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::vector<LayerSpec> specs() const;
  bool has_batch_norm() const;

  /// Trainable tensors in a fixed order: per layer, weight then bias (affine)
  /// or gamma then beta (batch-norm).
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;

  /// Fingerprint of the trainable parameters.
  std::uint64_t parameter_hash() const;
  /// Fingerprint of parameters and running statistics.
  std::uint64_t state_hash() const;

  bool operator==(const Network&) const = default;
};

/// Rejects inconsistent chains with ConfigError.
void validate_specs(std::span<const LayerSpec> specs);

/// Fan-in scaled Gaussian weights (std sqrt(2/in) when the affine layer feeds
/// a (leaky) ReLU, possibly through batch-norm, sqrt(1/in) otherwise); zero
/// biases; batch-norm scale 1 and shift 0.
Network init_network(std::span<const LayerSpec> specs, std::uint64_t seed);

enum class Mode { train, eval };

struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> inv_std;
  Matrix normalized;
};

/// Everything backward() needs: the activation entering each layer plus the
/// final output (activations.size() == layers + 1).
struct ForwardTrace {
  Mode mode = Mode::eval;
  std::uint64_t network_shape = 0;
  std::vector<Matrix> activations;
  std::vector<BatchNormCache> batch_norm; // indexed by layer; empty for other kinds

  const Matrix& output() const { return activations.back(); }
};

/// Pure: never touches running statistics. Train mode normalizes with batch
/// statistics; use commit_running_stats() to fold them into the network.
ForwardTrace forward(const Network& net, const Matrix& batch, Mode mode);

/// Output only.
Matrix predict(const Network& net, const Matrix& batch, Mode mode = Mode::eval);

void commit_running_stats(Network& net, const ForwardTrace& trace);

struct Gradients {
  std::vector<std::vector<double>> params; // same order as Network::parameters()
  Matrix input;

  static Gradients zeros_like(const Network& net, std::size_t batch_rows = 0);
  void accumulate(const Gradients& other);
  void scale(double factor);
  std::vector<double> flatten() const;
};

Gradients backward(const Network& net, const ForwardTrace& trace, const Matrix& output_grad);

} // namespace localmax
