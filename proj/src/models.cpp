#include "localmax/models.hpp"

#include <cmath>

#include "localmax/rng.hpp"

namespace localmax {

std::string to_string(Role role) {
  switch (role) {
  case Role::classifier: return "classifier";
  case Role::comparator: return "comparator";
  case Role::generator: return "generator";
  }
  return "?";
}

namespace {

void append_block(std::vector<LayerSpec>& specs, std::size_t in, std::size_t out,
                  const ModelOptions& o) {
  specs.push_back(LayerSpec::affine(in, out));
  if (o.batch_norm) specs.push_back(LayerSpec::batch_norm(out));
  specs.push_back(LayerSpec::leaky_relu(out, o.leaky_slope));
}

} // namespace

Network build_model(Role role, std::size_t d, const ModelOptions& options, std::uint64_t seed) {
  if (d == 0) throw ConfigError("build_model: input dimension must be positive");
  if (options.hidden.empty()) throw ConfigError("build_model: hidden layer list is empty");
  for (auto w : options.hidden)
    if (w == 0) throw ConfigError("build_model: hidden widths must be positive");

  std::vector<LayerSpec> specs;
  if (role == Role::generator) {
    std::size_t in = d;
    for (auto w : options.hidden) {
      append_block(specs, in, w, options);
      in = w;
    }
    // Mirrored decoder: back through the encoder widths, then out to d.
    for (std::size_t i = options.hidden.size() - 1; i-- > 0;) {
      append_block(specs, in, options.hidden[i], options);
      in = options.hidden[i];
    }
    specs.push_back(LayerSpec::affine(in, d));
    if (options.generator_output == GeneratorOutput::tanh) specs.push_back(LayerSpec::tanh(d));
  } else {
    std::size_t in = role == Role::comparator ? 2 * d : d;
    for (auto w : options.hidden) {
      append_block(specs, in, w, options);
      in = w;
    }
    specs.push_back(LayerSpec::affine(in, 1));
    specs.push_back(LayerSpec::sigmoid(1));
  }
  return init_network(specs, seed);
}

QuadModel build_quad_model(std::size_t d, const ModelOptions& discriminator,
                           const ModelOptions& generator, std::uint64_t seed) {
  QuadModel m;
  m.dim = d;
  m.discriminator_options = discriminator;
  m.generator_options = generator;
  m.c = build_model(Role::classifier, d, discriminator, substream_seed(seed, "c"));
  m.h = build_model(Role::comparator, d, discriminator, substream_seed(seed, "h"));
  m.g_c = build_model(Role::generator, d, generator, substream_seed(seed, "g_c"));
  m.g_h = build_model(Role::generator, d, generator, substream_seed(seed, "g_h"));
  return m;
}

std::vector<double> comparator_batch(const Network& h, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || 2 * a.cols() != h.in_dim())
    throw ConfigError("comparator: input dimensions do not match the comparator");
  const Matrix out = predict(h, hconcat(a, b));
  return {out.values().begin(), out.values().end()};
}

double comparator_apply(const Network& h, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || 2 * a.size() != h.in_dim())
    throw ConfigError("comparator_apply: expected two vectors of dimension " +
                      std::to_string(h.in_dim() / 2));
  Matrix pair(1, 2 * a.size());
  std::copy(a.begin(), a.end(), pair.row(0).begin());
  std::copy(b.begin(), b.end(), pair.row(0).begin() + static_cast<std::ptrdiff_t>(a.size()));
  return predict(h, pair)(0, 0);
}

double comparator_unary(const Network& h, std::span<const double> x) {
  return comparator_apply(h, x, x);
}

std::vector<double> comparator_unary_batch(const Network& h, const Matrix& x) {
  return comparator_batch(h, x, x);
}

std::vector<double> classifier_scores(const Network& c, const Matrix& x) {
  if (c.out_dim() != 1) throw ConfigError("classifier_scores: classifier must have one output");
  const Matrix out = predict(c, x);
  return {out.values().begin(), out.values().end()};
}

} // namespace localmax
