#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "localmax/network.hpp"
#include "localmax/standardization.hpp"

namespace localmax {

enum class Role { classifier, comparator, generator };

std::string to_string(Role role);

enum class GeneratorOutput { tanh, identity };

struct ModelOptions {
  std::vector<std::size_t> hidden{64, 32};
  bool batch_norm = false;
  double leaky_slope = 0.2;
  GeneratorOutput generator_output = GeneratorOutput::tanh;

  bool operator==(const ModelOptions&) const = default;
};

/// Classifier: d -> hidden... -> 1 -> sigmoid.
/// Comparator: same on the concatenation [a ; b] (input 2d).
/// Generator: encoder d -> hidden..., decoder mirrors it back to d, then tanh
/// (or nothing, for GeneratorOutput::identity).
/// Each hidden block is affine, optional batch-norm, leaky-relu.
Network build_model(Role role, std::size_t d, const ModelOptions& options, std::uint64_t seed);

/// The four players trained together.
struct QuadModel {
  std::size_t dim = 0;
  Network c;
  Network h;
  Network g_c;
  Network g_h;
  ModelOptions discriminator_options;
  ModelOptions generator_options;
  std::optional<Standardization> standardization;

  bool operator==(const QuadModel&) const = default;
};

/// Builds all four networks with independent seed substreams of `seed`.
QuadModel build_quad_model(std::size_t d, const ModelOptions& discriminator,
                           const ModelOptions& generator, std::uint64_t seed);

/// h applied to the row-wise concatenation [a_i ; b_i].
std::vector<double> comparator_batch(const Network& h, const Matrix& a, const Matrix& b);

/// Probability that value(a) >= value(b) according to h. Not symmetric.
double comparator_apply(const Network& h, std::span<const double> a, std::span<const double> b);

/// h(x, x): the single-input score.
double comparator_unary(const Network& h, std::span<const double> x);
std::vector<double> comparator_unary_batch(const Network& h, const Matrix& x);

std::vector<double> classifier_scores(const Network& c, const Matrix& x);

} // namespace localmax
