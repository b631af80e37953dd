#pragma once

#include <vector>

#include "localmax/network.hpp"

namespace localmax {

/// Probabilities are clamped to [kProbabilityClamp, 1 - kProbabilityClamp]
/// before any log.
inline constexpr double kProbabilityClamp = 1e-7;

/// Per-objective breakdown.
///   L_C, L_H:  total = positive_term + product_term
///   -L_C (G_c): total = -product_term (positive_term reported, not included)
///   G_h:       total = distance_term - positive_term - product_term
struct LossBreakdown {
  double total = 0.0;
  double positive_term = 0.0;
  double product_term = 0.0;
  double distance_term = 0.0;
};

/// Binary cross entropy for labels y in {-1, +1}: -log p or -log(1 - p).
double bce(double p, int y);
/// d bce / d p; zero where the clamp is active.
double bce_derivative(double p, int y);

/// Ablation switches. Dropping a factor replaces it by the constant 1 in the
/// product term.
struct Coupling {
  bool c_factor = true;
  bool h_factor = true;
};

/// Which player an objective trains.
enum class Objective {
  classifier,  // L_C, gradient to c
  comparator,  // L_H, gradient to h
  generator_c, // -L_C, gradient to the generator through frozen c and h
  generator_h, // lambda * mean ||x - G(x)|| - L_H, gradient to the generator
};

struct LossSettings {
  double lambda = 1.0;
  bool symmetric = false; // adds the h(x, G(x)) term to L_H
  Coupling coupling;
};

struct ObjectiveResult {
  LossBreakdown loss;
  Gradients grad;                  // for the trained player only
  std::vector<ForwardTrace> traces; // the trained player's forward passes
};

/// Evaluates one objective on batch `x` with generator `gen` producing the
/// negative points. All networks run in train mode (batch statistics). When
/// `with_gradient` is false only `loss` is filled.
ObjectiveResult evaluate_objective(Objective objective, const Matrix& x, const Network& c,
                                   const Network& h, const Network& gen,
                                   const LossSettings& settings, bool with_gradient);

LossBreakdown loss_C(const Matrix& x, const Network& c, const Network& h, const Network& g_c,
                     Coupling coupling = {});
LossBreakdown loss_H(const Matrix& x, const Network& c, const Network& h, const Network& g_h,
                     bool symmetric, Coupling coupling = {});
double loss_Gc(const Matrix& x, const Network& c, const Network& h, const Network& g_c,
               Coupling coupling = {});
LossBreakdown loss_Gh(const Matrix& x, const Network& c, const Network& h, const Network& g_h,
                      double lambda, bool symmetric = false, Coupling coupling = {});

} // namespace localmax
