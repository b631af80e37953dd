#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "localmax/network.hpp"

namespace localmax {

/// Exact 1-D piecewise-linear function. Piece i covers
/// (breakpoints[i-1], breakpoints[i]) with open ends at -inf / +inf.
struct PiecewiseLinear1D {
  std::vector<double> breakpoints;
  std::vector<double> slopes;     // breakpoints.size() + 1 entries
  std::vector<double> intercepts; // breakpoints.size() + 1 entries
  bool continuous = true;

  std::size_t pieces() const { return slopes.size(); }
  double operator()(double x) const;
  /// Largest |left - right| mismatch over the breakpoints.
  double max_gap() const;
  /// Throws InternalError if the layout or (when flagged) continuity is broken.
  void validate() const;
};

struct MaxNetConstruction {
  Network net;                 // affine(1 -> 2m), relu, affine(2m -> 1)
  PiecewiseLinear1D function;  // the tent function the net realizes
};

/// Continuous tent whose strict local maxima are exactly `points` (sorted,
/// distinct): slope +1 into (x_1, 1), down to 0 at each midpoint and back up
/// to 1 at the next point, slope -1 after x_m. 2m pieces, 2m hidden units.
MaxNetConstruction construct_max_net(std::span<const double> points);

/// Exact linear regions of a 1-input, 1-output network built from affine and
/// ReLU layers. Adjacent pieces whose slopes differ by less than 1e-9 are
/// merged. Throws ConfigError for any other layer kind.
PiecewiseLinear1D extract_pieces(const Network& net);

/// Scalar evaluation of a 1-D network.
double evaluate_1d(const Network& net, double x);

/// Strict local maxima of f over the sorted sample positions `xs`
/// (interior samples strictly greater than both neighbors).
std::vector<double> grid_local_maxima(const std::function<double(double)>& f,
                                      std::span<const double> xs);

/// Uniform grid over [lo, hi] with the given step, merged with `extra`
/// (sorted, deduplicated).
std::vector<double> scan_grid(double lo, double hi, double step, std::span<const double> extra = {});

struct PieceClaim {
  std::string claim;        // "local-maxima" (>= 2m pieces) or "indicator" (>= 3m+1)
  std::size_t m = 0;
  std::size_t pieces = 0;
  std::size_t required = 0;
  bool premise = false;     // the net satisfies the claim's hypothesis
  bool passed = false;      // premise implies pieces >= required (true when vacuous)
  std::string status;       // "passed", "failed" or "vacuous"

  nlohmann::json to_json() const;
};

/// Empirical piece-count lower bounds for a 1-D ReLU network against the
/// point set `points`. Premises are checked on probe grids with tolerance
/// `tol` for the indicator values.
std::vector<PieceClaim> count_pieces_lower_bound_check(std::span<const double> points,
                                                       const Network& net, double tol = 1e-6);

/// Largest singular value by power iteration on W^T W. Stops when the
/// eigen-residual falls below `tol` relative to the estimate or after
/// `max_iterations`.
double spectral_norm(const Matrix& w, double tol = 1e-10, std::size_t max_iterations = 1000);

struct SpectralTerms {
  double norm_product = 1.0; // prod ||W_i||_2^2
  double ratio_sum = 0.0;    // sum ||W_i||_F^2 / ||W_i||_2^2
  double complexity = 0.0;   // their product
};

/// Over affine weight matrices only (biases and batch-norm ignored).
/// Throws ConfigError for a zero weight matrix.
SpectralTerms spectral_terms(const Network& net);
double spectral_complexity(const Network& net);

struct MarginRiskConfig {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double eps = 0.05;            // neighborhood radius
  std::size_t samples = 256;    // K uniform points in the eps-ball
  double domain_radius = 1.0;

  void validate() const;
};

/// Mean over `data` of 1[v(x) < max_{u in N(x)} v(u) - gamma1  or  f(x) - gamma2 <= 0],
/// the max taken over x itself plus K uniform samples of the eps-ball.
double margin_empirical_risk(const Network& v, const Network& f, const Matrix& data,
                             const MarginRiskConfig& cfg, std::uint64_t seed);

struct BoundProxy {
  std::size_t r = 0, s = 0;   // affine depth of v and f
  std::size_t q1 = 0, q2 = 0; // widest layer (including input and output)
  double complexity_v = 0.0;
  double complexity_f = 0.0;
  double value_term = 0.0;      // r^2 q1 log(r q1) C(v) / gamma1^2
  double classifier_term = 0.0; // s^2 q2 log(s q2) C(f) / gamma2^2
  double bracket = 0.0;         // B^2 (value_term + classifier_term)
  double log_term = 0.0;        // log(m / delta)
  double proxy = 0.0;           // sqrt((bracket + log_term) / m)

  nlohmann::json to_json() const;
};

/// The generalization penalty with its hidden constant set to 1.
BoundProxy bound_penalty_proxy(const Network& v, const Network& f, double domain_radius,
                               double gamma1, double gamma2, std::size_t m, double delta);

} // namespace localmax
