#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "localmax/data.hpp"
#include "localmax/models.hpp"

namespace localmax {

/// Mann-Whitney statistic P(pos > neg) + P(pos == neg) / 2, via average ranks.
double auc(std::span<const double> pos_scores, std::span<const double> neg_scores);

enum class Score { c, h_unary };
std::string to_string(Score s);
Score score_from_string(const std::string& s);

std::vector<double> score_points(const QuadModel& model, Score score, const Matrix& x);

struct EvalReport {
  std::string protocol;
  nlohmann::json metrics = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> counts;
  std::string config_hash;

  nlohmann::json to_json() const;
};

/// Hex fingerprint of every parameter of the model.
std::string model_fingerprint(const QuadModel& model);

EvalReport one_class_eval(const QuadModel& model, Score score, const Matrix& pos_test,
                          const Matrix& neg_test);

/// Checks that both sets carry the model's standardization statistics.
EvalReport one_class_eval(const QuadModel& model, Score score, const Dataset& pos_test,
                          const Dataset& neg_test);

struct NoisePoint {
  double sigma = 0.0;
  double auc_c = 0.0;
  double auc_h = 0.0;
};

struct NoiseSweep {
  std::vector<NoisePoint> rows;
  EvalReport report;
};

/// Positives are `test_points`; negatives are `noise_source` (defaults to the
/// test points themselves) plus N(0, sigma^2 I), one draw per row per sigma.
NoiseSweep noise_sweep(const QuadModel& model, const Matrix& test_points,
                       std::span<const double> sigmas, std::uint64_t seed,
                       const Matrix* noise_source = nullptr);

/// Rows (sigma, auc_c, auc_h).
Matrix noise_sweep_table(const NoiseSweep& sweep);

double pearson(std::span<const double> x, std::span<const double> y);

struct PermutationTest {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
};

/// Two-sided Monte Carlo test with add-one correction:
/// p = (1 + #{|r_perm| >= |r_obs|}) / (B + 1).
PermutationTest permutation_test(std::span<const double> x, std::span<const double> y,
                                 std::size_t permutations, std::uint64_t seed);

enum class CorrelationMode { local, standard };

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
  std::vector<std::size_t> neighbors; // local mode only
  std::vector<double> score_side;     // the vectors that were correlated
  std::vector<double> target_side;
  EvalReport report;
};

/// Unary scores. Local mode correlates s_i - s_nn(i) with t_i - t_nn(i);
/// standard mode correlates s with t.
CorrelationResult local_correlation(std::span<const double> scores, const Matrix& points,
                                    std::span<const double> targets, CorrelationMode mode,
                                    std::size_t permutations, std::uint64_t seed);

/// Comparator on the ordered pair (point, nearest neighbor) against
/// t_i - t_nn(i).
CorrelationResult local_correlation(const Network& h, const Matrix& points,
                                    std::span<const double> targets, std::size_t permutations,
                                    std::uint64_t seed);

/// Unit vectors N, NE, E, SE, S, SW, W, NW.
const std::array<std::array<double, 2>, 8>& compass_directions();

struct FieldBounds {
  double x_lo = -2.0, x_hi = 2.0;
  double y_lo = -2.0, y_hi = 2.0;
};

struct FieldExport {
  Matrix heatmap; // rows (x1, x2, c)
  Matrix quiver;  // rows (x1, x2, u1, u2)
  double step = 0.0;
};

/// R x R grid over `bounds`. The quiver direction at x is the compass
/// direction d maximizing h(x + step * d, x), step = grid cell size.
FieldExport grid_field_export(const QuadModel& model, const FieldBounds& bounds,
                              std::size_t resolution);

/// Mean over the eight compass probes of h(center, center + step * d).
double center_dominance(const Network& h, std::span<const double> center, double step);

/// GMM-style summary in model input space: classifier value at each mode
/// center, AUC(c) of held-out positives against background points, and the
/// mean of h(x, x) over the held-out positives.
struct ModeCoverage {
  std::vector<double> center_scores;
  std::size_t covered = 0; // centers with c > 0.5
  double auc_c = 0.0;
  double mean_h_diag = 0.0;

  nlohmann::json to_json() const;
};

ModeCoverage mode_coverage(const QuadModel& model, const Matrix& centers, const Matrix& heldout,
                           const Matrix& background);

} // namespace localmax
