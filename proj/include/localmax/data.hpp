#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "localmax/matrix.hpp"
#include "localmax/standardization.hpp"

namespace localmax {

struct Dataset {
  Matrix x;
  std::optional<std::vector<double>> targets;
  std::optional<Standardization> standardization; // set once features are standardized
  std::vector<std::string> feature_names;

  std::size_t size() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
};

struct GmmConfig {
  // Per-axis center coordinates; the grid is their Cartesian square.
  std::vector<double> grid{-1.5, -0.5, 0.5, 1.5};
  double sigma = 0.01;
  std::size_t n = 4096;
  std::uint64_t seed = 0;
};

/// All grid centers, row-major over (first axis, second axis).
Matrix gmm_centers(const GmmConfig& cfg);

/// Uniform component choice, isotropic Gaussian noise of std sigma.
/// `component` (optional) receives the chosen center index of each row.
Dataset sample_gmm(const GmmConfig& cfg, std::size_t n, std::uint64_t seed,
                   std::vector<std::size_t>* component = nullptr);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Rejection-samples uniform points in `box` at Euclidean distance >=
/// `min_dist` from every row of `centers`. Throws ConfigError when fewer than
/// one in a thousand proposals is accepted.
Matrix sample_uniform_background(const Box& box, std::size_t n, const Matrix& centers,
                                 double min_dist, std::uint64_t seed);

/// Sorted set of `m` distinct reals with gaps of at least `min_gap`.
std::vector<double> sample_point_set(std::size_t m, double lo, double hi, double min_gap,
                                     std::uint64_t seed);

/// Comma separated, header required, LF or CRLF line endings.
Dataset load_csv(const std::filesystem::path& path,
                 const std::optional<std::string>& target_column = std::nullopt);

/// Header row, 17 significant digits, LF endings.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& rows);
void write_csv(const std::filesystem::path& path, const Dataset& ds);

/// Seeded shuffle split; standardization fit on the train part only and
/// applied to both. Constant features map to 0 and add a message to
/// `warnings`.
std::pair<Dataset, Dataset> split_standardize(const Dataset& ds, double train_fraction,
                                              std::uint64_t seed,
                                              std::vector<std::string>* warnings = nullptr);

} // namespace localmax
