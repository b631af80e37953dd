#include <algorithm>
#include <cmath>
#include <numeric>

#include "kernels_common.hpp"
#include "localmax/rng.hpp"

namespace localmax::kernels {

CenteredPair center_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("center_pair: length mismatch");
  CenteredPair p;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  p.x.resize(x.size());
  p.y.resize(y.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p.x[i] = x[i] - mx;
    p.y[i] = y[i] - my;
    sx += p.x[i] * p.x[i];
    sy += p.y[i] * p.y[i];
  }
  p.norm_x = std::sqrt(sx);
  p.norm_y = std::sqrt(sy);
  return p;
}

double permuted_correlation(const CenteredPair& pair, std::span<const std::size_t> perm) {
  const double denom = pair.norm_x * pair.norm_y;
  if (denom == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += pair.x[i] * pair.y[perm[i]];
  return std::clamp(s / denom, -1.0, 1.0);
}

void seeded_permutation(std::uint64_t seed, std::size_t b, std::vector<std::size_t>& perm) {
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(task_seed(seed, b));
  // Fisher-Yates with an explicit bounded draw; std::shuffle's algorithm is
  // implementation-defined.
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
}

namespace serial {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y) {
  detail::check_affine(x, w, b);
  y = Matrix(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) detail::affine_row(x, w, b, y, i);
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  if (dy.cols() != w.rows()) throw InternalError("affine_backward_input: shape mismatch");
  dx = Matrix(dy.rows(), w.cols());
  for (std::size_t i = 0; i < dy.rows(); ++i) detail::backward_input_row(dy, w, dx, i);
}

void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,
                            std::span<double> db) {
  if (dy.rows() != x.rows() || dw.rows() != dy.cols() || dw.cols() != x.cols() ||
      db.size() != dy.cols())
    throw InternalError("affine_backward_params: shape mismatch");
  for (std::size_t o = 0; o < dy.cols(); ++o) detail::backward_params_row(dy, x, dw, db, o);
}

std::vector<std::size_t> nearest_neighbors(const Matrix& points) {
  std::vector<std::size_t> nn(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) nn[i] = detail::nearest_of(points, i);
  return nn;
}

std::size_t permutation_exceedances(const CenteredPair& pair, std::size_t permutations,
                                    std::uint64_t seed, double threshold) {
  std::vector<std::size_t> perm(pair.x.size());
  std::size_t count = 0;
  for (std::size_t b = 0; b < permutations; ++b) {
    seeded_permutation(seed, b, perm);
    if (std::abs(permuted_correlation(pair, perm)) >= threshold) ++count;
  }
  return count;
}

} // namespace serial
} // namespace localmax::kernels
