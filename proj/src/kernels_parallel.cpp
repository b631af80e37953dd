#include <cmath>

#include "kernels_common.hpp"

namespace localmax::kernels::parallel {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kMinParallelWork = 1u << 15;
}

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y) {
  detail::check_affine(x, w, b);
  y = Matrix(x.rows(), w.rows());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  [[maybe_unused]] const bool big = x.rows() * w.size() >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    detail::affine_row(x, w, b, y, static_cast<std::size_t>(i));
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  if (dy.cols() != w.rows()) throw InternalError("affine_backward_input: shape mismatch");
  dx = Matrix(dy.rows(), w.cols());
  const auto n = static_cast<std::ptrdiff_t>(dy.rows());
  [[maybe_unused]] const bool big = dy.rows() * w.size() >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    detail::backward_input_row(dy, w, dx, static_cast<std::size_t>(i));
}

void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,
                            std::span<double> db) {
  if (dy.rows() != x.rows() || dw.rows() != dy.cols() || dw.cols() != x.cols() ||
      db.size() != dy.cols())
    throw InternalError("affine_backward_params: shape mismatch");
  const auto outs = static_cast<std::ptrdiff_t>(dy.cols());
  [[maybe_unused]] const bool big = dy.size() * x.cols() >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t o = 0; o < outs; ++o)
    detail::backward_params_row(dy, x, dw, db, static_cast<std::size_t>(o));
}

std::vector<std::size_t> nearest_neighbors(const Matrix& points) {
  std::vector<std::size_t> nn(points.rows());
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    nn[static_cast<std::size_t>(i)] = detail::nearest_of(points, static_cast<std::size_t>(i));
  return nn;
}

std::size_t permutation_exceedances(const CenteredPair& pair, std::size_t permutations,
                                    std::uint64_t seed, double threshold) {
  std::size_t count = 0;
  const auto total = static_cast<std::ptrdiff_t>(permutations);
#pragma omp parallel reduction(+ : count)
  {
    std::vector<std::size_t> perm(pair.x.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < total; ++b) {
      seeded_permutation(seed, static_cast<std::size_t>(b), perm);
      if (std::abs(permuted_correlation(pair, perm)) >= threshold) ++count;
    }
  }
  return count;
}

} // namespace localmax::kernels::parallel
