#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP variant in `kernels::parallel`; the two
// produce bit-identical results because each output element is reduced by a
// single thread in a fixed order. The unqualified entry points dispatch to the
// parallel variant when OpenMP is available.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "localmax/matrix.hpp"

namespace localmax::kernels {

/// Centered Pearson inputs shared by the permutation kernels.
struct CenteredPair {
  std::vector<double> x;
  std::vector<double> y;
  double norm_x = 0.0;
  double norm_y = 0.0;
};

CenteredPair center_pair(std::span<const double> x, std::span<const double> y);

#define LOCALMAX_KERNEL_DECLS                                                                  \
  /* y = x * w^T + b;  x: n x in, w: out x in */                                              \
  void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y); \
  /* dx = dy * w */                                                                           \
  void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);                  \
  /* dw = dy^T * x, db = column sums of dy */                                                 \
  void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,                  \
                              std::span<double> db);                                          \
  /* index of the Euclidean nearest other row; ties go to the lowest index */                 \
  std::vector<std::size_t> nearest_neighbors(const Matrix& points);                           \
  /* #{b < permutations : |r_b| >= threshold}, r_b the correlation under the b-th */          \
  /* seeded shuffle of y */                                                                   \
  std::size_t permutation_exceedances(const CenteredPair& pair, std::size_t permutations,     \
                                      std::uint64_t seed, double threshold);

namespace serial {
LOCALMAX_KERNEL_DECLS
}

namespace parallel {
LOCALMAX_KERNEL_DECLS
}

#undef LOCALMAX_KERNEL_DECLS

inline void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y) {
  parallel::affine_forward(x, w, b, y);
}
inline void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
  parallel::affine_backward_input(dy, w, dx);
}
inline void affine_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw,
                                   std::span<double> db) {
  parallel::affine_backward_params(dy, x, dw, db);
}
inline std::vector<std::size_t> nearest_neighbors(const Matrix& points) {
  return parallel::nearest_neighbors(points);
}
inline std::size_t permutation_exceedances(const CenteredPair& pair, std::size_t permutations,
                                           std::uint64_t seed, double threshold) {
  return parallel::permutation_exceedances(pair, permutations, seed, threshold);
}

/// Correlation of `pair.x` with `pair.y` permuted by `perm`.
double permuted_correlation(const CenteredPair& pair, std::span<const std::size_t> perm);

/// The b-th seeded permutation of 0..n-1 (shared by both kernel variants).
void seeded_permutation(std::uint64_t seed, std::size_t b, std::vector<std::size_t>& perm);

} // namespace localmax::kernels
