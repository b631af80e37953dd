#pragma once

// Per-element bodies shared by the serial and OpenMP kernels, so both variants
// reduce in the same order.

#include <cmath>
#include <limits>

#include "localmax/kernels.hpp"

namespace localmax::kernels::detail {

inline void check_affine(const Matrix& x, const Matrix& w, std::span<const double> b) {
  if (x.cols() != w.cols() || b.size() != w.rows())
    throw InternalError("affine kernel: shape mismatch");
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

inline void affine_row(const Matrix& x, const Matrix& w, std::span<const double> b, Matrix& y,
                       std::size_t i) {
  const std::size_t in = x.cols();
  const double* xr = x.row(i).data();
  double* yr = y.row(i).data();
  for (std::size_t o = 0; o < w.rows(); ++o) yr[o] = dot(xr, w.row(o).data(), in) + b[o];
}

inline void backward_input_row(const Matrix& dy, const Matrix& w, Matrix& dx, std::size_t i) {
  double* dxr = dx.row(i).data();
  const double* dyr = dy.row(i).data();
  for (std::size_t k = 0; k < w.cols(); ++k) dxr[k] = 0.0;
  for (std::size_t o = 0; o < w.rows(); ++o) {
    const double g = dyr[o];
    const double* wr = w.row(o).data();
    for (std::size_t k = 0; k < w.cols(); ++k) dxr[k] += g * wr[k];
  }
}

inline void backward_params_row(const Matrix& dy, const Matrix& x, Matrix& dw,
                                std::span<double> db, std::size_t o) {
  double* dwr = dw.row(o).data();
  for (std::size_t k = 0; k < x.cols(); ++k) dwr[k] = 0.0;
  double bias = 0.0;
  for (std::size_t n = 0; n < dy.rows(); ++n) {
    const double g = dy(n, o);
    bias += g;
    const double* xr = x.row(n).data();
    for (std::size_t k = 0; k < x.cols(); ++k) dwr[k] += g * xr[k];
  }
  db[o] = bias;
}

inline std::size_t nearest_of(const Matrix& p, std::size_t i) {
  std::size_t best = i;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p.rows(); ++j) {
    if (j == i) continue;
    double d = 0.0;
    for (std::size_t k = 0; k < p.cols(); ++k) {
      const double t = p(i, k) - p(j, k);
      d += t * t;
    }
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

} // namespace localmax::kernels::detail
