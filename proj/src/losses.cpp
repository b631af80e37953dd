#include "localmax/losses.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace localmax {

double bce(double p, int y) {
  const double q = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return y > 0 ? -std::log(q) : -std::log(1.0 - q);
}

double bce_derivative(double p, int y) {
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  return y > 0 ? -1.0 / p : 1.0 / (1.0 - p);
}

namespace {

bool comparator_family(Objective o) {
  return o == Objective::comparator || o == Objective::generator_h;
}

Matrix column_of(std::span<const double> v) { return Matrix::column(v); }

} // namespace

ObjectiveResult evaluate_objective(Objective objective, const Matrix& x, const Network& c,
                                   const Network& h, const Network& gen,
                                   const LossSettings& settings, bool with_gradient) {
  const std::size_t m = x.rows();
  if (m == 0) throw ConfigError("loss: empty batch");
  const std::size_t d = x.cols();
  if (c.in_dim() != d || h.in_dim() != 2 * d || gen.in_dim() != d || gen.out_dim() != d)
    throw ConfigError("loss: networks do not share the input dimension");
  if (settings.lambda < 0.0) throw ConfigError("loss: lambda must be non-negative");

  const bool h_family = comparator_family(objective);
  const bool symmetric = h_family && settings.symmetric;
  const bool use_c = settings.coupling.c_factor;
  const bool use_h = settings.coupling.h_factor;
  const double inv_m = 1.0 / static_cast<double>(m);

  ObjectiveResult result;

  const ForwardTrace gen_trace = forward(gen, x, Mode::train);
  const Matrix& xg = gen_trace.output();

  // Positive term on the training points.
  ForwardTrace pos_trace = h_family ? forward(h, hconcat(x, x), Mode::train)
                                    : forward(c, x, Mode::train);
  std::vector<double> pos(m);
  for (std::size_t i = 0; i < m; ++i) pos[i] = bce(pos_trace.output()(i, 0), +1);

  // Factors of the product term on the generated points.
  std::optional<ForwardTrace> c_neg, h_neg, h_sym;
  std::vector<double> a(m, 1.0), b(m, 1.0), s(m, 0.0);
  if (use_c) {
    c_neg = forward(c, xg, Mode::train);
    for (std::size_t i = 0; i < m; ++i) a[i] = bce(c_neg->output()(i, 0), -1);
  }
  if (use_h) {
    h_neg = forward(h, hconcat(xg, x), Mode::train);
    for (std::size_t i = 0; i < m; ++i) b[i] = bce(h_neg->output()(i, 0), -1);
  }
  if (symmetric) {
    h_sym = forward(h, hconcat(x, xg), Mode::train);
    for (std::size_t i = 0; i < m; ++i) s[i] = bce(h_sym->output()(i, 0), +1);
  }

  double pos_sum = 0.0, prod_sum = 0.0, dist_sum = 0.0;
  std::vector<double> dist(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    pos_sum += pos[i];
    prod_sum += a[i] * b[i];
    if (symmetric) prod_sum += a[i] * s[i];
    if (objective == Objective::generator_h) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double t = x(i, k) - xg(i, k);
        sq += t * t;
      }
      dist[i] = std::sqrt(sq);
      dist_sum += dist[i];
    }
  }

  LossBreakdown& L = result.loss;
  L.positive_term = pos_sum * inv_m;
  L.product_term = prod_sum * inv_m;
  switch (objective) {
  case Objective::classifier:
  case Objective::comparator:
    L.total = L.positive_term + L.product_term;
    break;
  case Objective::generator_c:
    L.total = -L.product_term;
    break;
  case Objective::generator_h:
    L.distance_term = settings.lambda * dist_sum * inv_m;
    L.total = L.distance_term - L.positive_term - L.product_term;
    break;
  }
  if (!with_gradient) return result;

  auto prob = [](const std::optional<ForwardTrace>& t, std::size_t i) { return t->output()(i, 0); };

  if (objective == Objective::classifier) {
    std::vector<double> g_pos(m), g_neg(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) g_pos[i] = inv_m * bce_derivative(pos_trace.output()(i, 0), +1);
    result.grad = backward(c, pos_trace, column_of(g_pos));
    if (use_c) {
      for (std::size_t i = 0; i < m; ++i) g_neg[i] = inv_m * b[i] * bce_derivative(prob(c_neg, i), -1);
      result.grad.accumulate(backward(c, *c_neg, column_of(g_neg)));
    }
    result.grad.input = Matrix();
    result.traces.push_back(std::move(pos_trace));
    if (c_neg) result.traces.push_back(std::move(*c_neg));
    return result;
  }

  if (objective == Objective::comparator) {
    std::vector<double> g(m);
    for (std::size_t i = 0; i < m; ++i) g[i] = inv_m * bce_derivative(pos_trace.output()(i, 0), +1);
    result.grad = backward(h, pos_trace, column_of(g));
    result.grad.input = Matrix();
    if (use_h) {
      for (std::size_t i = 0; i < m; ++i) g[i] = inv_m * a[i] * bce_derivative(prob(h_neg, i), -1);
      auto gn = backward(h, *h_neg, column_of(g));
      gn.input = Matrix();
      result.grad.accumulate(gn);
    }
    if (symmetric) {
      for (std::size_t i = 0; i < m; ++i) g[i] = inv_m * a[i] * bce_derivative(prob(h_sym, i), +1);
      auto gs = backward(h, *h_sym, column_of(g));
      gs.input = Matrix();
      result.grad.accumulate(gs);
    }
    result.traces.push_back(std::move(pos_trace));
    if (h_neg) result.traces.push_back(std::move(*h_neg));
    if (h_sym) result.traces.push_back(std::move(*h_sym));
    return result;
  }

  // Generators: d total / d G(x), routed through frozen c and h.
  Matrix dxg(m, d, 0.0);
  if (objective == Objective::generator_h && settings.lambda > 0.0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (dist[i] == 0.0) continue; // subgradient 0 at the kink
      for (std::size_t k = 0; k < d; ++k)
        dxg(i, k) += settings.lambda * inv_m * (xg(i, k) - x(i, k)) / dist[i];
    }
  }
  std::vector<double> g(m);
  if (use_c) {
    for (std::size_t i = 0; i < m; ++i) {
      const double other = b[i] + (symmetric ? s[i] : 0.0);
      g[i] = -inv_m * other * bce_derivative(prob(c_neg, i), -1);
    }
    const auto gc = backward(c, *c_neg, column_of(g));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < d; ++k) dxg(i, k) += gc.input(i, k);
  }
  if (use_h) {
    for (std::size_t i = 0; i < m; ++i) g[i] = -inv_m * a[i] * bce_derivative(prob(h_neg, i), -1);
    const auto gh = backward(h, *h_neg, column_of(g));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < d; ++k) dxg(i, k) += gh.input(i, k);
  }
  if (symmetric) {
    for (std::size_t i = 0; i < m; ++i) g[i] = -inv_m * a[i] * bce_derivative(prob(h_sym, i), +1);
    const auto gs = backward(h, *h_sym, column_of(g));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < d; ++k) dxg(i, k) += gs.input(i, d + k);
  }
  result.grad = backward(gen, gen_trace, dxg);
  result.traces.push_back(gen_trace);
  return result;
}

LossBreakdown loss_C(const Matrix& x, const Network& c, const Network& h, const Network& g_c,
                     Coupling coupling) {
  LossSettings s;
  s.coupling = coupling;
  return evaluate_objective(Objective::classifier, x, c, h, g_c, s, false).loss;
}

LossBreakdown loss_H(const Matrix& x, const Network& c, const Network& h, const Network& g_h,
                     bool symmetric, Coupling coupling) {
  LossSettings s;
  s.symmetric = symmetric;
  s.coupling = coupling;
  return evaluate_objective(Objective::comparator, x, c, h, g_h, s, false).loss;
}

double loss_Gc(const Matrix& x, const Network& c, const Network& h, const Network& g_c,
               Coupling coupling) {
  LossSettings s;
  s.coupling = coupling;
  return evaluate_objective(Objective::generator_c, x, c, h, g_c, s, false).loss.total;
}

LossBreakdown loss_Gh(const Matrix& x, const Network& c, const Network& h, const Network& g_h,
                      double lambda, bool symmetric, Coupling coupling) {
  LossSettings s;
  s.lambda = lambda;
  s.symmetric = symmetric;
  s.coupling = coupling;
  return evaluate_objective(Objective::generator_h, x, c, h, g_h, s, false).loss;
}

} // namespace localmax
