#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "localmax/gradcheck.hpp"
#include "localmax/losses.hpp"
#include "localmax/models.hpp"

using namespace localmax;

namespace {

const double kLog2 = std::log(2.0);

// Independent per-sample evaluation straight from the definitions.
double ref_bce(double p, int y) {
  p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  return y > 0 ? -std::log(p) : -std::log(1.0 - p);
}

double ref_scalar(const Network& net, std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  return predict(net, m, Mode::train)(0, 0);
}

// Forces a sigmoid head to output exactly 0.5.
void flatten_head(Network& net) {
  for (auto it = net.layers.rbegin(); it != net.layers.rend(); ++it)
    if (it->spec.kind == LayerKind::affine) {
      std::fill(it->weight.storage().begin(), it->weight.storage().end(), 0.0);
      std::fill(it->bias.begin(), it->bias.end(), 0.0);
      return;
    }
}

Network identity_generator(std::size_t d) {
  Network g = init_network(std::vector{LayerSpec::affine(d, d)}, 0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) g.layers[0].weight(i, j) = i == j ? 1.0 : 0.0;
  return g;
}

QuadModel small_model(std::uint64_t seed, bool bn = false) {
  ModelOptions o;
  o.hidden = {6, 4};
  o.batch_norm = bn;
  ModelOptions go = o;
  go.generator_output = GeneratorOutput::identity;
  return build_quad_model(2, o, go, seed);
}

std::vector<double> finite_difference(Network& player, const std::function<double()>& f, double h = 1e-5) {
  std::vector<double> out;
  for (auto p : player.parameters())
    for (auto& w : p) {
      const double orig = w;
      w = orig + h;
      const double a = f();
      w = orig - h;
      const double b = f();
      w = orig;
      out.push_back((a - b) / (2 * h));
    }
  return out;
}

} // namespace

TEST(Bce, ValuesAndClamp) {
  EXPECT_DOUBLE_EQ(bce(0.5, 1), kLog2);
  EXPECT_DOUBLE_EQ(bce(0.5, -1), kLog2);
  EXPECT_NEAR(bce(0.9, 1), -std::log(0.9), 1e-15);
  EXPECT_NEAR(bce(0.9, -1), -std::log(0.1), 1e-12);
  EXPECT_NEAR(bce(0.0, 1), -std::log(1e-7), 1e-9);
  EXPECT_TRUE(std::isfinite(bce(1.0, -1)));
  EXPECT_EQ(bce_derivative(0.0, 1), 0.0);
  EXPECT_EQ(bce_derivative(1.0, -1), 0.0);
}

TEST(Bce, DerivativeMatchesFiniteDifferences) {
  for (double p = 0.05; p < 0.96; p += 0.05)
    for (int y : {-1, 1}) {
      const double fd = (bce(p + 1e-6, y) - bce(p - 1e-6, y)) / 2e-6;
      EXPECT_NEAR(bce_derivative(p, y), fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Losses, ScalarOracleAgreement) {
  const QuadModel q = small_model(3);
  const Matrix x = testutil::random_matrix(5, 2, 8);
  // Train-mode networks without batch-norm are row-independent, so per-row
  // evaluation matches the batched one.
  double pos = 0.0, prod_c = 0.0, pos_h = 0.0, prod_h = 0.0, sym = 0.0, dist = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    std::vector<double> xc(2), xh(2);
    Matrix m(1, 2);
    std::copy(xi.begin(), xi.end(), m.row(0).begin());
    const Matrix gc = predict(q.g_c, m, Mode::train), gh = predict(q.g_h, m, Mode::train);
    std::copy(gc.row(0).begin(), gc.row(0).end(), xc.begin());
    std::copy(gh.row(0).begin(), gh.row(0).end(), xh.begin());
    auto cat = [](std::span<const double> a, std::span<const double> b) {
      std::vector<double> v(a.begin(), a.end());
      v.insert(v.end(), b.begin(), b.end());
      return v;
    };
    std::vector<double> xx = cat(xi, xi);
    pos += ref_bce(ref_scalar(q.c, xi), 1);
    prod_c += ref_bce(ref_scalar(q.c, xc), -1) * ref_bce(ref_scalar(q.h, cat(xc, xi)), -1);
    pos_h += ref_bce(ref_scalar(q.h, xx), 1);
    prod_h += ref_bce(ref_scalar(q.c, xh), -1) * ref_bce(ref_scalar(q.h, cat(xh, xi)), -1);
    sym += ref_bce(ref_scalar(q.c, xh), -1) * ref_bce(ref_scalar(q.h, cat(xi, xh)), 1);
    dist += std::hypot(xi[0] - xh[0], xi[1] - xh[1]);
  }
  const double m = static_cast<double>(x.rows());
  const auto lc = loss_C(x, q.c, q.h, q.g_c);
  EXPECT_NEAR(lc.positive_term, pos / m, 1e-12);
  EXPECT_NEAR(lc.product_term, prod_c / m, 1e-12);
  EXPECT_NEAR(lc.total, (pos + prod_c) / m, 1e-12);

  const auto lh = loss_H(x, q.c, q.h, q.g_h, false);
  EXPECT_NEAR(lh.total, (pos_h + prod_h) / m, 1e-12);
  const auto lhs = loss_H(x, q.c, q.h, q.g_h, true);
  EXPECT_NEAR(lhs.total, (pos_h + prod_h + sym) / m, 1e-12);

  const auto lg = loss_Gh(x, q.c, q.h, q.g_h, 0.7);
  EXPECT_NEAR(lg.distance_term, 0.7 * dist / m, 1e-12);
  EXPECT_NEAR(lg.total, 0.7 * dist / m - (pos_h + prod_h) / m, 1e-12);
}

TEST(Losses, GeneratorCIsNegatedProduct) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const QuadModel q = small_model(s);
    const Matrix x = testutil::random_matrix(9, 2, 50 + s);
    EXPECT_NEAR(loss_Gc(x, q.c, q.h, q.g_c), -loss_C(x, q.c, q.h, q.g_c).product_term, 1e-12);
  }
}

TEST(Losses, HalfProbabilityValues) {
  QuadModel q = small_model(1);
  flatten_head(q.c);
  flatten_head(q.h);
  const Matrix x = testutil::random_matrix(4, 2, 2);
  EXPECT_NEAR(loss_H(x, q.c, q.h, q.g_h, true).total, kLog2 + 2 * kLog2 * kLog2, 1e-12);
  EXPECT_NEAR(loss_H(x, q.c, q.h, q.g_h, false).total, kLog2 + kLog2 * kLog2, 1e-12);
  EXPECT_NEAR(loss_C(x, q.c, q.h, q.g_c).total, kLog2 + kLog2 * kLog2, 1e-12);

  const auto gh = loss_Gh(x, q.c, q.h, identity_generator(2), 1.0);
  EXPECT_EQ(gh.distance_term, 0.0);
  EXPECT_NEAR(gh.total, -(kLog2 + kLog2 * kLog2), 1e-12);
  const auto gh0 = loss_Gh(x, q.c, q.h, q.g_h, 0.0);
  EXPECT_NEAR(gh0.total, -loss_H(x, q.c, q.h, q.g_h, false).total, 1e-12);
}

TEST(Losses, CouplingDropsFactor) {
  QuadModel q = small_model(5);
  flatten_head(q.h);
  const Matrix x = testutil::random_matrix(6, 2, 3);
  const auto full = loss_C(x, q.c, q.h, q.g_c);
  const auto c_only = loss_C(x, q.c, q.h, q.g_c, Coupling{true, false});
  // With h fixed at 0.5 the h factor is log 2 everywhere.
  EXPECT_NEAR(full.product_term, kLog2 * c_only.product_term, 1e-12);
}

TEST(Losses, GeneratorCMonotoneInFooledClassifier) {
  QuadModel q = small_model(2);
  flatten_head(q.h);
  const Matrix x = testutil::random_matrix(3, 2, 4);
  flatten_head(q.c);
  const double at_half = loss_Gc(x, q.c, q.h, q.g_c);
  // Push c towards 1 everywhere through its output bias.
  for (auto it = q.c.layers.rbegin(); it != q.c.layers.rend(); ++it)
    if (it->spec.kind == LayerKind::affine) {
      it->bias[0] = 3.0;
      break;
    }
  EXPECT_LT(loss_Gc(x, q.c, q.h, q.g_c), at_half);
}

// Instances where a ReLU kink sits inside the finite-difference step are
// skipped; they are recognized by central differences at two step sizes
// disagreeing, independently of the analytic gradient.
TEST(Losses, ObjectiveGradientsMatchFiniteDifferences) {
  for (bool bn : {false, true}) {
    const double tol = bn ? 1e-3 : 1e-4;
    std::size_t accepted = 0;
    for (std::uint64_t inst = 0; accepted < 20 && inst < 60; ++inst) {
      QuadModel q = small_model(inst, bn);
      const Matrix x = testutil::random_matrix(6, 2, 1000 + inst);
      struct Check {
        std::vector<double> analytic, numeric;
      };
      std::vector<Check> checks;
      bool smooth = true;
      for (bool symmetric : {false, true}) {
        const LossSettings s{0.5 + 0.1 * static_cast<double>(inst % 5), symmetric, {}};
        for (Objective obj : {Objective::classifier, Objective::comparator, Objective::generator_c,
                              Objective::generator_h}) {
          Network& gen = obj == Objective::generator_h || obj == Objective::comparator ? q.g_h : q.g_c;
          Network& player = obj == Objective::classifier ? q.c : obj == Objective::comparator ? q.h : gen;
          auto f = [&] { return evaluate_objective(obj, x, q.c, q.h, gen, s, false).loss.total; };
          const auto res = evaluate_objective(obj, x, q.c, q.h, gen, s, true);
          Check c{{}, finite_difference(player, f)};
          smooth = smooth && max_relative_error(c.numeric, finite_difference(player, f, 1e-6)) < 1e-5;
          for (const auto& p : res.grad.params) c.analytic.insert(c.analytic.end(), p.begin(), p.end());
          checks.push_back(std::move(c));
        }
      }
      if (!smooth) continue;
      ++accepted;
      for (const auto& c : checks) {
        ASSERT_EQ(c.analytic.size(), c.numeric.size());
        EXPECT_LT(max_relative_error(c.analytic, c.numeric), tol) << "bn=" << bn << " inst=" << inst;
      }
    }
    EXPECT_EQ(accepted, 20u) << "bn=" << bn;
  }
}

TEST(Losses, GradientRoutedToTrainedPlayerOnly) {
  QuadModel q = small_model(7);
  const Matrix x = testutil::random_matrix(4, 2, 9);
  const LossSettings s;
  EXPECT_EQ(evaluate_objective(Objective::classifier, x, q.c, q.h, q.g_c, s, true).grad.params.size(),
            q.c.parameters().size());
  EXPECT_EQ(evaluate_objective(Objective::comparator, x, q.c, q.h, q.g_h, s, true).grad.params.size(),
            q.h.parameters().size());
  EXPECT_EQ(evaluate_objective(Objective::generator_c, x, q.c, q.h, q.g_c, s, true).grad.params.size(),
            q.g_c.parameters().size());
  // The generator's gradient is nonzero only because it flows through c and h.
  const auto g = evaluate_objective(Objective::generator_c, x, q.c, q.h, q.g_c, s, true).grad.flatten();
  EXPECT_TRUE(std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; }));
}
