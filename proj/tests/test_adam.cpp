#include <gtest/gtest.h>

#include <cmath>

#include "localmax/adam.hpp"

using namespace localmax;

namespace {

Network scalar_net(double w, double b) {
  Network net = init_network(std::vector{LayerSpec::affine(1, 1)}, 0);
  net.layers[0].weight(0, 0) = w;
  net.layers[0].bias[0] = b;
  return net;
}

Gradients grads(const Network& net, double gw, double gb) {
  Gradients g = Gradients::zeros_like(net);
  g.params[0][0] = gw;
  g.params[1][0] = gb;
  return g;
}

// Textbook bias-corrected Adam on one scalar.
struct ScalarAdam {
  double lr, b1, b2, eps, m = 0, v = 0;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

} // namespace

TEST(Adam, DefaultHyperparameters) {
  const AdamHyper h;
  EXPECT_EQ(h.lr, 1e-4);
  EXPECT_EQ(h.beta1, 0.5);
  EXPECT_EQ(h.beta2, 0.999);
  EXPECT_EQ(h.eps, 1e-8);
}

TEST(Adam, FirstStepMagnitudeBoundedByLr) {
  for (double g : {1e-6, 0.3, -5.0, 1e4}) {
    Network net = scalar_net(0.7, 0.0);
    AdamState st = AdamState::for_network(net, AdamHyper{.lr = 1e-3});
    adam_step(net, grads(net, g, 0.0), st);
    EXPECT_LE(std::abs(net.layers[0].weight(0, 0) - 0.7), 1e-3 * (1 + 1e-9)) << g;
  }
}

TEST(Adam, MatchesScalarReference) {
  Network net = scalar_net(0.5, -0.25);
  const AdamHyper hyper{.lr = 0.01};
  AdamState st = AdamState::for_network(net, hyper);
  ScalarAdam rw{hyper.lr, hyper.beta1, hyper.beta2, hyper.eps};
  ScalarAdam rb = rw;
  double w = 0.5, b = -0.25;
  const double gws[] = {0.3, -1.2, 0.05, 2.0, 0.0};
  const double gbs[] = {1.0, 1.0, -0.5, 0.25, 3.0};
  for (int i = 0; i < 5; ++i) {
    adam_step(net, grads(net, gws[i], gbs[i]), st);
    w = rw.step(w, gws[i]);
    b = rb.step(b, gbs[i]);
    EXPECT_NEAR(net.layers[0].weight(0, 0), w, 1e-15);
    EXPECT_NEAR(net.layers[0].bias[0], b, 1e-15);
  }
  EXPECT_EQ(st.step, 5u);
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  Network net = scalar_net(1.0, 2.0);
  AdamState st = AdamState::for_network(net);
  adam_step(net, grads(net, 0.1, 0.1), st);
  const Network before = net;
  const AdamState st_before = st;
  EXPECT_THROW(adam_step(net, grads(net, NAN, 0.1), st), NumericError);
  EXPECT_THROW(adam_step(net, grads(net, 0.1, INFINITY), st), NumericError);
  EXPECT_EQ(net, before);
  EXPECT_EQ(st, st_before);
}
