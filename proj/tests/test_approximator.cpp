#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace ontotutor;
using testing_support::random_vector;

namespace {

double objective(const Approximator& net, const std::vector<double>& x, const std::vector<double>& seed) {
  const auto y = net.forward(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += seed[i] * y[i];
  return s;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1e-6, std::abs(analytic), std::abs(numeric)});
}

Approximator random_net(Rng& rng) {
  std::vector<std::size_t> sizes{1 + rng.index(6)};
  const std::size_t hidden = 1 + rng.index(3);
  for (std::size_t i = 0; i < hidden; ++i) sizes.push_back(2 + rng.index(12));
  sizes.push_back(1 + rng.index(5));
  Approximator net(sizes, rng.uniform() < 0.5 ? OutputActivation::Logistic : OutputActivation::Linear);
  net.initialize(rng, 0.5);
  return net;
}

}  // namespace

TEST(Approximator, ParameterLayout) {
  const auto net = Approximator::actor(3, 5, {64, 64});
  EXPECT_EQ(net.parameter_count(), 3u * 64 + 64 + 64 * 64 + 64 + 64 * 5 + 5);
  EXPECT_EQ(net.weights(2).size(), 64u * 5);
  EXPECT_EQ(net.biases(2).size(), 5u);
  const auto critic = Approximator::critic(3, 5, {64, 64});
  EXPECT_EQ(critic.input_dim(), 8u);
  EXPECT_EQ(critic.output_dim(), 1u);
}

TEST(Approximator, ZeroActorOutputsHalf) {
  const auto net = Approximator::actor(3, 5, {16});
  for (double v : net.forward(std::vector<double>{0.3, 0.9, 0.1})) EXPECT_EQ(v, 0.5);
}

TEST(Approximator, InputSizeChecked) {
  const auto net = Approximator::actor(3, 5, {16});
  EXPECT_THROW(net.forward(std::vector<double>{1.0, 2.0}), Error);
}

TEST(GradientCheck, MatchesCentralDifferences) {
  Rng rng(2024);
  const double h = 1e-5;
  for (int trial = 0; trial < 12; ++trial) {
    auto net = random_net(rng);
    const auto x = random_vector(rng, net.input_dim(), -1.0, 1.0);
    const auto seed = random_vector(rng, net.output_dim(), -1.0, 1.0);
    const auto g = net.gradient_of(x, seed);

    double worst = 0.0;
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
      const double saved = net.parameters()[i];
      net.parameters()[i] = saved + h;
      const double up = objective(net, x, seed);
      net.parameters()[i] = saved - h;
      const double down = objective(net, x, seed);
      net.parameters()[i] = saved;
      worst = std::max(worst, relative_error(g.parameters[i], (up - down) / (2 * h)));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      worst = std::max(worst, relative_error(g.input[i], (objective(net, xp, seed) - objective(net, xm, seed)) / (2 * h)));
    }
    EXPECT_LT(worst, 1e-4) << "trial " << trial;
  }
}

TEST(GradientCheck, ZeroNetOnlyBiasPathsNonZero) {
  const Approximator net({3, 4, 2}, OutputActivation::Linear);
  const std::vector<double> x(3, 0.0);
  const std::vector<double> seed{1.0, -2.0};
  const auto g = net.gradient_of(x, seed);
  // Hidden layer units sit at the ReLU kink with zero weights downstream, so
  // only the output biases see the seed.
  std::vector<double> expected(net.parameter_count(), 0.0);
  const std::size_t output_bias = 3 * 4 + 4 + 4 * 2;
  expected[output_bias] = 1.0;
  expected[output_bias + 1] = -2.0;
  EXPECT_EQ(g.parameters, expected);
  for (double v : g.input) EXPECT_EQ(v, 0.0);
}

TEST(GradientCheck, LinearInSeed) {
  Rng rng(8);
  const auto net = random_net(rng);
  const auto x = random_vector(rng, net.input_dim());
  const auto seed = random_vector(rng, net.output_dim(), -1.0, 1.0);
  auto doubled = seed;
  for (auto& s : doubled) s *= 2.0;
  const auto g1 = net.gradient_of(x, seed);
  const auto g2 = net.gradient_of(x, doubled);
  for (std::size_t i = 0; i < g1.parameters.size(); ++i) EXPECT_NEAR(g2.parameters[i], 2.0 * g1.parameters[i], 1e-12);
}

TEST(Approximator, SoftUpdateBlendsExactly) {
  Rng rng(3);
  auto target = Approximator::critic(3, 5, {8});
  auto live = target;
  target.initialize(rng);
  live.initialize(rng);
  const auto before = target;
  target.soft_update_from(live, 0.25);
  for (std::size_t i = 0; i < target.parameter_count(); ++i)
    EXPECT_NEAR(target.parameters()[i], 0.75 * before.parameters()[i] + 0.25 * live.parameters()[i], 1e-15);
  EXPECT_THROW(target.soft_update_from(Approximator::critic(3, 4, {8}), 0.5), Error);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState opt(2);
  std::vector<double> p{1.0, -1.0};
  const std::vector<double> g{0.5, -3.0};
  opt.step(p, g, 0.01);
  EXPECT_NEAR(p[0], 0.99, 1e-9);
  EXPECT_NEAR(p[1], -0.99, 1e-9);
  EXPECT_EQ(opt.steps, 1u);
}
