#include <cmath>

#include <gtest/gtest.h>

#include "bleubound/errors.hpp"
#include "bleubound/optimizer.hpp"

using namespace bleubound;

TEST(Adam, FirstStepMovesByTheLearningRate) {
  Adam adam(3, 0.1);
  std::vector<double> x{1.0, 1.0, 1.0};
  const std::vector<double> g{2.0, -0.5, 1e-3};
  adam.step(x, g);
  // Bias correction makes the first update lr * g / (|g| + eps).
  EXPECT_NEAR(x[0], 0.9, 1e-8);
  EXPECT_NEAR(x[1], 1.1, 1e-8);
  EXPECT_NEAR(x[2], 1.0 - 0.1 * 1e-3 / (1e-3 + 1e-8), 1e-12);
  EXPECT_EQ(adam.steps_taken(), 1u);
}

TEST(Adam, MatchesHandRecurrence) {
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Adam adam(1, lr);
  std::vector<double> x{0.5};
  double m = 0, v = 0, ref = 0.5;
  for (int t = 1; t <= 25; ++t) {
    const double g = std::sin(t) + 0.3;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    ref -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    adam.step(x, std::vector<double>{g});
    EXPECT_NEAR(x[0], ref, 1e-13);
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Adam adam(2, 1e-4);
  std::vector<double> x{0.25, -3.0};
  for (int i = 0; i < 10; ++i) adam.step(x, std::vector<double>{0.0, 0.0});
  EXPECT_EQ(x, (std::vector<double>{0.25, -3.0}));
}

TEST(Adam, MinimizesAQuadratic) {
  Adam adam(1, 0.05);
  std::vector<double> x{3.0};
  for (int i = 0; i < 2000; ++i) adam.step(x, std::vector<double>{2.0 * (x[0] - 1.0)});
  EXPECT_NEAR(x[0], 1.0, 1e-2);
}

TEST(Sgd, Step) {
  Sgd sgd(0.5);
  std::vector<double> x{1.0, 2.0};
  sgd.step(x, std::vector<double>{1.0, -2.0});
  EXPECT_EQ(x, (std::vector<double>{0.5, 3.0}));
}

TEST(Optimizer, FactoryAndErrors) {
  EXPECT_EQ(parse_optimizer("adam"), OptimizerKind::Adam);
  EXPECT_EQ(parse_optimizer("sgd"), OptimizerKind::Sgd);
  EXPECT_EQ(to_string(OptimizerKind::Adam), "adam");
  EXPECT_THROW(parse_optimizer("rmsprop"), InvalidConfig);
  EXPECT_THROW(make_optimizer(OptimizerKind::Adam, 3, 0.0), InvalidConfig);
  auto opt = make_optimizer(OptimizerKind::Adam, 2, 1e-3);
  std::vector<double> x{0, 0};
  EXPECT_THROW(opt->step(x, std::vector<double>{1.0}), ShapeMismatch);
}
