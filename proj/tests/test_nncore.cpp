#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mtlsa/errors.hpp"
#include "mtlsa/nncore.hpp"
#include "oracles.hpp"

using namespace mtlsa;

using oracle::Batch;
using oracle::random_batch;

TEST(InitNet, DeterministicPerSeedWithZeroBiases) {
  const auto a = init_net({2, 4}, 3, 2, 7);
  const auto b = init_net({2, 4}, 3, 2, 7);
  const auto c = init_net({2, 4}, 3, 2, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto* layers : {&a.trunk(), &a.head(Task::A), &a.head(Task::B)}) {
    for (const auto& layer : *layers) {
      for (double v : layer.bias) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(InitNet, GlorotBounds) {
  const auto net = init_net({5, 7}, 3, 2, 1);
  const double bound = std::sqrt(6.0 / (5 + 7));
  for (double w : net.trunk()[0].weight.values()) EXPECT_LE(std::abs(w), bound);
}

TEST(InitNet, RejectsDegenerateShapes) {
  EXPECT_THROW(init_net({2, 0}, 3, 2, 1), ConfigError);
  EXPECT_THROW(init_net({0}, 3, 2, 1), ConfigError);
  EXPECT_THROW(init_net({2, 4}, 1, 2, 1), ConfigError);
  EXPECT_THROW(init_net({}, 2, 2, 1), ConfigError);
  EXPECT_THROW(init_net({2, 4}, 2, 2, 1, NetOptions{{0}, Activation::Tanh}), ConfigError);
}

TEST(Predict, ZeroNetIsUniform) {
  const MultiTaskNet net(NetShape{{3, 5}, {}, 4, 2, Activation::Tanh});
  const auto p = predict(net, Task::A, std::vector<double>{1.0, -2.0, 0.5});
  for (double v : p.entries()) EXPECT_EQ(v, 0.25);
  EXPECT_THROW(predict(net, Task::A, std::vector<double>{1.0}), ShapeError);
}

TEST(Predict, SoftmaxHandValues) {
  const auto p = softmax(std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(p[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(p[0], 0.7311, 1e-4);
  EXPECT_NEAR(p[1], 0.2689, 1e-4);
  const auto zero = softmax(std::vector<double>{0, 0, 0});
  for (double v : zero) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto big = softmax(std::vector<double>{1000.0, -1000.0, 999.0});
  double s = 0.0;
  for (double v : big) {
    EXPECT_GT(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Predict, ForcedLogitsThroughClassificationLayer) {
  MultiTaskNet net(NetShape{{1, 1}, {}, 2, 2, Activation::Tanh});
  net.head(Task::A).back().bias = {1.0, 0.0};
  const auto p = predict(net, Task::A, std::vector<double>{0.3});
  EXPECT_NEAR(p[0], 0.7311, 1e-4);
}

TEST(Predict, OutputsOnSimplexForRandomNets) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto net = oracle::randomize(init_net({3, 6, 4}, 5, 3, t), rng, 3.0);
    std::vector<double> x{3.0 * (t % 7), -1.0, 0.5};
    for (Task task : {Task::A, Task::B}) {
      const auto p = predict(net, task, x);
      double s = 0.0;
      for (double v : p.entries()) {
        EXPECT_GT(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(ExtractFeatures, ShapeZeroAndDecomposition) {
  const auto net = init_net({2, 4}, 3, 2, 7, NetOptions{{6}, Activation::Tanh});
  const std::vector<double> x{0.3, -0.7};
  EXPECT_EQ(extract_features(net, Task::A, x).size(), 6u);
  EXPECT_EQ(net.feature_size(Task::A), 6u);
  for (Task t : {Task::A, Task::B}) {
    EXPECT_EQ(classify_features(net, t, extract_features(net, t, x)), predict(net, t, x));
  }
  const MultiTaskNet zero(NetShape{{2, 4}, {}, 3, 2, Activation::Tanh});
  for (double v : extract_features(zero, Task::B, x)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(extract_features(zero, Task::B, x).size(), 4u);
}

TEST(CrossEntropy, HandValuesAndErrors) {
  EXPECT_NEAR(cross_entropy(LabelVector({1, 0}), LabelVector({1 - 1e-12, 1e-12})), 0.0, 1e-11);
  EXPECT_NEAR(cross_entropy(LabelVector({0.5, 0.5}), LabelVector({0.5, 0.5})), std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy(LabelVector({0, 1}), LabelVector({0.5, 0.5})), 0.6931, 1e-4);
  EXPECT_THROW(cross_entropy(LabelVector({0, 1}), LabelVector({0.2, 0.3, 0.5})), ShapeError);
  EXPECT_THROW(cross_entropy(LabelVector({0, 1}), LabelVector({1, 0})), DomainError);
}

TEST(CrossEntropy, NonNegativeAndZeroOnlyForMatchingMass) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto y = oracle::random_label(rng, 3);
    const auto p = oracle::random_label(rng, 3);
    EXPECT_GE(cross_entropy(y, p), 0.0);
  }
  EXPECT_GT(cross_entropy(LabelVector({0.5, 0.5}), LabelVector({0.5, 0.5})), 0.1);
  EXPECT_LT(cross_entropy(LabelVector({0, 1}), LabelVector({1e-13 + 0.0, 1 - 1e-13})), 1e-12);
}

TEST(Adam, FirstStepHandValue) {
  AdamState adam({1}, AdamOptions{0.001});
  std::vector<double> param{0.0}, grad{1.0};
  adam.step({std::span<double>(param)}, {std::span<const double>(grad)});
  EXPECT_NEAR(param[0], -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(adam.step_count(), 1u);
  adam.step({std::span<double>(param)}, {std::span<const double>(grad)});
  EXPECT_EQ(adam.step_count(), 2u);
  std::vector<double> wrong{1.0, 2.0};
  EXPECT_THROW(adam.step({std::span<double>(wrong)}, {std::span<const double>(wrong)}), ShapeError);
}

TEST(Adam, MomentsMatchParameterShapes) {
  const auto net = init_net({3, 4}, 2, 3, 1);
  const auto adam = AdamState::for_net(net);
  const auto blocks = net.parameter_blocks();
  ASSERT_EQ(adam.first_moment().size(), blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    EXPECT_EQ(adam.first_moment()[b].size(), blocks[b].size());
    EXPECT_EQ(adam.second_moment()[b].size(), blocks[b].size());
  }
}

TEST(BackwardStep, ZeroLearningRateLeavesParameters) {
  std::mt19937_64 rng(4);
  auto net = init_net({2, 3}, 2, 2, 9);
  const auto before = net;
  auto adam = AdamState::for_net(net, AdamOptions{0.0});
  const auto batch = random_batch(rng, net, 5, false);
  const auto loss = backward_step(net, adam, batch.view());
  EXPECT_EQ(net, before);
  EXPECT_EQ(loss.total, batch_loss(before, batch.view()).total);
  EXPECT_GT(loss.total, 0.0);
}

TEST(BackwardStep, EmptyBatchThrows) {
  auto net = init_net({2, 3}, 2, 2, 9);
  auto adam = AdamState::for_net(net);
  EXPECT_THROW(backward_step(net, adam, BatchView{}), std::invalid_argument);
}

TEST(BackwardStep, LossSplitsIntoHeads) {
  std::mt19937_64 rng(6);
  const auto net = oracle::randomize(init_net({2, 3}, 2, 3, 1), rng);
  const auto batch = random_batch(rng, net, 7, true);
  const auto loss = batch_loss(net, batch.view());
  EXPECT_NEAR(loss.total, loss.task_a + loss.task_b, 1e-14);
  double manual = 0.0;
  for (std::size_t i = 0; i < 7; ++i) {
    if (batch.mask[i].task_a) manual += cross_entropy(batch.ta[i], predict(net, Task::A, batch.rows[i]));
    if (batch.mask[i].task_b) manual += cross_entropy(batch.tb[i], predict(net, Task::B, batch.rows[i]));
  }
  EXPECT_NEAR(loss.total, manual / 7.0, 1e-13);
}

TEST(BackwardStep, GradientMatchesFiniteDifferencesOn232Net) {
  std::mt19937_64 rng(8);
  const auto net = oracle::randomize(init_net({2, 3}, 2, 2, 3), rng);
  const auto batch = random_batch(rng, net, 4, false);
  const auto analytic = oracle::flatten(compute_gradients(net, batch.view()).grad);
  const auto numeric = oracle::numeric_gradient(net, batch.view());
  EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-4);
}

TEST(BackwardStep, GradientMatchesFiniteDifferencesWithMasksAndHeadLayers) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const Activation act = t % 2 ? Activation::Relu : Activation::Tanh;
    const auto net = oracle::randomize(init_net({3, 4, 3}, 3, 2, t, NetOptions{{3}, act}), rng);
    const auto batch = random_batch(rng, net, 6, true);
    const auto analytic = oracle::flatten(compute_gradients(net, batch.view()).grad);
    const auto numeric = oracle::numeric_gradient(net, batch.view());
    EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-4) << "trial " << t;
  }
}

TEST(BackwardStep, MaskedHeadReceivesNoGradient) {
  std::mt19937_64 rng(12);
  const auto net = oracle::randomize(init_net({2, 3}, 2, 2, 1), rng);
  auto batch = random_batch(rng, net, 5, false);
  for (auto& m : batch.mask) m = {true, false};
  const auto g = compute_gradients(net, batch.view()).grad;
  for (const auto& layer : g.head(Task::B)) {
    for (double v : layer.weight.values()) EXPECT_EQ(v, 0.0);
    for (double v : layer.bias) EXPECT_EQ(v, 0.0);
  }
}

TEST(BackwardStep, DeterministicTrajectory) {
  auto run = [] {
    std::mt19937_64 rng(14);
    auto net = init_net({2, 5}, 3, 2, 5);
    auto adam = AdamState::for_net(net, AdamOptions{0.01});
    for (int s = 0; s < 10; ++s) {
      const auto batch = random_batch(rng, net, 8, true);
      backward_step(net, adam, batch.view());
    }
    return net;
  };
  EXPECT_EQ(run(), run());
}

TEST(Snapshot, IsolatedFromLaterUpdates) {
  std::mt19937_64 rng(16);
  auto net = init_net({2, 3}, 2, 2, 2);
  const auto frozen = snapshot(net);
  const std::vector<double> x{0.1, 0.2};
  EXPECT_EQ(predict(frozen, Task::A, x), predict(net, Task::A, x));
  EXPECT_EQ(snapshot(frozen), frozen);
  auto adam = AdamState::for_net(net, AdamOptions{0.1});
  const auto batch = random_batch(rng, net, 4, false);
  backward_step(net, adam, batch.view());
  EXPECT_NE(net, frozen);
  EXPECT_EQ(frozen, init_net({2, 3}, 2, 2, 2));
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 rng(18);
  const auto net = oracle::randomize(init_net({3, 4, 2}, 3, 4, 1, NetOptions{{5}, Activation::Relu}), rng);
  const auto text = save_checkpoint(net);
  EXPECT_EQ(load_checkpoint(text), net);
  EXPECT_EQ(save_checkpoint(load_checkpoint(text)), text);
}

TEST(Checkpoint, MalformedInputReportsLine) {
  const auto text = save_checkpoint(init_net({2, 3}, 2, 2, 1));
  EXPECT_THROW(load_checkpoint("not a checkpoint\n"), ParseError);
  EXPECT_THROW(load_checkpoint(text.substr(0, text.size() / 2)), ParseError);
  auto broken = text;
  broken.replace(broken.find("activation tanh"), 15, "activation sine");
  try {
    load_checkpoint(broken);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
