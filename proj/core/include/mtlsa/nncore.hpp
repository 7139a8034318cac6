#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtlsa/labelops.hpp"
#include "mtlsa/matrix.hpp"

namespace mtlsa {

enum class Task { A, B };

inline constexpr Task other(Task t) noexcept { return t == Task::A ? Task::B : Task::A; }
std::string_view task_name(Task t) noexcept;

enum class Activation { Tanh, Relu };

std::string_view activation_name(Activation a) noexcept;
/// Accepts "tanh" and "relu"; anything else throws ConfigError.
Activation parse_activation(std::string_view name);

/// Fully connected layer; `weight` is out x in.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in_size() const noexcept { return weight.cols(); }
  std::size_t out_size() const noexcept { return weight.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

/// Architecture of a MultiTaskNet.
///
/// `layer_sizes` describes the shared trunk: `layer_sizes[0]` is the input
/// width and every further entry adds one activated dense layer. Each head is
/// `head_hidden` activated layers followed by a linear classification layer
/// and a softmax.
struct NetShape {
  std::vector<std::size_t> layer_sizes;
  std::vector<std::size_t> head_hidden;
  std::size_t classes_a = 2;
  std::size_t classes_b = 2;
  Activation activation = Activation::Tanh;

  bool operator==(const NetShape&) const = default;
};

/// Shared trunk plus two task heads. Value type: copying takes a snapshot.
class MultiTaskNet {
 public:
  /// All parameters zero. Throws ConfigError on a zero size or fewer than two classes.
  explicit MultiTaskNet(NetShape shape);

  const NetShape& shape() const noexcept { return shape_; }
  std::size_t input_size() const noexcept { return shape_.layer_sizes.front(); }
  std::size_t num_classes(Task t) const noexcept {
    return t == Task::A ? shape_.classes_a : shape_.classes_b;
  }
  /// Width of the layer feeding the classification layer of head `t`.
  std::size_t feature_size(Task t) const noexcept;

  std::vector<DenseLayer>& trunk() noexcept { return trunk_; }
  const std::vector<DenseLayer>& trunk() const noexcept { return trunk_; }
  /// Head layers, the last of which is the classification layer.
  std::vector<DenseLayer>& head(Task t) noexcept { return t == Task::A ? head_a_ : head_b_; }
  const std::vector<DenseLayer>& head(Task t) const noexcept {
    return t == Task::A ? head_a_ : head_b_;
  }

  /// Every weight matrix and bias vector in a fixed order: trunk, head a, head b;
  /// weight before bias within a layer.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  std::size_t parameter_count() const;

  bool operator==(const MultiTaskNet&) const = default;

 private:
  NetShape shape_;
  std::vector<DenseLayer> trunk_;
  std::vector<DenseLayer> head_a_;
  std::vector<DenseLayer> head_b_;
};

struct NetOptions {
  std::vector<std::size_t> head_hidden;
  Activation activation = Activation::Tanh;
};

/// Glorot-uniform weights from a seeded mt19937_64, zero biases.
MultiTaskNet init_net(const std::vector<std::size_t>& layer_sizes, std::size_t classes_a,
                      std::size_t classes_b, std::uint64_t seed, const NetOptions& options = {});

/// Deep copy. Kept as a named operation so call sites read as "freeze the predictor".
inline MultiTaskNet snapshot(const MultiTaskNet& net) { return net; }

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Penultimate activations of head `task`. Throws ShapeError on input size mismatch.
std::vector<double> extract_features(const MultiTaskNet& net, Task task,
                                     std::span<const double> input);
/// Classification layer + softmax applied to features from extract_features.
LabelVector classify_features(const MultiTaskNet& net, Task task,
                              std::span<const double> features);
LabelVector predict(const MultiTaskNet& net, Task task, std::span<const double> input);

/// Predictions below this are clamped before the log in cross_entropy.
inline constexpr double kLogFloor = 1e-12;

/// -sum_k target_k log(prediction_k). Throws ShapeError on length mismatch and
/// DomainError if any prediction entry is not strictly positive.
double cross_entropy(const LabelVector& target, const LabelVector& prediction);

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over an ordered list of parameter blocks.
class AdamState {
 public:
  AdamState(const std::vector<std::size_t>& block_sizes, AdamOptions options = {});
  static AdamState for_net(const MultiTaskNet& net, AdamOptions options = {});

  /// One update. Block count and sizes must match construction (ShapeError otherwise).
  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads);

  const AdamOptions& options() const noexcept { return options_; }
  std::uint64_t step_count() const noexcept { return step_count_; }
  const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

 private:
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t step_count_ = 0;
};

/// Which head terms of the two-task loss are active for one sample.
struct LossMask {
  bool task_a = true;
  bool task_b = true;
};

struct BatchLoss {
  double total = 0.0;   // mean over the batch of the active per-sample terms
  double task_a = 0.0;  // head-a share of `total`
  double task_b = 0.0;
};

/// Mini-batch view. All spans have the batch length. Targets of masked-off
/// terms are ignored but must still be valid label vectors.
struct BatchView {
  std::span<const std::span<const double>> inputs;
  std::span<const LabelVector> targets_a;
  std::span<const LabelVector> targets_b;
  std::span<const LossMask> mask;
};

/// Mean two-task cross-entropy of the batch without touching parameters.
BatchLoss batch_loss(const MultiTaskNet& net, const BatchView& batch);

struct Gradients {
  MultiTaskNet grad;  // same shape as the net, holds dLoss/dParam
  BatchLoss loss;
};

/// Exact backpropagation through both heads and the trunk.
Gradients compute_gradients(const MultiTaskNet& net, const BatchView& batch);

/// Loss before the update, then one Adam step on all parameters.
/// Throws std::invalid_argument on an empty batch.
BatchLoss backward_step(MultiTaskNet& net, AdamState& adam, const BatchView& batch);

/// Structured text checkpoint (schema version, shape, row-major parameter
/// arrays at 17 significant digits). Round-trips bit-exactly.
std::string save_checkpoint(const MultiTaskNet& net);
/// Throws ParseError on malformed input.
MultiTaskNet load_checkpoint(std::string_view text, const std::string& source = "checkpoint");

}  // namespace mtlsa
