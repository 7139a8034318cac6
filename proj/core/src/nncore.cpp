#include "mtlsa/nncore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "mtlsa/errors.hpp"

namespace mtlsa {

std::string_view task_name(Task t) noexcept { return t == Task::A ? "A" : "B"; }

std::string_view activation_name(Activation a) noexcept {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected tanh or relu)");
}

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out) {
  return DenseLayer{Matrix(out, in), std::vector<double>(out, 0.0)};
}

std::vector<DenseLayer> make_head(std::size_t in, const std::vector<std::size_t>& hidden,
                                  std::size_t classes) {
  std::vector<DenseLayer> head;
  for (std::size_t width : hidden) {
    head.push_back(make_layer(in, width));
    in = width;
  }
  head.push_back(make_layer(in, classes));
  return head;
}

double activate(Activation a, double z) {
  return a == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// Derivative expressed through the activation output.
double activate_grad(Activation a, double out) {
  return a == Activation::Tanh ? 1.0 - out * out : (out > 0.0 ? 1.0 : 0.0);
}

std::vector<double> dense(const DenseLayer& layer, std::span<const double> in) {
  std::vector<double> out(layer.out_size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto w = layer.weight.row(r);
    double acc = layer.bias[r];
    for (std::size_t c = 0; c < in.size(); ++c) acc += w[c] * in[c];
    out[r] = acc;
  }
  return out;
}

void apply_activation(Activation a, std::vector<double>& v) {
  for (double& x : v) x = activate(a, x);
}

void check_input(const MultiTaskNet& net, std::span<const double> input) {
  if (input.size() != net.input_size()) {
    throw ShapeError("input has " + std::to_string(input.size()) + " features, net expects " +
                     std::to_string(net.input_size()));
  }
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

// Activations of every layer for one sample: [input, trunk..., ] and per head
// [hidden..., logits].
struct ForwardTrace {
  std::vector<std::vector<double>> trunk;  // trunk[0] is the input
  std::vector<std::vector<double>> head_a;
  std::vector<std::vector<double>> head_b;
};

void forward_head(const MultiTaskNet& net, Task task, std::span<const double> features,
                  std::vector<std::vector<double>>& out) {
  const auto& layers = net.head(task);
  std::vector<double> cur(features.begin(), features.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cur = dense(layers[l], cur);
    if (l + 1 < layers.size()) apply_activation(net.shape().activation, cur);
    out.push_back(cur);
  }
}

ForwardTrace forward(const MultiTaskNet& net, std::span<const double> input, bool need_a,
                     bool need_b) {
  ForwardTrace tr;
  tr.trunk.emplace_back(input.begin(), input.end());
  for (const auto& layer : net.trunk()) {
    auto next = dense(layer, tr.trunk.back());
    apply_activation(net.shape().activation, next);
    tr.trunk.push_back(std::move(next));
  }
  if (need_a) forward_head(net, Task::A, tr.trunk.back(), tr.head_a);
  if (need_b) forward_head(net, Task::B, tr.trunk.back(), tr.head_b);
  return tr;
}

// -sum t_k log softmax(z)_k using log-sum-exp.
double logit_cross_entropy(const LabelVector& target, std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  double loss = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (target[k] != 0.0) loss -= target[k] * (logits[k] - lse);
  }
  return loss;
}

void validate_batch(const MultiTaskNet& net, const BatchView& batch) {
  const std::size_t n = batch.inputs.size();
  if (n == 0) throw std::invalid_argument("empty batch");
  if (batch.targets_a.size() != n || batch.targets_b.size() != n || batch.mask.size() != n) {
    throw ShapeError("batch spans have different lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    check_input(net, batch.inputs[i]);
    if (batch.mask[i].task_a && batch.targets_a[i].size() != net.num_classes(Task::A)) {
      throw ShapeError("task A target length does not match head A");
    }
    if (batch.mask[i].task_b && batch.targets_b[i].size() != net.num_classes(Task::B)) {
      throw ShapeError("task B target length does not match head B");
    }
  }
}

// Accumulates gradients of one head given dLoss/dlogits; returns dLoss/dfeatures.
std::vector<double> backprop_head(const MultiTaskNet& net, Task task,
                                  std::span<const double> features,
                                  const std::vector<std::vector<double>>& acts,
                                  std::vector<double> delta, std::vector<DenseLayer>& grads) {
  const auto& layers = net.head(task);
  for (std::size_t l = layers.size(); l-- > 0;) {
    std::span<const double> in = l == 0 ? features : std::span<const double>(acts[l - 1]);
    auto& g = grads[l];
    for (std::size_t r = 0; r < delta.size(); ++r) {
      g.bias[r] += delta[r];
      auto gw = g.weight.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) gw[c] += delta[r] * in[c];
    }
    std::vector<double> prev(in.size(), 0.0);
    for (std::size_t r = 0; r < delta.size(); ++r) {
      const auto w = layers[l].weight.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) prev[c] += w[c] * delta[r];
    }
    if (l > 0) {
      for (std::size_t c = 0; c < prev.size(); ++c) {
        prev[c] *= activate_grad(net.shape().activation, acts[l - 1][c]);
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

}  // namespace

MultiTaskNet::MultiTaskNet(NetShape shape) : shape_(std::move(shape)) {
  if (shape_.layer_sizes.empty()) throw ConfigError("layer_sizes must name the input width");
  for (std::size_t s : shape_.layer_sizes) {
    if (s == 0) throw ConfigError("layer sizes must be positive");
  }
  for (std::size_t s : shape_.head_hidden) {
    if (s == 0) throw ConfigError("head hidden sizes must be positive");
  }
  if (shape_.classes_a < 2 || shape_.classes_b < 2) {
    throw ConfigError("each task needs at least two classes");
  }
  for (std::size_t l = 1; l < shape_.layer_sizes.size(); ++l) {
    trunk_.push_back(make_layer(shape_.layer_sizes[l - 1], shape_.layer_sizes[l]));
  }
  head_a_ = make_head(shape_.layer_sizes.back(), shape_.head_hidden, shape_.classes_a);
  head_b_ = make_head(shape_.layer_sizes.back(), shape_.head_hidden, shape_.classes_b);
}

std::size_t MultiTaskNet::feature_size(Task t) const noexcept {
  return head(t).back().in_size();
}

std::vector<std::span<double>> MultiTaskNet::parameter_blocks() {
  std::vector<std::span<double>> out;
  for (auto* group : {&trunk_, &head_a_, &head_b_}) {
    for (auto& layer : *group) {
      out.push_back(layer.weight.values());
      out.push_back(layer.bias);
    }
  }
  return out;
}

std::vector<std::span<const double>> MultiTaskNet::parameter_blocks() const {
  std::vector<std::span<const double>> out;
  for (const auto* group : {&trunk_, &head_a_, &head_b_}) {
    for (const auto& layer : *group) {
      out.push_back(layer.weight.values());
      out.push_back(layer.bias);
    }
  }
  return out;
}

std::size_t MultiTaskNet::parameter_count() const {
  std::size_t n = 0;
  for (auto block : parameter_blocks()) n += block.size();
  return n;
}

MultiTaskNet init_net(const std::vector<std::size_t>& layer_sizes, std::size_t classes_a,
                      std::size_t classes_b, std::uint64_t seed, const NetOptions& options) {
  MultiTaskNet net(NetShape{layer_sizes, options.head_hidden, classes_a, classes_b,
                            options.activation});
  std::mt19937_64 rng(seed);
  auto fill = [&rng](DenseLayer& layer) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.in_size() + layer.out_size()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weight.values()) w = dist(rng);
  };
  for (auto& layer : net.trunk()) fill(layer);
  for (auto& layer : net.head(Task::A)) fill(layer);
  for (auto& layer : net.head(Task::B)) fill(layer);
  return net;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    // Underflow would put exact zeros on the simplex.
    p[k] = std::max(std::exp(logits[k] - lse), std::numeric_limits<double>::min());
    total += p[k];
  }
  // One more renormalization keeps the sum within an ulp or two of 1.
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> extract_features(const MultiTaskNet& net, Task task,
                                     std::span<const double> input) {
  check_input(net, input);
  std::vector<double> cur(input.begin(), input.end());
  for (const auto& layer : net.trunk()) {
    cur = dense(layer, cur);
    apply_activation(net.shape().activation, cur);
  }
  const auto& head = net.head(task);
  for (std::size_t l = 0; l + 1 < head.size(); ++l) {
    cur = dense(head[l], cur);
    apply_activation(net.shape().activation, cur);
  }
  return cur;
}

LabelVector classify_features(const MultiTaskNet& net, Task task,
                              std::span<const double> features) {
  const auto& cls = net.head(task).back();
  if (features.size() != cls.in_size()) throw ShapeError("feature width mismatch");
  return LabelVector(softmax(dense(cls, features)));
}

LabelVector predict(const MultiTaskNet& net, Task task, std::span<const double> input) {
  return classify_features(net, task, extract_features(net, task, input));
}

double cross_entropy(const LabelVector& target, const LabelVector& prediction) {
  if (target.size() != prediction.size()) throw ShapeError("cross_entropy: length mismatch");
  double loss = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (!(prediction[k] > 0.0)) throw DomainError("cross_entropy: nonpositive prediction");
    if (target[k] != 0.0) loss -= target[k] * std::log(std::max(prediction[k], kLogFloor));
  }
  return loss < 0.0 ? 0.0 : loss;
}

AdamState::AdamState(const std::vector<std::size_t>& block_sizes, AdamOptions options)
    : options_(options) {
  for (std::size_t n : block_sizes) {
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

AdamState AdamState::for_net(const MultiTaskNet& net, AdamOptions options) {
  std::vector<std::size_t> sizes;
  for (auto block : net.parameter_blocks()) sizes.push_back(block.size());
  return AdamState(sizes, options);
}

void AdamState::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::span<const double>>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam: block count mismatch");
  }
  for (std::size_t b = 0; b < m_.size(); ++b) {
    if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size()) {
      throw ShapeError("adam: block " + std::to_string(b) + " size mismatch");
    }
  }
  ++step_count_;
  const auto t = static_cast<double>(step_count_);
  const double bias1 = 1.0 - std::pow(options_.beta1, t);
  const double bias2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t b = 0; b < m_.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = grads[b][i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      params[b][i] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

BatchLoss batch_loss(const MultiTaskNet& net, const BatchView& batch) {
  validate_batch(net, batch);
  BatchLoss loss;
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    const auto& m = batch.mask[i];
    const auto tr = forward(net, batch.inputs[i], m.task_a, m.task_b);
    if (m.task_a) loss.task_a += logit_cross_entropy(batch.targets_a[i], tr.head_a.back());
    if (m.task_b) loss.task_b += logit_cross_entropy(batch.targets_b[i], tr.head_b.back());
  }
  const auto n = static_cast<double>(batch.inputs.size());
  loss.task_a /= n;
  loss.task_b /= n;
  loss.total = loss.task_a + loss.task_b;
  return loss;
}

Gradients compute_gradients(const MultiTaskNet& net, const BatchView& batch) {
  validate_batch(net, batch);
  Gradients out{MultiTaskNet(net.shape()), {}};
  const auto n = static_cast<double>(batch.inputs.size());
  const Activation act = net.shape().activation;

  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    const auto& m = batch.mask[i];
    if (!m.task_a && !m.task_b) continue;
    const auto tr = forward(net, batch.inputs[i], m.task_a, m.task_b);
    const auto& features = tr.trunk.back();
    std::vector<double> d_features(features.size(), 0.0);

    auto head_term = [&](Task task, const LabelVector& target,
                         const std::vector<std::vector<double>>& acts, double& loss_acc) {
      const auto& logits = acts.back();
      loss_acc += logit_cross_entropy(target, logits);
      // dCE/dlogits = (sum_k t_k) p - t; targets sum to one up to rounding.
      const auto p = softmax(logits);
      double mass = 0.0;
      for (std::size_t k = 0; k < target.size(); ++k) mass += target[k];
      std::vector<double> delta(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) delta[k] = (mass * p[k] - target[k]) / n;
      const auto d = backprop_head(net, task, features, acts, std::move(delta),
                                   out.grad.head(task));
      for (std::size_t c = 0; c < d.size(); ++c) d_features[c] += d[c];
    };
    if (m.task_a) head_term(Task::A, batch.targets_a[i], tr.head_a, out.loss.task_a);
    if (m.task_b) head_term(Task::B, batch.targets_b[i], tr.head_b, out.loss.task_b);

    // Trunk: d_features is dLoss/d(activation output) of the last trunk layer.
    std::vector<double> delta = std::move(d_features);
    for (std::size_t l = net.trunk().size(); l-- > 0;) {
      const auto& out_act = tr.trunk[l + 1];
      const auto& in_act = tr.trunk[l];
      for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= activate_grad(act, out_act[r]);
      auto& g = out.grad.trunk()[l];
      for (std::size_t r = 0; r < delta.size(); ++r) {
        g.bias[r] += delta[r];
        auto gw = g.weight.row(r);
        for (std::size_t c = 0; c < in_act.size(); ++c) gw[c] += delta[r] * in_act[c];
      }
      if (l == 0) break;
      std::vector<double> prev(in_act.size(), 0.0);
      const auto& w = net.trunk()[l].weight;
      for (std::size_t r = 0; r < delta.size(); ++r) {
        const auto wr = w.row(r);
        for (std::size_t c = 0; c < prev.size(); ++c) prev[c] += wr[c] * delta[r];
      }
      delta = std::move(prev);
    }
  }
  out.loss.task_a /= n;
  out.loss.task_b /= n;
  out.loss.total = out.loss.task_a + out.loss.task_b;
  return out;
}

BatchLoss backward_step(MultiTaskNet& net, AdamState& adam, const BatchView& batch) {
  auto g = compute_gradients(net, batch);
  const auto grad_blocks = std::as_const(g.grad).parameter_blocks();
  adam.step(net.parameter_blocks(), grad_blocks);
  return g.loss;
}

}  // namespace mtlsa
