#include "mtlsa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mtlsa/errors.hpp"
#include "mtlsa/textio.hpp"

namespace mtlsa {

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::Stl:
      return "stl";
    case Strategy::Joint:
      return "joint";
    case Strategy::MtlWf:
      return "mtl-wf";
    case Strategy::MtlSa:
      return "mtl-sa";
  }
  return "mtl-sa";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Stl, Strategy::Joint, Strategy::MtlWf, Strategy::MtlSa}) {
    if (name == strategy_name(s)) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) +
                    "' (valid: stl, joint, mtl-wf, mtl-sa)");
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("kappa must lie in (0,1)");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (clusters_a == 0 || clusters_b == 0) throw ConfigError("cluster counts must be positive");
  if (weight_mode.kind == WeightMode::Kind::Constant &&
      !(weight_mode.constant >= 0.0 && weight_mode.constant <= 1.0)) {
    throw ConfigError("constant weight must lie in [0,1]");
  }
  for (auto h : hidden) {
    if (h == 0) throw ConfigError("hidden layer widths must be positive");
  }
  for (auto h : head_hidden) {
    if (h == 0) throw ConfigError("head hidden widths must be positive");
  }
}

TrainState make_state(const TrainConfig& config, std::size_t input_dim, std::size_t classes_a,
                      std::size_t classes_b) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  auto net = init_net(sizes, classes_a, classes_b, SeedPlan::net_init(config.seed),
                      NetOptions{config.head_hidden, config.activation});
  auto adam = AdamState::for_net(net, AdamOptions{config.learning_rate});
  return TrainState{std::move(net), std::move(adam),
                    std::mt19937_64(SeedPlan::shuffle(config.seed))};
}

bool same_record(const HistoryRecord& x, const HistoryRecord& y) {
  auto same = [](double p, double q) {
    return std::memcmp(&p, &q, sizeof(double)) == 0 || (std::isnan(p) && std::isnan(q));
  };
  return x.epoch == y.epoch && x.phase == y.phase && same(x.loss_own_task, y.loss_own_task) &&
         same(x.loss_aux_task, y.loss_aux_task) && same(x.train_acc_a, y.train_acc_a) &&
         same(x.train_acc_b, y.train_acc_b) && same(x.test_acc_a, y.test_acc_a) &&
         same(x.test_acc_b, y.test_acc_b) && same(x.mean_w, y.mean_w) &&
         same(x.fraction_w_above_half, y.fraction_w_above_half);
}

std::string write_history(std::span<const HistoryRecord> history) {
  std::string out(kHistoryHeader);
  out += '\n';
  using textio::format_double;
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + ',' + r.phase + ',' + format_double(r.loss_own_task) + ',' +
           format_double(r.loss_aux_task) + ',' + format_double(r.train_acc_a) + ',' +
           format_double(r.train_acc_b) + ',' + format_double(r.test_acc_a) + ',' +
           format_double(r.test_acc_b) + ',' + format_double(r.mean_w) + ',' +
           format_double(r.fraction_w_above_half) + '\n';
  }
  return out;
}

std::vector<HistoryRecord> read_history(std::string_view text, const std::string& source) {
  const auto lines = textio::split(text, '\n');
  if (lines.empty() || textio::trim(lines[0]) != kHistoryHeader) {
    throw ParseError(source, 1, "missing history header");
  }
  std::vector<HistoryRecord> out;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto line = textio::trim(lines[l]);
    if (line.empty()) continue;
    const auto f = textio::split(line, ',');
    if (f.size() != 10) throw ParseError(source, l + 1, "expected 10 fields");
    try {
      HistoryRecord r;
      r.epoch = textio::parse_uint(f[0]);
      r.phase = f[1];
      r.loss_own_task = textio::parse_double(f[2]);
      r.loss_aux_task = textio::parse_double(f[3]);
      r.train_acc_a = textio::parse_double(f[4]);
      r.train_acc_b = textio::parse_double(f[5]);
      r.test_acc_a = textio::parse_double(f[6]);
      r.test_acc_b = textio::parse_double(f[7]);
      r.mean_w = textio::parse_double(f[8]);
      r.fraction_w_above_half = textio::parse_double(f[9]);
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, l + 1, e.what());
    }
  }
  return out;
}

AugmentTargets make_targets(const MultiTaskNet& frozen, Task augment_task, const Matrix& inputs,
                            double temperature) {
  AugmentTargets out;
  out.soft.reserve(inputs.rows());
  out.pseudo.reserve(inputs.rows());
  out.sharpened.reserve(inputs.rows());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    auto soft = predict(frozen, augment_task, inputs.row(i));
    out.pseudo.push_back(to_pseudo(soft));
    out.sharpened.push_back(sharpen(soft, temperature));
    out.soft.push_back(std::move(soft));
  }
  return out;
}

namespace {

std::vector<std::vector<double>> features_of(const MultiTaskNet& net, Task task,
                                             const DisjointDataset& data) {
  std::vector<std::vector<double>> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back(extract_features(net, task, data.sample(i)));
  }
  return out;
}

std::size_t clusters_for(const TrainConfig& c, Task dataset) {
  return dataset == Task::A ? c.clusters_a : c.clusters_b;
}

}  // namespace

WeightReport compute_weights(const MultiTaskNet& frozen, Task augment_task,
                             const DisjointDataset& active, const DisjointDataset& labeled,
                             const AugmentTargets& targets, const TrainConfig& config,
                             std::uint64_t gmm_seed_active, std::uint64_t gmm_seed_labeled) {
  if (targets.soft.size() != active.size()) {
    throw ShapeError("compute_weights: targets do not match the active dataset");
  }
  const auto feats_active = features_of(frozen, augment_task, active);
  const auto feats_labeled = features_of(frozen, augment_task, labeled);

  const auto conf = confidence_weights(targets.soft, feats_active, config.kappa);
  const auto model_active =
      fit_gmm(feats_active, clusters_for(config, active.task), gmm_seed_active);
  std::vector<double> cluster_dist;
  if (config.distance == DistanceKind::Emd) {
    const auto model_labeled =
        fit_gmm(feats_labeled, clusters_for(config, labeled.task), gmm_seed_labeled);
    cluster_dist = cluster_to_domain_distance(model_active, model_labeled);
  } else {
    cluster_dist = cluster_to_mean_distance(model_active, feats_labeled);
  }
  const auto dist = distribution_weights(model_active, cluster_dist, config.lambda);

  WeightReport report;
  report.w = combine(WeightComponents{conf.w_c, conf.w_d, conf.w_s, dist.w_g}, config.weight_mode);
  report.records.reserve(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    report.records.push_back({i, conf.pseudo_class[i], conf.w_c[i], conf.w_d[i], conf.w_s[i],
                              dist.h_hat[i], dist.w_g[i], report.w[i]});
  }
  return report;
}

double accuracy(const MultiTaskNet& net, Task task, const DisjointDataset& data) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(net, task, data.sample(i)).argmax() == data.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Example {
  const DisjointDataset* data;
  std::size_t index;
};

// One pass over `examples` in shuffled order; each sample supervises only the
// head of its own dataset's task. Returns the mean per-sample loss.
double supervised_epoch(TrainState& state, std::vector<Example> examples,
                        std::size_t batch_size) {
  std::shuffle(examples.begin(), examples.end(), state.shuffle_rng);
  const auto uniform_a = LabelVector::uniform(state.net.num_classes(Task::A));
  const auto uniform_b = LabelVector::uniform(state.net.num_classes(Task::B));
  double loss_sum = 0.0;
  std::vector<std::span<const double>> inputs;
  std::vector<LabelVector> ta, tb;
  std::vector<LossMask> mask;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, examples.size());
    inputs.clear();
    ta.clear();
    tb.clear();
    mask.clear();
    for (std::size_t e = start; e < end; ++e) {
      const auto& ex = examples[e];
      inputs.push_back(ex.data->sample(ex.index));
      const auto own = LabelVector::one_hot(ex.data->labels[ex.index], ex.data->num_classes);
      if (ex.data->task == Task::A) {
        ta.push_back(own);
        tb.push_back(uniform_b);
        mask.push_back({true, false});
      } else {
        ta.push_back(uniform_a);
        tb.push_back(own);
        mask.push_back({false, true});
      }
    }
    const auto loss = backward_step(state.net, state.adam, BatchView{inputs, ta, tb, mask});
    loss_sum += loss.total * static_cast<double>(end - start);
  }
  return loss_sum / static_cast<double>(examples.size());
}

std::vector<Example> examples_of(const DisjointDataset& d) {
  std::vector<Example> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back({&d, i});
  return out;
}

void fill_accuracies(HistoryRecord& r, const MultiTaskNet& net_a, const MultiTaskNet& net_b,
                     const DisjointDataset& a, const DisjointDataset& b, EvalSets eval) {
  r.train_acc_a = accuracy(net_a, Task::A, a);
  r.train_acc_b = accuracy(net_b, Task::B, b);
  r.test_acc_a = eval.test_a ? accuracy(net_a, Task::A, *eval.test_a) : kNaN;
  r.test_acc_b = eval.test_b ? accuracy(net_b, Task::B, *eval.test_b) : kNaN;
}

void check_pair(const DisjointDataset& a, const DisjointDataset& b) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("training dataset is empty");
  if (a.dimension() != b.dimension()) throw ShapeError("datasets differ in feature dimension");
  if (a.task != Task::A || b.task != Task::B) {
    throw std::invalid_argument("dataset task tags must be A and B");
  }
}

}  // namespace

std::vector<HistoryRecord> joint_init(TrainState& state, const DisjointDataset& a,
                                      const DisjointDataset& b, std::size_t init_epochs,
                                      std::size_t batch_size, EvalSets eval) {
  check_pair(a, b);
  std::vector<HistoryRecord> history;
  auto examples = examples_of(a);
  const auto eb = examples_of(b);
  examples.insert(examples.end(), eb.begin(), eb.end());
  for (std::size_t e = 1; e <= init_epochs; ++e) {
    HistoryRecord r;
    r.epoch = e;
    r.phase = "joint";
    r.loss_own_task = supervised_epoch(state, examples, batch_size);
    fill_accuracies(r, state.net, state.net, a, b, eval);
    history.push_back(std::move(r));
  }
  return history;
}

EpochResult run_epoch(TrainState& state, const EpochPhase& phase, const DisjointDataset& a,
                      const DisjointDataset& b, const TrainConfig& config, EvalSets eval) {
  check_pair(a, b);
  if (active_dataset(phase.epoch) != phase.active) {
    throw std::invalid_argument("epoch phase does not match its epoch index");
  }
  const Task own = phase.active;
  const Task aux = other(own);
  const DisjointDataset& active = own == Task::A ? a : b;
  const DisjointDataset& labeled = aux == Task::A ? a : b;

  EpochResult result;
  const auto targets = make_targets(phase.frozen, aux, active.features, config.temperature);
  std::vector<double> w(active.size(), 0.0);
  if (config.strategy == Strategy::MtlSa) {
    auto report = compute_weights(phase.frozen, aux, active, labeled, targets, config,
                                  SeedPlan::gmm(config.seed, phase.epoch, false),
                                  SeedPlan::gmm(config.seed, phase.epoch, true));
    w = std::move(report.w);
    result.weights = std::move(report.records);
  } else if (config.strategy != Strategy::MtlWf) {
    throw std::invalid_argument("run_epoch requires an alternating strategy");
  }

  result.aux_targets.reserve(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    result.aux_targets.push_back(interpolate(targets.pseudo[i], targets.sharpened[i], w[i]));
  }

  std::vector<std::size_t> order(active.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), state.shuffle_rng);

  double own_sum = 0.0, aux_sum = 0.0;
  std::vector<std::span<const double>> inputs;
  std::vector<LabelVector> t_own, t_aux;
  std::vector<LossMask> mask;
  for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
    const std::size_t end = std::min(start + config.batch_size, order.size());
    inputs.clear();
    t_own.clear();
    t_aux.clear();
    mask.assign(end - start, LossMask{true, true});
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t i = order[k];
      inputs.push_back(active.sample(i));
      t_own.push_back(LabelVector::one_hot(active.labels[i], active.num_classes));
      t_aux.push_back(result.aux_targets[i]);
    }
    const auto& ta = own == Task::A ? t_own : t_aux;
    const auto& tb = own == Task::A ? t_aux : t_own;
    const auto loss = backward_step(state.net, state.adam, BatchView{inputs, ta, tb, mask});
    const auto count = static_cast<double>(end - start);
    own_sum += (own == Task::A ? loss.task_a : loss.task_b) * count;
    aux_sum += (own == Task::A ? loss.task_b : loss.task_a) * count;
  }

  auto& r = result.record;
  r.epoch = phase.epoch;
  r.phase = std::string(task_name(own));
  r.loss_own_task = own_sum / static_cast<double>(active.size());
  r.loss_aux_task = aux_sum / static_cast<double>(active.size());
  fill_accuracies(r, state.net, state.net, a, b, eval);
  double sum_w = 0.0;
  std::size_t above = 0;
  for (double v : w) {
    sum_w += v;
    if (v > 0.5) ++above;
    result.max_w = std::max(result.max_w, v);
  }
  r.mean_w = sum_w / static_cast<double>(w.size());
  r.fraction_w_above_half = static_cast<double>(above) / static_cast<double>(w.size());
  return result;
}

TrainResult train(const TrainConfig& config, const DisjointDataset& a, const DisjointDataset& b,
                  EvalSets eval) {
  config.validate();
  check_pair(a, b);
  TrainState state = make_state(config, a.dimension(), a.num_classes, b.num_classes);

  if (config.strategy == Strategy::Stl || config.strategy == Strategy::Joint) {
    const std::size_t total = config.init_epochs + (config.epochs + 1) / 2;
    if (config.strategy == Strategy::Joint) {
      auto history = joint_init(state, a, b, total, config.batch_size, eval);
      return TrainResult{std::move(state.net), std::nullopt, std::move(history), {}, {}};
    }
    // Two independent networks, one per task.
    TrainState state_b = make_state(config, a.dimension(), a.num_classes, b.num_classes);
    state_b.net = init_net(state.net.shape().layer_sizes, a.num_classes, b.num_classes,
                           SeedPlan::stl_b_init(config.seed),
                           NetOptions{config.head_hidden, config.activation});
    state_b.shuffle_rng.seed(SeedPlan::stl_b_shuffle(config.seed));
    const auto ea = examples_of(a);
    const auto eb = examples_of(b);
    std::vector<HistoryRecord> history;
    for (std::size_t e = 1; e <= total; ++e) {
      HistoryRecord r;
      r.epoch = e;
      r.phase = "stl";
      const double la = supervised_epoch(state, ea, config.batch_size);
      const double lb = supervised_epoch(state_b, eb, config.batch_size);
      r.loss_own_task = (la * static_cast<double>(a.size()) + lb * static_cast<double>(b.size())) /
                        static_cast<double>(a.size() + b.size());
      fill_accuracies(r, state.net, state_b.net, a, b, eval);
      history.push_back(std::move(r));
    }
    return TrainResult{std::move(state.net), std::move(state_b.net), std::move(history), {}, {}};
  }

  TrainResult result{state.net, std::nullopt, {}, {}, {}};
  result.history = joint_init(state, a, b, config.init_epochs, config.batch_size, eval);
  for (std::size_t t = 1; t <= config.epochs; ++t) {
    const EpochPhase phase{t, active_dataset(t), snapshot(state.net)};
    auto epoch = run_epoch(state, phase, a, b, config, eval);
    result.history.push_back(std::move(epoch.record));
    result.final_weights = std::move(epoch.weights);
    result.final_weights_task = other(phase.active);
  }
  result.net = std::move(state.net);
  return result;
}

}  // namespace mtlsa
