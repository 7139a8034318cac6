#include "settings.hpp"

#include "mtlsa/errors.hpp"
#include "mtlsa/textio.hpp"

namespace mtlsa::cli {

const std::vector<SettingInfo>& setting_table() {
  static const std::vector<SettingInfo> table = {
      {"seed", "0", "master seed; subsystem seeds are seed plus fixed offsets"},
      {"strategy", "mtl-sa", "stl, joint, mtl-wf, mtl-sa or any ablation id (w=0, only-wc, ...)"},
      {"weights", "auto", "auto, full, only-wc, only-wd, only-wg or const:<w>"},
      {"distance", "auto", "auto, emd or mmd"},
      {"epochs", "10", "alternating epochs"},
      {"init_epochs", "5", "joint warm-start epochs"},
      {"batch_size", "32", "mini-batch size"},
      {"learning_rate", "0.0001", "Adam step size"},
      {"temperature", "2", "soft label temperature T"},
      {"kappa", "0.6", "density cutoff quantile"},
      {"lambda", "0.1", "distribution weight decay"},
      {"clusters_a", "4", "mixture components for domain A"},
      {"clusters_b", "4", "mixture components for domain B"},
      {"hidden", "16", "trunk hidden widths, comma separated"},
      {"head_hidden", "", "head hidden widths, comma separated"},
      {"activation", "tanh", "tanh or relu"},
      {"n_a", "200", "training samples in dataset A"},
      {"n_b", "200", "training samples in dataset B"},
      {"n_test_a", "500", "test samples for task A"},
      {"n_test_b", "500", "test samples for task B"},
      {"classes_a", "3", "classes of task A"},
      {"classes_b", "3", "classes of task B"},
      {"dimension", "2", "feature dimension"},
      {"spacing", "3", "distance between neighbouring blob centres"},
      {"blob_std", "0.8", "blob standard deviation"},
      {"coupling", "1", "correlation strength between the two tasks"},
      {"shift_offset", "2", "mean offset added to B, comma separated (padded with zeros)"},
      {"shift_scale", "1", "scale applied to B"},
      {"shift_rotation", "0", "rotation of B in radians"},
      {"shifted_fraction", "1", "share of B samples that receive the shift"},
      {"label_noise", "0.2", "probability an exposed label is resampled"},
      {"seeds", "1,2,3", "seed list for ablate"},
      {"threads", "1", "worker threads for ablate"},
  };
  return table;
}

Settings::Settings() {
  for (const auto& s : setting_table()) values_[std::string(s.key)] = std::string(s.default_value);
}

void Settings::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second = value;
}

void Settings::merge_file(const std::string& path) {
  for (const auto& [k, v] : textio::parse_key_values(textio::read_file(path), path)) set(k, v);
}

void Settings::merge_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("--set expects key=value, got '" + std::string(assignment) + "'");
  }
  set(std::string(textio::trim(assignment.substr(0, eq))),
      std::string(textio::trim(assignment.substr(eq + 1))));
}

const std::string& Settings::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

namespace {

template <typename F>
auto parse_as(const std::string& key, const std::string& value, F&& f) {
  try {
    return f(value);
  } catch (const std::invalid_argument&) {
    throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  }
}

}  // namespace

double Settings::get_double(const std::string& key) const {
  return parse_as(key, get(key), [](const std::string& v) { return textio::parse_double(v); });
}

std::uint64_t Settings::get_uint(const std::string& key) const {
  return parse_as(key, get(key), [](const std::string& v) { return textio::parse_uint(v); });
}

std::vector<std::size_t> Settings::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  const auto& v = get(key);
  if (textio::trim(v).empty()) return out;
  for (const auto& part : textio::split(v, ',')) {
    out.push_back(parse_as(key, part, [](const std::string& s) {
      return static_cast<std::size_t>(textio::parse_uint(textio::trim(s)));
    }));
  }
  return out;
}

std::vector<double> Settings::get_doubles(const std::string& key) const {
  std::vector<double> out;
  const auto& v = get(key);
  if (textio::trim(v).empty()) return out;
  for (const auto& part : textio::split(v, ',')) {
    out.push_back(
        parse_as(key, part, [](const std::string& s) { return textio::parse_double(textio::trim(s)); }));
  }
  return out;
}

TrainConfig Settings::train_config() const {
  TrainConfig c = find_strategy(get("strategy")).apply(TrainConfig{});
  if (get("weights") != "auto") c.weight_mode = parse_weight_mode(get("weights"));
  if (const auto& d = get("distance"); d == "emd") {
    c.distance = DistanceKind::Emd;
  } else if (d == "mmd") {
    c.distance = DistanceKind::Mmd;
  } else if (d != "auto") {
    throw ConfigError("distance must be auto, emd or mmd");
  }
  c.seed = get_uint("seed");
  c.epochs = get_uint("epochs");
  c.init_epochs = get_uint("init_epochs");
  c.batch_size = get_uint("batch_size");
  c.learning_rate = get_double("learning_rate");
  c.temperature = get_double("temperature");
  c.kappa = get_double("kappa");
  c.lambda = get_double("lambda");
  c.clusters_a = get_uint("clusters_a");
  c.clusters_b = get_uint("clusters_b");
  c.hidden = get_sizes("hidden");
  c.head_hidden = get_sizes("head_hidden");
  c.activation = parse_activation(get("activation"));
  c.validate();
  return c;
}

BenchmarkSpec Settings::benchmark_spec() const {
  BenchmarkSpec s;
  s.n_a = get_uint("n_a");
  s.n_b = get_uint("n_b");
  s.n_test_a = get_uint("n_test_a");
  s.n_test_b = get_uint("n_test_b");
  s.classes_a = get_uint("classes_a");
  s.classes_b = get_uint("classes_b");
  s.generator.dimension = get_uint("dimension");
  s.generator.spacing = get_double("spacing");
  s.generator.blob_std = get_double("blob_std");
  s.generator.coupling = get_double("coupling");
  auto offset = get_doubles("shift_offset");
  if (offset.size() > s.generator.dimension) {
    throw ConfigError("shift_offset has more entries than the feature dimension");
  }
  offset.resize(s.generator.dimension, 0.0);
  s.shift.mean_offset = std::move(offset);
  s.shift.scale = get_double("shift_scale");
  s.shift.rotation = get_double("shift_rotation");
  s.shift.shifted_fraction = get_double("shifted_fraction");
  s.shift.label_noise_rate = get_double("label_noise");
  return s;
}

std::vector<std::uint64_t> Settings::seeds() const {
  std::vector<std::uint64_t> out;
  for (auto s : get_sizes("seeds")) out.push_back(s);
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

std::vector<StrategySpec> Settings::strategies() const {
  std::vector<StrategySpec> out;
  for (const auto& id : textio::split(get("strategy"), ',')) {
    out.push_back(find_strategy(textio::trim(id)));
  }
  return out;
}

std::string Settings::render() const {
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& s : setting_table()) entries.emplace_back(s.key, get(std::string(s.key)));
  return textio::render_key_values(entries);
}

}  // namespace mtlsa::cli
