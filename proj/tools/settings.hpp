#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtlsa/bench.hpp"
#include "mtlsa/dataio.hpp"
#include "mtlsa/trainer.hpp"

namespace mtlsa::cli {

struct SettingInfo {
  std::string_view key;
  std::string_view default_value;
  std::string_view help;
};

/// Every recognised configuration key with its default.
const std::vector<SettingInfo>& setting_table();

/// Layered `key = value` settings. Later layers win: defaults, then the config
/// file, then --set overrides, then dedicated flags.
class Settings {
 public:
  Settings();

  /// Throws ConfigError on a key missing from setting_table().
  void set(const std::string& key, const std::string& value);
  void merge_file(const std::string& path);
  /// `key=value`; throws ConfigError when '=' is missing.
  void merge_override(std::string_view assignment);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// Training configuration; `strategy` is a roster id, `weights` and
  /// `distance` override the roster entry when not "auto".
  TrainConfig train_config() const;
  BenchmarkSpec benchmark_spec() const;
  std::vector<std::uint64_t> seeds() const;
  std::vector<StrategySpec> strategies() const;

  /// All keys in table order, for echoing the resolved configuration.
  std::string render() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mtlsa::cli
