#include "mtlsa/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "mtlsa/errors.hpp"
#include "mtlsa/textio.hpp"

namespace mtlsa {

TrainConfig StrategySpec::apply(TrainConfig base) const {
  base.strategy = strategy;
  base.weight_mode = weight_mode;
  base.distance = distance;
  return base;
}

std::vector<StrategySpec> default_roster() {
  using K = WeightMode::Kind;
  auto sa = [](std::string id, WeightMode m, DistanceKind d = DistanceKind::Emd) {
    return StrategySpec{std::move(id), Strategy::MtlSa, m, d};
  };
  return {
      {"stl", Strategy::Stl, WeightMode::full(), DistanceKind::Emd},
      {"joint", Strategy::Joint, WeightMode::full(), DistanceKind::Emd},
      {"mtl-wf", Strategy::MtlWf, WeightMode::full(), DistanceKind::Emd},
      sa("mtl-sa", WeightMode::full()),
      sa("w=0", WeightMode::fixed(0.0)),
      sa("w=1", WeightMode::fixed(1.0)),
      sa("w=0.5", WeightMode::fixed(0.5)),
      sa("only-wc", WeightMode{K::OnlyConfidence, 0.0}),
      sa("only-wd", WeightMode{K::OnlyDensity, 0.0}),
      sa("only-wg-emd", WeightMode{K::OnlyDistribution, 0.0}),
      sa("only-wg-mmd", WeightMode{K::OnlyDistribution, 0.0}, DistanceKind::Mmd),
  };
}

StrategySpec find_strategy(std::string_view id) {
  std::string valid;
  for (auto& s : default_roster()) {
    if (s.id == id) return s;
    valid += (valid.empty() ? "" : ", ") + s.id;
  }
  throw ConfigError("unknown strategy '" + std::string(id) + "' (valid: " + valid + ")");
}

namespace {

RunResult run_cell(const StrategySpec& spec, const TrainConfig& base, const DataFactory& data,
                   std::uint64_t seed) {
  RunResult r;
  r.strategy = spec.id;
  r.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto config = spec.apply(base);
    config.seed = seed;
    const BenchmarkData d = data(seed);
    auto trained = train(config, d.train_a, d.train_b);
    r.acc_a = accuracy(trained.net_for(Task::A), Task::A, d.test_a);
    r.acc_b = accuracy(trained.net_for(Task::B), Task::B, d.test_b);
    r.history = std::move(trained.history);
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

std::vector<RunResult> run_matrix(std::span<const StrategySpec> grid, const TrainConfig& base,
                                  const DataFactory& data, std::span<const std::uint64_t> seeds,
                                  std::size_t threads) {
  if (grid.empty() || seeds.empty()) {
    throw std::invalid_argument("run_matrix: empty strategy grid or seed list");
  }
  const std::size_t cells = grid.size() * seeds.size();
  std::vector<RunResult> results(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      results[c] = run_cell(grid[c / seeds.size()], base, data, seeds[c % seeds.size()]);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, cells));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return results;
}

DistributionWeights only_wg_mmd_variant(const ClusterModel& model_b,
                                        std::span<const std::vector<double>> features_a,
                                        double lambda) {
  return distribution_weights(model_b, cluster_to_mean_distance(model_b, features_a), lambda);
}

std::vector<ReportRow> summarize(std::span<const RunResult> results) {
  if (results.empty()) throw std::invalid_argument("summarize: no results");
  std::vector<std::string> order;
  for (const auto& r : results) {
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) {
      order.push_back(r.strategy);
    }
  }
  std::vector<ReportRow> rows;
  for (const auto& id : order) {
    for (Task task : {Task::A, Task::B}) {
      std::vector<double> acc;
      for (const auto& r : results) {
        if (r.ok && r.strategy == id) acc.push_back(task == Task::A ? r.acc_a : r.acc_b);
      }
      ReportRow row{id, task, std::numeric_limits<double>::quiet_NaN(), 0.0, acc.size()};
      if (!acc.empty()) {
        double sum = 0.0;
        for (double v : acc) sum += v;
        row.mean_acc = sum / static_cast<double>(acc.size());
        if (acc.size() > 1) {
          double ss = 0.0;
          for (double v : acc) ss += (v - row.mean_acc) * (v - row.mean_acc);
          row.std_acc = std::sqrt(ss / static_cast<double>(acc.size() - 1));
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string render_report(std::span<const ReportRow> rows) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.strategy + ',' + std::string(task_name(r.task)) + ',' +
           textio::format_double(r.mean_acc) + ',' + textio::format_double(r.std_acc) + ',' +
           std::to_string(r.n_seeds) + '\n';
  }
  return out;
}

std::string render_plot_data(std::span<const ReportRow> rows) {
  std::string out = "# index strategy task mean std lower upper\n";
  std::size_t index = 0;
  for (const auto& r : rows) {
    out += std::to_string(index++) + ' ' + r.strategy + ' ' + std::string(task_name(r.task)) +
           ' ' + textio::format_double(r.mean_acc) + ' ' + textio::format_double(r.std_acc) + ' ' +
           textio::format_double(r.mean_acc - r.std_acc) + ' ' +
           textio::format_double(r.mean_acc + r.std_acc) + '\n';
  }
  return out;
}

namespace {

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

std::string render_results(std::span<const RunResult> results) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : results) {
    out += r.strategy + ',' + std::to_string(r.seed) + ',' + textio::format_double(r.acc_a) + ',' +
           textio::format_double(r.acc_b) + ',' + (r.ok ? "ok" : "failed") + ',' +
           sanitize(r.error) + '\n';
  }
  return out;
}

std::vector<RunResult> parse_results(std::string_view text, const std::string& source) {
  const auto lines = textio::split(text, '\n');
  if (lines.empty() || textio::trim(lines[0]) != kResultsHeader) {
    throw ParseError(source, 1, "missing results header");
  }
  std::vector<RunResult> out;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto line = textio::trim(lines[l]);
    if (line.empty()) continue;
    const auto f = textio::split(line, ',');
    if (f.size() != 6) throw ParseError(source, l + 1, "expected 6 fields");
    try {
      RunResult r;
      r.strategy = f[0];
      r.seed = textio::parse_uint(f[1]);
      r.acc_a = textio::parse_double(f[2]);
      r.acc_b = textio::parse_double(f[3]);
      if (f[4] != "ok" && f[4] != "failed") throw std::invalid_argument("bad status '" + f[4] + "'");
      r.ok = f[4] == "ok";
      r.error = f[5];
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, l + 1, e.what());
    }
  }
  return out;
}

std::string render_timings(std::span<const RunResult> results) {
  std::string out = "strategy,seed,seconds\n";
  for (const auto& r : results) {
    out += r.strategy + ',' + std::to_string(r.seed) + ',' + textio::format_double(r.seconds) + '\n';
  }
  return out;
}

}  // namespace mtlsa
