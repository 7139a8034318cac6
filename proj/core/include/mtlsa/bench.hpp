#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtlsa/dataio.hpp"
#include "mtlsa/distweight.hpp"
#include "mtlsa/trainer.hpp"

namespace mtlsa {

/// A named cell configuration of the comparison matrix.
struct StrategySpec {
  std::string id;
  Strategy strategy = Strategy::MtlSa;
  WeightMode weight_mode = WeightMode::full();
  DistanceKind distance = DistanceKind::Emd;

  TrainConfig apply(TrainConfig base) const;
};

/// stl, joint, mtl-wf, mtl-sa, w=0, w=1, w=0.5, only-wc, only-wd, only-wg-emd,
/// only-wg-mmd.
std::vector<StrategySpec> default_roster();
/// Looks an id up in the default roster; throws ConfigError when absent.
StrategySpec find_strategy(std::string_view id);

struct RunResult {
  std::string strategy;
  std::uint64_t seed = 0;
  double acc_a = 0.0;
  double acc_b = 0.0;
  bool ok = false;
  std::string error;
  std::vector<HistoryRecord> history;
  double seconds = 0.0;
};

/// Produces the data for one seed. Must be safe to call concurrently.
using DataFactory = std::function<BenchmarkData(std::uint64_t seed)>;

/// Trains every (strategy, seed) cell with `base` as the shared config and
/// the cell seed as TrainConfig::seed. Results follow grid order, then seed
/// order, whatever the thread count. A throwing cell is recorded with
/// ok == false.
std::vector<RunResult> run_matrix(std::span<const StrategySpec> grid, const TrainConfig& base,
                                  const DataFactory& data, std::span<const std::uint64_t> seeds,
                                  std::size_t threads = 1);

/// w_g with d_k = ||mean_b[k] - centroid(features_a)||^2.
DistributionWeights only_wg_mmd_variant(const ClusterModel& model_b,
                                        std::span<const std::vector<double>> features_a,
                                        double lambda = kDefaultLambda);

struct ReportRow {
  std::string strategy;
  Task task = Task::A;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample standard deviation, 0 for one seed
  std::size_t n_seeds = 0;
};

/// One row per (strategy, task) over successful cells, strategies in order of
/// first appearance. Throws std::invalid_argument on an empty input.
std::vector<ReportRow> summarize(std::span<const RunResult> results);

inline constexpr std::string_view kReportHeader = "strategy,task,mean_acc,std_acc,n_seeds";
inline constexpr std::string_view kResultsHeader = "strategy,seed,acc_a,acc_b,status,error";

std::string render_report(std::span<const ReportRow> rows);
/// Whitespace-separated columns: index strategy task mean std lower upper.
std::string render_plot_data(std::span<const ReportRow> rows);
/// Per-cell accuracies; wall-clock time is left out so reruns compare equal.
std::string render_results(std::span<const RunResult> results);
std::vector<RunResult> parse_results(std::string_view text, const std::string& source);
std::string render_timings(std::span<const RunResult> results);

}  // namespace mtlsa
