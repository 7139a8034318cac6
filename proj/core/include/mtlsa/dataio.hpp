#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtlsa/matrix.hpp"
#include "mtlsa/nncore.hpp"

namespace mtlsa {

enum class Split { Train, Test };
std::string_view split_name(Split s) noexcept;

/// Features plus labels for exactly one task.
struct DisjointDataset {
  Matrix features;  // n x d
  std::vector<std::size_t> labels;
  Task task = Task::A;
  std::size_t num_classes = 2;
  Split split = Split::Train;
  std::string provenance;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dimension() const noexcept { return features.cols(); }
  std::span<const double> sample(std::size_t i) const { return features.row(i); }

  /// Throws ValidationError when n == 0, rows and labels disagree or a label is out of range.
  void validate() const;

  bool operator==(const DisjointDataset&) const = default;
};

/// Rows `indices` of `data`, in that order.
DisjointDataset subset(const DisjointDataset& data, std::span<const std::size_t> indices);

/// Transform applied to dataset B (or a fraction of it) plus label noise.
struct ShiftSpec {
  std::vector<double> mean_offset;  // empty means zero
  double scale = 1.0;
  double rotation = 0.0;          // radians, acts on the first two coordinates
  double label_noise_rate = 0.0;  // applied to the exposed labels of both datasets
  double shifted_fraction = 1.0;  // share of B samples that receive the transform

  void validate(std::size_t dimension) const;
  bool is_identity() const noexcept;
};

/// Latent structure shared by both datasets.
struct GeneratorOptions {
  std::size_t dimension = 2;
  double spacing = 3.0;   // distance between neighbouring blob centres
  double blob_std = 0.8;  // isotropic standard deviation of every blob
  double coupling = 1.0;  // >0 correlates the two tasks' labels
};

/// Labels a sample would carry for both tasks, retained for evaluation only.
struct HiddenTruth {
  std::vector<std::size_t> task_a;
  std::vector<std::size_t> task_b;
  std::vector<char> shifted;        // sample received the ShiftSpec transform
  std::vector<char> noise_applied;  // exposed label was resampled
};

struct TwoTaskData {
  DisjointDataset a;
  DisjointDataset b;
  HiddenTruth truth_a;
  HiddenTruth truth_b;
};

/// Class-conditional Gaussian blobs on a lattice spanned by two directions; the
/// lattice coordinates are the task-A and task-B labels. Dataset A is drawn
/// untouched, dataset B goes through `shift`. Throws ConfigError on sizes
/// smaller than the class counts or an invalid shift.
TwoTaskData gen_two_task(std::uint64_t seed, std::size_t n_a, std::size_t n_b,
                         std::size_t classes_a, std::size_t classes_b, const ShiftSpec& shift,
                         const GeneratorOptions& options = {});

/// Seeded permutation split. Fraction outside (0,1) throws DomainError.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed);
std::pair<DisjointDataset, DisjointDataset> split(const DisjointDataset& data,
                                                  double train_fraction, std::uint64_t seed);

/// `feature_0,...,feature_{d-1},label` with 17-significant-digit values.
std::string to_csv(const DisjointDataset& data);
/// Throws ParseError (with line) on malformed rows and ValidationError on
/// invariant violations. Without `num_classes`, it is inferred as max label + 1 (at least 2).
DisjointDataset parse_csv(std::string_view text, const std::string& source, Task task,
                          std::optional<std::size_t> num_classes = std::nullopt);

/// Contents of the `<csv>.meta` sidecar.
struct DatasetMeta {
  Task task = Task::A;
  std::size_t num_classes = 2;
  std::size_t n = 0;
  std::size_t dimension = 0;
  std::uint64_t seed = 0;
  Split split = Split::Train;
  ShiftSpec shift;
};

std::string to_meta(const DatasetMeta& meta);
DatasetMeta parse_meta(std::string_view text, const std::string& source);
std::filesystem::path meta_path(const std::filesystem::path& csv);

/// Writes the CSV and its sidecar.
void save_dataset(const std::filesystem::path& csv, const DisjointDataset& data,
                  const DatasetMeta& meta);
/// Reads a CSV; task and class count come from the sidecar when present
/// (task A and inferred classes otherwise).
DisjointDataset load_csv(const std::filesystem::path& csv);

/// Training pair with noisy exposed labels plus clean held-out test sets drawn
/// from the same two distributions.
struct BenchmarkData {
  DisjointDataset train_a;
  DisjointDataset train_b;
  DisjointDataset test_a;
  DisjointDataset test_b;
  HiddenTruth truth_a;  // hidden truth of train_a
  HiddenTruth truth_b;
};

struct BenchmarkSpec {
  std::size_t n_a = 200;
  std::size_t n_b = 200;
  std::size_t n_test_a = 500;
  std::size_t n_test_b = 500;
  std::size_t classes_a = 3;
  std::size_t classes_b = 3;
  ShiftSpec shift;
  GeneratorOptions generator;
};

/// Test sets use seed + 7919 and no label noise.
BenchmarkData make_benchmark_data(std::uint64_t seed, const BenchmarkSpec& spec);

}  // namespace mtlsa
