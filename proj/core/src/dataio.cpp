#include "mtlsa/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "mtlsa/errors.hpp"
#include "mtlsa/textio.hpp"

namespace mtlsa {

std::string_view split_name(Split s) noexcept { return s == Split::Train ? "train" : "test"; }

void DisjointDataset::validate() const {
  if (labels.empty()) throw ValidationError("dataset has no samples");
  if (features.rows() != labels.size()) {
    throw ValidationError("dataset has " + std::to_string(features.rows()) + " feature rows and " +
                          std::to_string(labels.size()) + " labels");
  }
  if (features.cols() == 0) throw ValidationError("dataset has zero-dimensional features");
  if (num_classes < 2) throw ValidationError("dataset needs at least two classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw ValidationError("label " + std::to_string(labels[i]) + " of sample " +
                            std::to_string(i) + " outside [0," + std::to_string(num_classes) +
                            ")");
    }
  }
}

DisjointDataset subset(const DisjointDataset& data, std::span<const std::size_t> indices) {
  DisjointDataset out;
  out.features = Matrix(indices.size(), data.dimension());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = data.sample(indices[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(data.labels[indices[r]]);
  }
  out.task = data.task;
  out.num_classes = data.num_classes;
  out.split = data.split;
  out.provenance = data.provenance;
  return out;
}

void ShiftSpec::validate(std::size_t dimension) const {
  if (!mean_offset.empty() && mean_offset.size() != dimension) {
    throw ConfigError("shift offset has " + std::to_string(mean_offset.size()) +
                      " entries for dimension " + std::to_string(dimension));
  }
  if (!(scale > 0.0)) throw ConfigError("shift scale must be positive");
  if (!(label_noise_rate >= 0.0 && label_noise_rate < 1.0)) {
    throw ConfigError("label noise rate must lie in [0,1)");
  }
  if (!(shifted_fraction >= 0.0 && shifted_fraction <= 1.0)) {
    throw ConfigError("shifted fraction must lie in [0,1]");
  }
}

bool ShiftSpec::is_identity() const noexcept {
  const bool no_offset =
      std::all_of(mean_offset.begin(), mean_offset.end(), [](double v) { return v == 0.0; });
  return no_offset && scale == 1.0 && rotation == 0.0;
}

namespace {

struct Lattice {
  std::vector<std::vector<double>> centres;
  std::vector<std::size_t> label_a;
  std::vector<std::size_t> label_b;
  std::vector<double> weights;
};

Lattice make_lattice(std::size_t ca, std::size_t cb, const GeneratorOptions& opt) {
  Lattice lat;
  const double angle = std::numbers::pi / 3.0;
  std::vector<double> mean(opt.dimension, 0.0);
  for (std::size_t p = 0; p < ca; ++p) {
    for (std::size_t q = 0; q < cb; ++q) {
      std::vector<double> c(opt.dimension, 0.0);
      c[0] = opt.spacing * (static_cast<double>(p) + static_cast<double>(q) * std::cos(angle));
      c[1] = opt.spacing * static_cast<double>(q) * std::sin(angle);
      for (std::size_t d = 0; d < opt.dimension; ++d) mean[d] += c[d];
      const double gap = static_cast<double>(p) / static_cast<double>(ca - 1) -
                         static_cast<double>(q) / static_cast<double>(cb - 1);
      lat.centres.push_back(std::move(c));
      lat.label_a.push_back(p);
      lat.label_b.push_back(q);
      lat.weights.push_back(std::exp(-opt.coupling * gap * gap));
    }
  }
  for (auto& c : lat.centres) {
    for (std::size_t d = 0; d < opt.dimension; ++d) c[d] -= mean[d] / static_cast<double>(ca * cb);
  }
  return lat;
}

struct Draw {
  Matrix features;
  HiddenTruth truth;
  std::vector<std::size_t> exposed;
};

Draw draw(std::mt19937_64& rng, std::size_t n, const Lattice& lat, const GeneratorOptions& opt,
          Task task, std::size_t classes, const ShiftSpec* shift, double noise_rate) {
  Draw out;
  out.features = Matrix(n, opt.dimension);
  std::discrete_distribution<std::size_t> blob(lat.weights.begin(), lat.weights.end());
  std::normal_distribution<double> gauss(0.0, opt.blob_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_class(0, classes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = blob(rng);
    auto row = out.features.row(i);
    for (std::size_t d = 0; d < opt.dimension; ++d) row[d] = lat.centres[k][d] + gauss(rng);
    bool moved = false;
    if (shift != nullptr && unit(rng) < shift->shifted_fraction) {
      moved = true;
      for (double& v : row) v *= shift->scale;
      const double c = std::cos(shift->rotation), s = std::sin(shift->rotation);
      const double x = row[0], y = row[1];
      row[0] = c * x - s * y;
      row[1] = s * x + c * y;
      for (std::size_t d = 0; d < shift->mean_offset.size(); ++d) row[d] += shift->mean_offset[d];
    }
    const std::size_t truth = task == Task::A ? lat.label_a[k] : lat.label_b[k];
    bool noisy = false;
    std::size_t exposed = truth;
    if (noise_rate > 0.0 && unit(rng) < noise_rate) {
      noisy = true;
      exposed = any_class(rng);
    }
    out.truth.task_a.push_back(lat.label_a[k]);
    out.truth.task_b.push_back(lat.label_b[k]);
    out.truth.shifted.push_back(moved ? 1 : 0);
    out.truth.noise_applied.push_back(noisy ? 1 : 0);
    out.exposed.push_back(exposed);
  }
  return out;
}

std::string describe(std::uint64_t seed, const ShiftSpec& shift, const GeneratorOptions& opt) {
  return "synthetic seed=" + std::to_string(seed) + " scale=" + textio::format_double(shift.scale) +
         " rotation=" + textio::format_double(shift.rotation) +
         " noise=" + textio::format_double(shift.label_noise_rate) +
         " spacing=" + textio::format_double(opt.spacing) +
         " blob_std=" + textio::format_double(opt.blob_std);
}

}  // namespace

TwoTaskData gen_two_task(std::uint64_t seed, std::size_t n_a, std::size_t n_b,
                         std::size_t classes_a, std::size_t classes_b, const ShiftSpec& shift,
                         const GeneratorOptions& options) {
  if (classes_a < 2 || classes_b < 2) throw ConfigError("each task needs at least two classes");
  if (n_a < classes_a || n_b < classes_b) {
    throw ConfigError("dataset sizes must be at least the class counts");
  }
  if (options.dimension < 2) throw ConfigError("generator dimension must be at least 2");
  if (!(options.blob_std > 0.0) || !(options.spacing > 0.0)) {
    throw ConfigError("generator spacing and blob_std must be positive");
  }
  shift.validate(options.dimension);

  const Lattice lat = make_lattice(classes_a, classes_b, options);
  std::mt19937_64 rng(seed);
  auto da = draw(rng, n_a, lat, options, Task::A, classes_a, nullptr, shift.label_noise_rate);
  auto db = draw(rng, n_b, lat, options, Task::B, classes_b, &shift, shift.label_noise_rate);

  TwoTaskData out;
  const auto prov = describe(seed, shift, options);
  out.a = DisjointDataset{std::move(da.features), std::move(da.exposed), Task::A, classes_a,
                          Split::Train, prov};
  out.b = DisjointDataset{std::move(db.features), std::move(db.exposed), Task::B, classes_b,
                          Split::Train, prov};
  out.truth_a = std::move(da.truth);
  out.truth_b = std::move(db.truth);
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DomainError("train fraction must lie in (0,1)");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  return {std::move(train), std::move(test)};
}

std::pair<DisjointDataset, DisjointDataset> split(const DisjointDataset& data,
                                                  double train_fraction, std::uint64_t seed) {
  auto [tr, te] = split_indices(data.size(), train_fraction, seed);
  auto train = subset(data, tr);
  auto test = subset(data, te);
  train.split = Split::Train;
  test.split = Split::Test;
  return {std::move(train), std::move(test)};
}

std::string to_csv(const DisjointDataset& data) {
  std::string out;
  for (std::size_t d = 0; d < data.dimension(); ++d) out += "feature_" + std::to_string(d) + ",";
  out += "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.sample(i)) out += textio::format_double(v) + ",";
    out += std::to_string(data.labels[i]) + "\n";
  }
  return out;
}

DisjointDataset parse_csv(std::string_view text, const std::string& source, Task task,
                          std::optional<std::size_t> num_classes) {
  const auto lines = textio::split(text, '\n');
  const auto header = textio::split(textio::trim(lines.front()), ',');
  if (header.size() < 2 || header.back() != "label") {
    throw ParseError(source, 1, "header must be feature_0,...,feature_{d-1},label");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d] != "feature_" + std::to_string(d)) {
      throw ParseError(source, 1, "unexpected column '" + header[d] + "'");
    }
  }
  std::vector<double> values;
  std::vector<std::size_t> labels;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto line = textio::trim(lines[l]);
    if (line.empty()) continue;
    const auto fields = textio::split(line, ',');
    if (fields.size() != dim + 1) {
      throw ParseError(source, l + 1,
                       "expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(fields.size()));
    }
    try {
      for (std::size_t d = 0; d < dim; ++d) values.push_back(textio::parse_double(fields[d]));
      const auto label = textio::parse_int(fields[dim]);
      if (label < 0) throw ValidationError("negative label on line " + std::to_string(l + 1));
      labels.push_back(static_cast<std::size_t>(label));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, l + 1, e.what());
    }
  }
  if (labels.empty()) throw ValidationError(source + ": no data rows");

  DisjointDataset out;
  out.features = Matrix(labels.size(), dim);
  std::copy(values.begin(), values.end(), out.features.values().begin());
  out.labels = std::move(labels);
  out.task = task;
  out.num_classes = num_classes.value_or(
      std::max<std::size_t>(2, *std::max_element(out.labels.begin(), out.labels.end()) + 1));
  out.provenance = source;
  out.validate();
  return out;
}

std::string to_meta(const DatasetMeta& m) {
  std::string offset;
  for (std::size_t d = 0; d < m.shift.mean_offset.size(); ++d) {
    if (d) offset += ' ';
    offset += textio::format_double(m.shift.mean_offset[d]);
  }
  return textio::render_key_values({
      {"task_tag", std::string(task_name(m.task))},
      {"C", std::to_string(m.num_classes)},
      {"n", std::to_string(m.n)},
      {"d", std::to_string(m.dimension)},
      {"seed", std::to_string(m.seed)},
      {"split", std::string(split_name(m.split))},
      {"shift_offset", offset},
      {"shift_scale", textio::format_double(m.shift.scale)},
      {"shift_rotation", textio::format_double(m.shift.rotation)},
      {"label_noise_rate", textio::format_double(m.shift.label_noise_rate)},
      {"shifted_fraction", textio::format_double(m.shift.shifted_fraction)},
  });
}

DatasetMeta parse_meta(std::string_view text, const std::string& source) {
  const auto kv = textio::parse_key_values(text, source);
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError(source + ": missing key '" + key + "'");
    return it->second;
  };
  DatasetMeta m;
  try {
    const auto& tag = get("task_tag");
    if (tag != "A" && tag != "B") throw ValidationError(source + ": task_tag must be A or B");
    m.task = tag == "A" ? Task::A : Task::B;
    m.num_classes = textio::parse_uint(get("C"));
    m.n = textio::parse_uint(get("n"));
    m.dimension = textio::parse_uint(get("d"));
    m.seed = textio::parse_uint(get("seed"));
    m.split = get("split") == "test" ? Split::Test : Split::Train;
    for (const auto& t : textio::split(get("shift_offset"), ' ')) {
      if (!t.empty()) m.shift.mean_offset.push_back(textio::parse_double(t));
    }
    m.shift.scale = textio::parse_double(get("shift_scale"));
    m.shift.rotation = textio::parse_double(get("shift_rotation"));
    m.shift.label_noise_rate = textio::parse_double(get("label_noise_rate"));
    m.shift.shifted_fraction = textio::parse_double(get("shifted_fraction"));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return m;
}

std::filesystem::path meta_path(const std::filesystem::path& csv) {
  auto p = csv;
  p += ".meta";
  return p;
}

void save_dataset(const std::filesystem::path& csv, const DisjointDataset& data,
                  const DatasetMeta& meta) {
  textio::write_file_atomic(csv, to_csv(data));
  textio::write_file_atomic(meta_path(csv), to_meta(meta));
}

DisjointDataset load_csv(const std::filesystem::path& csv) {
  const auto text = textio::read_file(csv);
  const auto sidecar = meta_path(csv);
  if (std::filesystem::exists(sidecar)) {
    const auto meta = parse_meta(textio::read_file(sidecar), sidecar.string());
    auto data = parse_csv(text, csv.string(), meta.task, meta.num_classes);
    if (data.size() != meta.n || data.dimension() != meta.dimension) {
      throw ValidationError(csv.string() + ": sidecar n/d disagree with the CSV");
    }
    data.split = meta.split;
    return data;
  }
  return parse_csv(text, csv.string(), Task::A);
}

BenchmarkData make_benchmark_data(std::uint64_t seed, const BenchmarkSpec& spec) {
  auto train = gen_two_task(seed, spec.n_a, spec.n_b, spec.classes_a, spec.classes_b, spec.shift,
                            spec.generator);
  ShiftSpec clean = spec.shift;
  clean.label_noise_rate = 0.0;
  auto test = gen_two_task(seed + 7919, spec.n_test_a, spec.n_test_b, spec.classes_a,
                           spec.classes_b, clean, spec.generator);
  test.a.split = Split::Test;
  test.b.split = Split::Test;
  return BenchmarkData{std::move(train.a), std::move(train.b), std::move(test.a),
                       std::move(test.b), std::move(train.truth_a), std::move(train.truth_b)};
}

}  // namespace mtlsa
