#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mtlsa/bench.hpp"
#include "mtlsa/errors.hpp"
#include "mtlsa/textio.hpp"
#include "mtlsa/weighting.hpp"
#include "settings.hpp"

namespace fs = std::filesystem;

namespace mtlsa::cli {
namespace {

enum class Level { Quiet, Info, Debug };

Level log_level() {
  const char* env = std::getenv("MTLSA_LOG");
  if (env == nullptr) return Level::Info;
  const std::string v(env);
  if (v == "quiet" || v == "0") return Level::Quiet;
  if (v == "debug" || v == "2") return Level::Debug;
  return Level::Info;
}

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), level_(log_level()) {}
  void info(const std::string& m) const {
    if (level_ >= Level::Info) err_ << "[info] " << m << '\n';
  }
  void debug(const std::string& m) const {
    if (level_ >= Level::Debug) err_ << "[debug] " << m << '\n';
  }

 private:
  std::ostream& err_;
  Level level_;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::uint64_t> epochs;
  std::string strategy;
  std::string seeds;
  std::vector<std::string> sets;
  std::string data;
  std::optional<std::uint64_t> n_a;
  std::optional<std::uint64_t> n_b;
  std::string file;
};

Settings resolve(const Options& o) {
  Settings s;
  if (!o.config.empty()) s.merge_file(o.config);
  for (const auto& a : o.sets) s.merge_override(a);
  if (o.seed) s.set("seed", std::to_string(*o.seed));
  if (o.epochs) s.set("epochs", std::to_string(*o.epochs));
  if (!o.strategy.empty()) s.set("strategy", o.strategy);
  if (!o.seeds.empty()) s.set("seeds", o.seeds);
  if (o.n_a) s.set("n_a", std::to_string(*o.n_a));
  if (o.n_b) s.set("n_b", std::to_string(*o.n_b));
  return s;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
}

void write_out(const fs::path& path, std::string_view content, const Logger& log) {
  textio::write_file_atomic(path, content);
  log.debug("wrote " + path.string());
}

DatasetMeta meta_for(const DisjointDataset& d, std::uint64_t seed, const ShiftSpec& shift) {
  DatasetMeta m;
  m.task = d.task;
  m.num_classes = d.num_classes;
  m.n = d.size();
  m.dimension = d.dimension();
  m.seed = seed;
  m.split = d.split;
  m.shift = shift;
  return m;
}

/// a.csv and b.csv are required; test files are optional.
BenchmarkData load_data_dir(const fs::path& dir) {
  std::vector<std::string> missing;
  for (const char* name : {"a.csv", "b.csv"}) {
    if (!fs::exists(dir / name)) missing.push_back((dir / name).string());
  }
  if (!missing.empty()) {
    throw std::runtime_error("missing dataset files: " + textio::join(missing, ' '));
  }
  BenchmarkData d;
  d.train_a = load_csv(dir / "a.csv");
  d.train_b = load_csv(dir / "b.csv");
  d.train_a.task = Task::A;
  d.train_b.task = Task::B;
  if (fs::exists(dir / "a_test.csv")) {
    d.test_a = load_csv(dir / "a_test.csv");
    d.test_a.task = Task::A;
  }
  if (fs::exists(dir / "b_test.csv")) {
    d.test_b = load_csv(dir / "b_test.csv");
    d.test_b.task = Task::B;
  }
  return d;
}

int cmd_gen_data(const Options& o, std::ostream& out, const Logger& log) {
  const Settings s = resolve(o);
  const auto spec = s.benchmark_spec();
  const auto seed = s.get_uint("seed");
  const auto data = make_benchmark_data(seed, spec);
  const fs::path dir(o.out);
  ensure_dir(dir);
  ShiftSpec clean = spec.shift;
  clean.label_noise_rate = 0.0;
  const std::pair<const char*, const DisjointDataset*> files[] = {
      {"a.csv", &data.train_a}, {"b.csv", &data.train_b},
      {"a_test.csv", &data.test_a}, {"b_test.csv", &data.test_b}};
  for (const auto& [name, d] : files) {
    const bool test = d->split == Split::Test;
    save_dataset(dir / name, *d, meta_for(*d, test ? seed + 7919 : seed, test ? clean : spec.shift));
    out << (dir / name).string() << '\n';
  }
  log.info("generated datasets with seed " + std::to_string(seed));
  return 0;
}

int cmd_train(const Options& o, std::ostream& out, const Logger& log) {
  const Settings s = resolve(o);
  const auto config = s.train_config();
  const auto data = o.data.empty() ? make_benchmark_data(config.seed, s.benchmark_spec())
                                   : load_data_dir(o.data);
  const fs::path dir(o.out);
  ensure_dir(dir);
  EvalSets eval;
  if (data.test_a.size() > 0) eval.test_a = &data.test_a;
  if (data.test_b.size() > 0) eval.test_b = &data.test_b;
  log.info("training strategy " + s.get("strategy") + " seed " + std::to_string(config.seed));
  const auto result = train(config, data.train_a, data.train_b, eval);

  write_out(dir / "checkpoint.txt", save_checkpoint(result.net), log);
  if (result.task_b_net) write_out(dir / "checkpoint_b.txt", save_checkpoint(*result.task_b_net), log);
  write_out(dir / "history.csv", write_history(result.history), log);
  write_out(dir / "weights_audit.csv", write_weight_audit(result.final_weights), log);
  write_out(dir / "config.txt", s.render(), log);

  const auto acc = [&](Task t, const DisjointDataset* d) {
    return d ? textio::format_double(accuracy(result.net_for(t), t, *d)) : std::string("nan");
  };
  out << "test_acc_a=" << acc(Task::A, eval.test_a) << '\n';
  out << "test_acc_b=" << acc(Task::B, eval.test_b) << '\n';
  return 0;
}

void write_report_files(const fs::path& dir, std::span<const RunResult> results, std::ostream& out,
                        const Logger& log) {
  const auto rows = summarize(results);
  const auto report = render_report(rows);
  write_out(dir / "report.csv", report, log);
  write_out(dir / "plot.dat", render_plot_data(rows), log);
  out << report;
}

int cmd_ablate(const Options& o, std::ostream& out, const Logger& log) {
  Settings s = resolve(o);
  const auto grid = o.strategy.empty() ? default_roster() : s.strategies();
  s.set("strategy", "mtl-sa");
  const auto base = s.train_config();
  const auto seeds = s.seeds();
  DataFactory factory;
  if (o.data.empty()) {
    const auto spec = s.benchmark_spec();
    factory = [spec](std::uint64_t seed) { return make_benchmark_data(seed, spec); };
  } else {
    auto fixed = std::make_shared<const BenchmarkData>(load_data_dir(o.data));
    if (fixed->test_a.size() == 0 || fixed->test_b.size() == 0) {
      throw std::runtime_error("ablate needs a_test.csv and b_test.csv in " + o.data);
    }
    factory = [fixed](std::uint64_t) { return *fixed; };
  }
  const fs::path dir(o.out);
  ensure_dir(dir);
  log.info("running " + std::to_string(grid.size()) + " strategies x " +
           std::to_string(seeds.size()) + " seeds");
  const auto results = run_matrix(grid, base, factory, seeds, s.get_uint("threads"));
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.ok) {
      ++failed;
      log.info("cell " + r.strategy + " seed " + std::to_string(r.seed) + " failed: " + r.error);
    }
  }
  write_out(dir / "results.csv", render_results(results), log);
  write_out(dir / "timings.csv", render_timings(results), log);
  write_report_files(dir, results, out, log);
  return failed == 0 ? 0 : 1;
}

int cmd_report(const Options& o, std::ostream& out, const Logger& log) {
  const fs::path dir(o.out);
  const fs::path source = o.file.empty() ? dir / "results.csv" : fs::path(o.file);
  if (!fs::exists(source)) throw std::runtime_error("missing results file " + source.string());
  const auto results = parse_results(textio::read_file(source), source.string());
  ensure_dir(dir);
  write_report_files(dir, results, out, log);
  return 0;
}

int cmd_audit(const Options& o, std::ostream& out, const Logger&) {
  const fs::path source = o.file.empty() ? fs::path(o.out) / "weights_audit.csv" : fs::path(o.file);
  if (!fs::exists(source)) throw std::runtime_error("missing weight audit file " + source.string());
  const auto records = read_weight_audit(textio::read_file(source), source.string());
  struct Acc {
    std::size_t n = 0, above = 0;
    double w_c = 0, w_d = 0, w_g = 0, w = 0;
  };
  std::map<std::size_t, Acc> groups;
  Acc total;
  for (const auto& r : records) {
    for (Acc* a : {&groups[r.pseudo_class], &total}) {
      ++a->n;
      a->w_c += r.w_c;
      a->w_d += r.w_d;
      a->w_g += r.w_g;
      a->w += r.w_combined;
      if (r.w_combined > 0.5) ++a->above;
    }
  }
  auto row = [&](const std::string& label, const Acc& a) {
    const double n = a.n ? static_cast<double>(a.n) : 1.0;
    out << label << ',' << a.n << ',' << textio::format_double(a.w_c / n) << ','
        << textio::format_double(a.w_d / n) << ',' << textio::format_double(a.w_g / n) << ','
        << textio::format_double(a.w / n) << ','
        << textio::format_double(static_cast<double>(a.above) / n) << '\n';
  };
  out << "pseudo_class,n,mean_w_c,mean_w_d,mean_w_g,mean_w,fraction_w_above_0.5\n";
  for (const auto& [c, a] : groups) row(std::to_string(c), a);
  row("all", total);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task training on disjoint datasets with sample-adaptive label augmentation",
               "mtlsa"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "override a configuration key (key=value), repeatable");
    sub->add_option("--seed", o.seed, "master seed");
    auto* opt = sub->add_option("--out", o.out, "output directory");
    if (out_required) opt->required();
  };

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset pair with test sets");
  common(gen, true);
  gen->add_option("--n-a", o.n_a, "training samples in dataset A");
  gen->add_option("--n-b", o.n_b, "training samples in dataset B");

  auto* tr = app.add_subcommand("train", "train one strategy and write checkpoint, history and weight audit");
  common(tr, true);
  tr->add_option("--epochs", o.epochs, "alternating epochs");
  tr->add_option("--strategy", o.strategy, "strategy id");
  tr->add_option("--data", o.data, "directory with a.csv and b.csv (synthesized when absent)");

  auto* ab = app.add_subcommand("ablate", "run the strategy x seed matrix and summarize it");
  common(ab, true);
  ab->add_option("--epochs", o.epochs, "alternating epochs");
  ab->add_option("--strategy", o.strategy, "comma-separated strategy ids (default: full roster)");
  ab->add_option("--seeds", o.seeds, "comma-separated seeds");
  ab->add_option("--data", o.data, "directory with a.csv, b.csv, a_test.csv, b_test.csv");

  auto* rep = app.add_subcommand("report", "rebuild report.csv and plot.dat from results.csv");
  common(rep, true);
  rep->add_option("--results", o.file, "results file (default: <out>/results.csv)");

  auto* aud = app.add_subcommand("audit-weights", "summarize a weight audit file per pseudo class");
  common(aud, false);
  aud->add_option("--file", o.file, "audit file (default: <out>/weights_audit.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    for (auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return 2;
  }

  const Logger log(err);
  try {
    if (gen->parsed()) return cmd_gen_data(o, out, log);
    if (tr->parsed()) return cmd_train(o, out, log);
    if (ab->parsed()) return cmd_ablate(o, out, log);
    if (rep->parsed()) return cmd_report(o, out, log);
    if (aud->parsed()) {
      if (o.out.empty() && o.file.empty()) throw ConfigError("audit-weights needs --file or --out");
      return cmd_audit(o, out, log);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mtlsa::cli
