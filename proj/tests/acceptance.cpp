// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mtlsa/bench.hpp"
#include "mtlsa/confweight.hpp"
#include "mtlsa/distweight.hpp"
#include "mtlsa/labelops.hpp"
#include "mtlsa/nncore.hpp"
#include "mtlsa/trainer.hpp"
#include "oracles.hpp"

using namespace mtlsa;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome emd_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t m = 1 + rng() % 3, n = 1 + rng() % 3;
    std::vector<double> s(m), d(n);
    double ts = 0, td = 0;
    for (auto& x : s) ts += x = u(rng) + 1e-3;
    for (auto& x : d) td += x = u(rng) + 1e-3;
    for (auto& x : s) x /= ts;
    for (auto& x : d) x /= td;
    std::vector<std::vector<double>> cost(m, std::vector<double>(n));
    Matrix cm(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) cm(i, j) = cost[i][j] = 10.0 * u(rng);
    }
    worst = std::max(worst, std::abs(solve_emd(s, d, cm).total_work -
                                     oracle::transport_min_cost(s, d, cost)));
  }
  double worst_single = 0.0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t ka = 1 + rng() % 6, dim = 1 + rng() % 4;
    ClusterModel a, b;
    b.means.assign(1, std::vector<double>(dim));
    a.means.assign(ka, std::vector<double>(dim));
    for (auto& v : b.means[0]) v = 6.0 * u(rng) - 3.0;
    for (auto& p : a.means) {
      for (auto& v : p) v = 6.0 * u(rng) - 3.0;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < ka; ++j) total += a.priors.emplace_back(u(rng) + 1e-3);
    for (auto& p : a.priors) p /= total;
    b.priors = {1.0};
    double closed = 0.0;
    for (std::size_t j = 0; j < ka; ++j) {
      double dist = 0.0;
      for (std::size_t c = 0; c < dim; ++c) dist += std::pow(b.means[0][c] - a.means[j][c], 2);
      closed += a.priors[j] * dist;
    }
    worst_single = std::max(worst_single, std::abs(cluster_to_domain_distance(b, a)[0] - closed));
  }
  return {worst < 1e-9 && worst_single < 1e-9,
          fmt("max |cost - oracle| = %.2e over 500 instances, single-source max error %.2e", worst,
              worst_single)};
}

// ---------------------------------------------------------------------------

Outcome density_oracle() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.5);
  std::uniform_real_distribution<double> kap(0.05, 0.95);
  std::size_t mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 50, dim = 1 + rng() % 4;
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts) {
      for (auto& v : p) v = std::round(g(rng) * 4.0) / 4.0;  // coarse grid forces ties
    }
    const double kappa = t % 4 == 0 ? kDefaultKappa : kap(rng);
    const auto ref = oracle::squared_distances(pts);
    const double ref_cut = oracle::cutoff_by_sort(ref, kappa);
    const auto d = distance_matrix(pts);
    const double cut = density_cutoff(d, kappa);
    if (cut != ref_cut || local_density(d, cut) != oracle::density_by_loop(ref, ref_cut)) {
      ++mismatches;
    }
  }
  const std::vector<std::vector<double>> three = {{0.0, 0.0}, {0.1, 0.0}, {10.0, 0.0}};
  const auto d3 = distance_matrix(three);
  const double dc = density_cutoff(d3, 0.6);
  const auto rho = local_density(d3, dc);
  const std::vector<LabelVector> softs(3, LabelVector({0.9, 0.1}));
  const auto cw = confidence_weights(softs, three, 0.6);
  const bool hand = std::abs(dc - 98.01) < 1e-12 && rho == std::vector<std::size_t>{2, 2, 1} &&
                    cw.w_d == std::vector<double>{1.0, 1.0, 0.5};
  return {mismatches == 0 && hand,
          fmt("%zu/200 groups disagree with the oracle; 3-point example d_c=%.17g rho=[%zu,%zu,%zu] "
              "w_d=[%g,%g,%g]",
              mismatches, dc, rho[0], rho[1], rho[2], cw.w_d[0], cw.w_d[1], cw.w_d[2])};
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::size_t> sizes{2 + rng() % 3};
    for (std::size_t l = 0, depth = 1 + rng() % 2; l < depth; ++l) sizes.push_back(2 + rng() % 4);
    NetOptions opt;
    if (t % 3 == 0) opt.head_hidden = {2 + rng() % 3};
    opt.activation = t % 2 ? Activation::Relu : Activation::Tanh;
    const auto net = oracle::randomize(init_net(sizes, 2 + rng() % 3, 2 + rng() % 3, t, opt), rng);
    const auto batch = oracle::random_batch(rng, net, 1 + rng() % 6, true);
    const auto analytic = oracle::flatten(compute_gradients(net, batch.view()).grad);
    const auto numeric = oracle::numeric_gradient(net, batch.view(), 1e-5);
    worst = std::max(worst, oracle::max_relative_error(analytic, numeric));
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 100 random nets", worst)};
}

// ---------------------------------------------------------------------------

BenchmarkData reduction_data() {
  BenchmarkSpec spec;
  spec.n_a = spec.n_b = 80;
  spec.n_test_a = spec.n_test_b = 100;
  spec.shift.mean_offset = {3.0, 0.0};
  spec.shift.label_noise_rate = 0.2;
  return make_benchmark_data(17, spec);
}

Outcome reduction_identity() {
  const auto d = reduction_data();
  TrainConfig sa;
  sa.strategy = Strategy::MtlSa;
  sa.weight_mode = WeightMode::fixed(0.0);
  sa.learning_rate = 1e-2;
  sa.epochs = 10;
  sa.init_epochs = 3;
  sa.seed = 4;
  TrainConfig wf = sa;
  wf.strategy = Strategy::MtlWf;
  wf.weight_mode = WeightMode::full();

  auto s1 = make_state(sa, d.train_a.dimension(), 3, 3);
  auto s2 = make_state(wf, d.train_a.dimension(), 3, 3);
  joint_init(s1, d.train_a, d.train_b, sa.init_epochs, sa.batch_size);
  joint_init(s2, d.train_a, d.train_b, wf.init_epochs, wf.batch_size);
  std::size_t identical = s1.net == s2.net ? 1 : 0;
  for (std::size_t t = 1; t <= sa.epochs; ++t) {
    const EpochPhase p1{t, active_dataset(t), snapshot(s1.net)};
    const EpochPhase p2{t, active_dataset(t), snapshot(s2.net)};
    run_epoch(s1, p1, d.train_a, d.train_b, sa);
    run_epoch(s2, p2, d.train_a, d.train_b, wf);
    if (s1.net == s2.net && s1.adam.first_moment() == s2.adam.first_moment() &&
        s1.adam.second_moment() == s2.adam.second_moment()) ++identical;
  }
  const bool moved = !(s1.net == make_state(sa, d.train_a.dimension(), 3, 3).net);
  return {identical == sa.epochs + 1 && moved,
          fmt("%zu/%zu checkpoints bitwise identical (joint init + 10 alternating epochs)", identical,
              sa.epochs + 1)};
}

// ---------------------------------------------------------------------------

Outcome label_algebra() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t convex = 0, argmax = 0, identity = 0, limit = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng() % 7;
    const auto soft = oracle::random_label(rng, k);
    const auto other = oracle::random_label(rng, k);
    const double w = u(rng);
    const double temp = 1.0 + 9.0 * u(rng);

    const auto pseudo = to_pseudo(soft);
    const auto mix = interpolate(pseudo, other, w);
    double sum = 0.0;
    bool inside = true;
    for (std::size_t i = 0; i < k; ++i) {
      sum += mix[i];
      inside = inside && std::abs(mix[i] - (w * pseudo[i] + (1 - w) * other[i])) < 1e-12 &&
               mix[i] >= std::min(pseudo[i], other[i]) - 1e-12 &&
               mix[i] <= std::max(pseudo[i], other[i]) + 1e-12;
    }
    convex += inside && std::abs(sum - 1.0) < 1e-12;

    argmax += to_pseudo(sharpen(soft, temp)) == pseudo;

    const auto same = sharpen(soft, 1.0);
    bool id = true;
    for (std::size_t i = 0; i < k; ++i) id = id && std::abs(same[i] - soft[i]) < 1e-12;
    identity += id;

    const auto flat = sharpen(soft, 1e6);
    bool uniform = true;
    for (std::size_t i = 0; i < k; ++i) uniform = uniform && std::abs(flat[i] - 1.0 / k) < 1e-4;
    limit += uniform;
  }
  return {convex == 1000 && argmax == 1000 && identity == 1000 && limit == 1000,
          fmt("convexity %zu, argmax invariance %zu, T=1 identity %zu, T=1e6 uniform %zu (of 1000)",
              convex, argmax, identity, limit)};
}

// ---------------------------------------------------------------------------

BenchmarkSpec ordering_spec() {
  BenchmarkSpec spec;
  spec.n_a = spec.n_b = 60;
  spec.n_test_a = spec.n_test_b = 500;
  spec.classes_a = spec.classes_b = 3;
  spec.generator.spacing = 3.0;
  spec.generator.blob_std = 0.8;
  spec.generator.coupling = 1.0;
  spec.shift.mean_offset = {6.0, 0.0};
  spec.shift.shifted_fraction = 0.5;
  spec.shift.label_noise_rate = 0.2;
  return spec;
}

TrainConfig ordering_config() {
  TrainConfig c;
  c.learning_rate = 2.5e-2;
  c.epochs = 10;
  c.init_epochs = 3;
  c.batch_size = 32;
  return c;
}

struct Paired {
  double mean = 0.0;  // mean of x - y
  double se = 0.0;    // standard error of that mean
};

Paired paired(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m += (x[i] - y[i]) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += std::pow(x[i] - y[i] - m, 2);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double se_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const auto n = static_cast<double>(x.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

Outcome directional_ordering() {
  const std::vector<StrategySpec> grid = {find_strategy("mtl-sa"), find_strategy("mtl-wf"),
                                          find_strategy("w=1"), find_strategy("w=0")};
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 100; ++s) seeds.push_back(s);
  const auto spec = ordering_spec();
  const auto results = run_matrix(
      grid, ordering_config(), [&](std::uint64_t seed) { return make_benchmark_data(seed, spec); },
      seeds);
  std::vector<std::vector<double>> acc(grid.size());
  for (std::size_t c = 0; c < results.size(); ++c) {
    if (!results[c].ok) return {false, "cell failed: " + results[c].error};
    acc[c / seeds.size()].push_back(0.5 * (results[c].acc_a + results[c].acc_b));
  }
  const auto& sa = acc[0];
  const auto& wf = acc[1];
  const auto& w1 = acc[2];
  const auto& w0 = acc[3];
  const auto vs_wf = paired(sa, wf);
  const auto vs_w1 = paired(sa, w1);
  const bool pass = vs_wf.mean > vs_wf.se && vs_w1.mean > vs_w1.se && mean_of(w1) < mean_of(w0);
  return {pass,
          fmt("100 seeds, mean accuracy sa=%.4f wf=%.4f w1=%.4f w0=%.4f; sa-wf=%+.4f (paired SE %.4f, "
              "unpaired SE %.4f); sa-w1=%+.4f (paired SE %.4f, unpaired SE %.4f)",
              mean_of(sa), mean_of(wf), mean_of(w1), mean_of(w0), vs_wf.mean, vs_wf.se,
              std::hypot(se_of(sa), se_of(wf)), vs_w1.mean, vs_w1.se, std::hypot(se_of(sa), se_of(w1)))};
}

// ---------------------------------------------------------------------------

Outcome weight_pipeline() {
  BenchmarkSpec spec;
  spec.n_a = spec.n_b = 400;
  spec.n_test_a = spec.n_test_b = 3;
  spec.shift.mean_offset = {4.5, 0.0};
  spec.shift.shifted_fraction = 0.5;
  spec.shift.label_noise_rate = 0.2;
  TrainConfig cfg = ordering_config();
  cfg.init_epochs = 5;
  int wg_wins = 0, ws_wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = make_benchmark_data(seed, spec);
    cfg.seed = seed;
    auto st = make_state(cfg, d.train_a.dimension(), spec.classes_a, spec.classes_b);
    joint_init(st, d.train_a, d.train_b, cfg.init_epochs, cfg.batch_size);
    const auto targets = make_targets(st.net, Task::A, d.train_b.features, cfg.temperature);
    const auto report = compute_weights(st.net, Task::A, d.train_b, d.train_a, targets, cfg,
                                        SeedPlan::gmm(seed, 0, false), SeedPlan::gmm(seed, 0, true));
    double wg[2] = {0, 0}, ws[2] = {0, 0};
    int nwg[2] = {0, 0}, nws[2] = {0, 0};
    for (const auto& r : report.records) {
      const int far = d.truth_b.shifted[r.sample_index] ? 1 : 0;
      wg[far] += r.w_g;
      ++nwg[far];
      const int right = r.pseudo_class == d.truth_b.task_a[r.sample_index] ? 1 : 0;
      ws[right] += r.w_s;
      ++nws[right];
    }
    const double near_g = wg[0] / nwg[0], far_g = wg[1] / nwg[1];
    const double right_s = ws[1] / nws[1], wrong_s = nws[0] ? ws[0] / nws[0] : 0.0;
    wg_wins += near_g > far_g;
    ws_wins += nws[0] == 0 || right_s > wrong_s;
    per_seed += fmt(" [%.3f>%.3f %.3f>%.3f]", near_g, far_g, right_s, wrong_s);
  }
  return {wg_wins >= 9 && ws_wins >= 9,
          fmt("w_g overlap>shifted in %d/10 seeds, w_s correct>wrong in %d/10 seeds;", wg_wins, ws_wins) +
              per_seed};
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };

  ShiftSpec shift;
  shift.mean_offset = {2.0, -1.0};
  shift.rotation = 0.4;
  shift.label_noise_rate = 0.2;
  const auto g1 = gen_two_task(42, 120, 90, 3, 4, shift);
  const auto g2 = gen_two_task(42, 120, 90, 3, 4, shift);
  check(to_csv(g1.a) == to_csv(g2.a) && to_csv(g1.b) == to_csv(g2.b), "dataset bytes");
  check(g1.truth_b.task_a == g2.truth_b.task_a, "hidden labels");

  auto back = parse_csv(to_csv(g1.b), "mem", Task::B, 4);
  check(back.features == g1.b.features && back.labels == g1.b.labels, "csv round-trip");

  const auto d = reduction_data();
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 4;
  cfg.init_epochs = 2;
  cfg.seed = 8;
  const EvalSets eval{&d.test_a, &d.test_b};
  const auto r1 = train(cfg, d.train_a, d.train_b, eval);
  const auto r2 = train(cfg, d.train_a, d.train_b, eval);
  check(write_history(r1.history) == write_history(r2.history), "history bytes");
  const auto ck = save_checkpoint(r1.net);
  check(ck == save_checkpoint(r2.net), "checkpoint bytes");
  check(load_checkpoint(ck) == r1.net, "checkpoint round-trip");
  check(write_weight_audit(r1.final_weights) == write_weight_audit(r2.final_weights), "audit bytes");

  const std::vector<StrategySpec> grid = {find_strategy("mtl-sa"), find_strategy("joint")};
  const std::vector<std::uint64_t> seeds = {1, 2};
  BenchmarkSpec spec;
  spec.n_a = spec.n_b = 40;
  spec.n_test_a = spec.n_test_b = 60;
  const DataFactory factory = [&](std::uint64_t s) { return make_benchmark_data(s, spec); };
  cfg.epochs = 2;
  const auto m1 = run_matrix(grid, cfg, factory, seeds, 1);
  const auto m2 = run_matrix(grid, cfg, factory, seeds, 2);
  check(render_results(m1) == render_results(m2), "results bytes");
  check(render_report(summarize(m1)) == render_report(summarize(m2)), "report bytes");
  check(render_plot_data(summarize(m1)) == render_plot_data(summarize(m2)), "plot bytes");

  std::string detail = failed.empty() ? "datasets, history, checkpoints, audits, results and reports "
                                        "byte-identical; csv and checkpoint round-trips exact"
                                      : "mismatch:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;  // 0 means no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {"EMD oracle equivalence", emd_oracle, 10.0},
      {"local density oracle", density_oracle, 0.0},
      {"gradient check", gradient_check, 30.0},
      {"reduction identity", reduction_identity, 0.0},
      {"label algebra", label_algebra, 0.0},
      {"directional ordering", directional_ordering, 600.0},
      {"weight pipeline sanity", weight_pipeline, 0.0},
      {"determinism and round-trips", determinism, 0.0},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].limit_seconds > 0 && secs >= criteria[i].limit_seconds) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s limit)", criteria[i].limit_seconds);
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s (%.2f s) %s\n", i + 1, criteria[i].name, o.pass ? "PASS" : "FAIL",
                secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
