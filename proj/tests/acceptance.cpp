// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fourn/experiment.hpp"
#include "fourn/kriging.hpp"
#include "fourn/neural.hpp"
#include "fourn/simulate.hpp"
#include "fourn/vecchia.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace fourn;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double metric_mean(const MetricsReport& r, const std::string& method, const std::string& metric) {
  const MetricRow* row = r.find(method, metric);
  if (!row) throw std::runtime_error("missing metric " + method + " " + metric);
  return row->mean;
}

const MetricRow& metric_row(const MetricsReport& r, const std::string& method, const std::string& metric) {
  const MetricRow* row = r.find(method, metric);
  if (!row) throw std::runtime_error("missing metric " + method + " " + metric);
  return *row;
}

void log_progress(const std::string& msg) { std::fprintf(stderr, "  %s\n", msg.c_str()); }

// ---------------------------------------------------------------- 1

Verdict gradient_correctness() {
  Rng rng(20240601);
  std::uniform_int_distribution<int> n_hidden(0, 3), width(1, 12), input(1, 33);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g;
  std::size_t configs = 0, coords = 0, failures = 0, resamples = 0;
  double worst = 0.0;
  while (configs < 50) {
    std::vector<std::size_t> dims{static_cast<std::size_t>(input(rng))};
    const int h = n_hidden(rng);
    std::size_t w = static_cast<std::size_t>(width(rng)) + 4;
    for (int l = 0; l < h; ++l) {
      dims.push_back(w);
      const std::size_t shrink = static_cast<std::size_t>(width(rng)) / 3;
      w = w > shrink ? w - shrink : 1;
    }
    dims.push_back(1);
    MlpModel model = MlpModel::he_uniform(dims, rng);
    for (auto& layer : model.layers())
      for (double& b : layer.bias) b = 0.1 * g(rng);
    const LossSpec loss = unit(rng) < 0.5 ? LossSpec::squared() : LossSpec::check(0.05 + 0.9 * unit(rng));
    const std::size_t rows = 8;
    Matrix x(rows, dims[0]);
    for (double& v : x.storage()) v = g(rng);
    std::vector<double> y(rows);
    for (double& v : y) v = 2.0 * g(rng);
    const double rate = 0.1 + 0.4 * unit(rng);
    const DropoutMasks masks = sample_dropout_masks(model, rows, rate, rng);

    // Stay away from the ReLU and check-loss kinks so that finite
    // differences are well defined.
    bool near_kink = false;
    Matrix a(x);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
      const DenseLayer& L = model.layer(l);
      Matrix z(rows, L.out);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < L.out; ++o) {
          double s = L.bias[o];
          for (std::size_t i = 0; i < L.in; ++i) s += L.w(o, i) * a(r, i);
          z(r, o) = s;
        }
      if (l + 1 < model.num_layers()) {
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < L.out; ++o) {
            if (std::fabs(z(r, o)) < 1e-3) near_kink = true;
            z(r, o) = std::max(0.0, z(r, o)) * masks[l](r, o);
          }
      } else if (loss.kind == LossKind::Check) {
        for (std::size_t r = 0; r < rows; ++r)
          if (std::fabs(y[r] - z(r, 0)) < 1e-3) near_kink = true;
      }
      a = std::move(z);
    }
    if (near_kink) {
      ++resamples;
      continue;
    }
    const auto out = gradcheck::compare(model, x, y, loss, masks, 1e-5, 1e-5, 1e-8);
    coords += out.coordinates;
    failures += out.failures;
    worst = std::max(worst, out.worst_relative);
    ++configs;
  }
  return {failures == 0, fmt("%zu configurations, %zu coordinates, %zu failures, worst relative error %.2e, "
                             "%zu near-kink draws resampled",
                             configs, coords, failures, worst, resamples)};
}

// ---------------------------------------------------------------- 2

Verdict vecchia_exactness() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 10 + static_cast<std::size_t>(u(rng) * 190);
    std::vector<Location> locs(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      locs[i] = {u(rng), u(rng)};
      y[i] = 2.0 * g(rng);
    }
    const SpatialDataset d(locs, y);
    const CovParams p{g(rng), 0.5 + 4.0 * u(rng), 0.05 + u(rng), 0.05 + 0.3 * u(rng)};
    const auto ordered = d.subset(order_reference(d, {}));
    const auto table = build_neighbor_table_training(ordered, n - 1);
    const double approx = vecchia_loglik(ordered, table, p);
    const double exact = oracle::mvn_logpdf(y, p.mu, oracle::exp_cov_y(locs, p.sigma2, p.tau2, p.rho));
    worst = std::max(worst, std::fabs(approx - exact));
  }
  return {worst <= 1e-8, fmt("20 datasets, n <= 200, max |difference| %.2e", worst)};
}

// ---------------------------------------------------------------- 3

Verdict kriging_oracle() {
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(u(rng) * 47);
    std::vector<Location> locs(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      locs[i] = {u(rng), u(rng)};
      y[i] = 3.0 * g(rng);
    }
    const SpatialDataset ref(locs, y);
    const CovParams p{g(rng), 0.5 + 4.0 * u(rng), u(rng), 0.05 + 0.3 * u(rng)};
    const std::vector<Location> q{{u(rng), u(rng)}};
    const auto table = build_neighbor_table_prediction(ref, q, n);
    const double pred = krige_all(ref, table, p)[0];
    const double dense = oracle::conditional_mean(q[0], locs, y, p.mu, p.sigma2, p.tau2, p.rho);
    worst = std::max(worst, std::fabs(pred - dense));
  }
  return {worst <= 1e-8, fmt("20 instances, n <= 50, max |difference| %.2e", worst)};
}

// ---------------------------------------------------------------- 4

Verdict quantile_property() {
  std::mt19937_64 rng(79);
  std::exponential_distribution<double> e(0.5);
  std::normal_distribution<double> g;
  const std::size_t n = 301;
  std::vector<double> y(n);
  for (double& v : y) v = e(rng) + 0.3 * g(rng);
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  const Matrix ones(n, 1, 1.0);

  bool all = true;
  std::string detail;
  for (double gamma : {0.25, 0.5, 0.75, 0.95}) {
    const LossSpec loss = LossSpec::check(gamma);
    MlpModel m({1, 1});
    m.layer(0).weights[0] = 0.0;
    AdamState state = AdamState::for_model(m);
    double lr = 0.5;
    for (int step = 0; step < 30000; ++step) {
      adam_step(state, m, gradients(m, ones, y, loss), lr);
      lr *= 0.9996;
    }
    const double c = forward(m, Matrix(1, 1, 1.0))[0];

    // brute force over candidate constants: every data value
    std::size_t best = 0;
    double best_loss = INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (double v : y) s += loss_value(sorted[k], v, loss);
      if (s < best_loss) {
        best_loss = s;
        best = k;
      }
    }
    const double lo = sorted[best == 0 ? 0 : best - 1];
    const double hi = sorted[std::min(best + 1, n - 1)];
    const bool ok = c >= lo && c <= hi;
    all = all && ok;
    detail += fmt("gamma %.2f: fitted %.5f, scan minimizer %.5f, bracket [%.5f, %.5f]%s; ", gamma, c,
                  sorted[best], lo, hi, ok ? "" : " OUTSIDE");
  }
  return {all, detail};
}

// ---------------------------------------------------------------- shared config

ExperimentConfig bench_config(const std::string& generator, std::size_t n, std::size_t reps,
                              std::vector<FeatureKind> features, std::vector<LossSpec> losses) {
  ExperimentConfig c;
  c.generator = parse_generator(generator);
  c.n = n;
  c.replications = reps;
  c.features = std::move(features);
  c.losses = std::move(losses);
  c.seed = 2024;
  return c;
}

// one-sided sign test: P(X >= wins) under Binomial(trials, 1/2)
double sign_test_p(std::size_t wins, std::size_t trials) {
  double p = 0.0;
  for (std::size_t k = wins; k <= trials; ++k) {
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i) c = c * static_cast<double>(trials - i) / static_cast<double>(i + 1);
    p += c * std::pow(0.5, static_cast<double>(trials));
  }
  return p;
}

// ---------------------------------------------------------------- 5

Verdict transformed_gp_ordering() {
  const auto cfg = bench_config("transformed-gp", 1000, 20, {FeatureKind::KrigingOnly}, {LossSpec::squared()});
  const auto r = run_experiment(cfg, log_progress);
  const auto& net = metric_row(r, "4N(kriging)", "mse");
  const auto& base = metric_row(r, kBaselineLabel, "mse");
  std::size_t wins = 0, trials = 0;
  for (std::size_t i = 0; i < net.values.size(); ++i) {
    if (std::isnan(net.values[i]) || net.values[i] == base.values[i]) continue;
    ++trials;
    wins += net.values[i] < base.values[i];
  }
  const double p = sign_test_p(wins, trials);
  const bool pass = r.valid && net.mean <= 0.95 * base.mean && p < 0.05;
  return {pass, fmt("4N(kriging) MSE %.4f (se %.4f), baseline %.4f (se %.4f), ratio %.3f (need <= 0.95); "
                    "4N better in %zu of %zu, sign-test p %.3g",
                    net.mean, net.stderr_, base.mean, base.stderr_, net.mean / base.mean, wins, trials, p)};
}

// ---------------------------------------------------------------- 6

Verdict gp_ordering() {
  const auto cfg = bench_config(
      "gp", 1000, 20, {FeatureKind::KrigingOnly, FeatureKind::Nonparametric, FeatureKind::KrigingPlusNP},
      {LossSpec::squared()});
  const auto r = run_experiment(cfg, log_progress);
  const double base = metric_mean(r, kBaselineLabel, "mse");
  bool pass = r.valid;
  std::string detail = fmt("baseline MSE %.4f", base);
  for (auto k : cfg.features) {
    const double v = metric_mean(r, method_label(k), "mse");
    pass = pass && base <= 1.02 * v;
    detail += fmt(", %s %.4f", method_label(k).c_str(), v);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 7

Verdict ratio_trend() {
  double ratio[2] = {};
  std::string detail;
  bool valid = true;
  const std::size_t sizes[2] = {1000, 10000};
  for (int s = 0; s < 2; ++s) {
    auto cfg = bench_config("gp", sizes[s], 10, {FeatureKind::KrigingPlusNP}, {LossSpec::squared()});
    const auto r = run_experiment(cfg, log_progress);
    valid = valid && r.valid;
    const auto& net = metric_row(r, "4N(kriging-np)", "mse");
    const auto& base = metric_row(r, kBaselineLabel, "mse");
    double sum = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < net.values.size(); ++i)
      if (!std::isnan(net.values[i])) {
        sum += net.values[i] / base.values[i];
        ++k;
      }
    ratio[s] = sum / static_cast<double>(k);
    detail += fmt("n=%zu: mean ratio %.4f (4N %.4f, baseline %.4f); ", sizes[s], ratio[s], net.mean, base.mean);
  }
  return {valid && ratio[1] <= ratio[0] + 0.02, detail};
}

// ---------------------------------------------------------------- 8

Verdict potts_quantile() {
  const LossSpec q = LossSpec::check(0.25);
  const auto cfg = bench_config("potts", 1000, 20, {FeatureKind::KrigingOnly, FeatureKind::KrigingPlusNP}, {q});
  const auto r = run_experiment(cfg, log_progress);
  const std::string metric = metric_label(q);
  const double k = metric_mean(r, "4N(kriging)", metric);
  const double knp = metric_mean(r, "4N(kriging-np)", metric);
  const double c = metric_mean(r, kConstantQuantileLabel, metric);
  const bool pass = r.valid && knp <= 1.05 * k && k <= 0.9 * c && knp <= 0.9 * c;
  return {pass, fmt("check loss: 4N(kriging-np) %.4f, 4N(kriging) %.4f (ratio %.3f, need <= 1.05), "
                    "constant-quantile %.4f (4N ratios %.3f and %.3f, need <= 0.90)",
                    knp, k, knp / k, c, k / c, knp / c)};
}

// ---------------------------------------------------------------- 9

Verdict importance_shape() {
  auto cfg = bench_config("gp", 1000, 10, {FeatureKind::Nonparametric}, {LossSpec::squared()});
  cfg.importance = true;
  const auto r = run_experiment(cfg, log_progress);
  double worst_sum = 0.0;
  for (const auto& rep : r.replications)
    for (const auto& rec : rep.importance) {
      double s = 0.0;
      for (const auto& g : rec.groups) s += g.importance;
      worst_sum = std::max(worst_sum, std::fabs(s - 1.0));
    }
  if (r.mean_importance.size() != 1) return {false, "missing averaged importance"};
  const auto& groups = r.mean_importance[0].groups;
  double first = NAN, tenth = NAN, total = 0.0;
  std::string profile;
  for (const auto& g : groups) {
    total += g.importance;
    if (g.group == "neighbor_1") first = g.importance;
    if (g.group == "neighbor_10") tenth = g.importance;
    profile += fmt("%s=%.4f ", g.group.c_str(), g.importance);
  }
  const bool pass = r.valid && worst_sum <= 1e-10 && std::fabs(total - 1.0) <= 1e-10 && first > tenth;
  return {pass, fmt("max |sum - 1| per replication %.1e; neighbor_1 %.4f vs neighbor_10 %.4f; ", worst_sum,
                    first, tenth) +
                    profile};
}

// ---------------------------------------------------------------- 10

Verdict interval_coverage_check() {
  double cov[2] = {};
  bool valid = true;
  const char* gens[2] = {"gp", "transformed-gp"};
  for (int s = 0; s < 2; ++s) {
    auto cfg = bench_config(gens[s], 1000, 10, {FeatureKind::KrigingPlusNP}, {});
    cfg.intervals = true;
    const auto r = run_experiment(cfg, log_progress);
    valid = valid && r.valid;
    cov[s] = metric_mean(r, "4N(kriging-np)", kCoverageLabel);
  }
  const bool pass = valid && cov[0] >= 0.90 && cov[0] <= 1.00 && cov[1] >= 0.88 && cov[1] <= 0.99;
  return {pass, fmt("GP coverage %.4f (need [0.90, 1.00]), transformed GP %.4f (need [0.88, 0.99])", cov[0],
                    cov[1])};
}

// ---------------------------------------------------------------- 11

Verdict simulator_checks() {
  std::string detail;
  // The band applies to the sample variance pooled over 20 seeds; single
  // fields have sd near 1.3 around 6 - E C(|s - t|).
  std::mt19937_64 pairs(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double ec = 0.0;
  for (int i = 0; i < 400000; ++i) ec += 5.0 * std::exp(-std::hypot(u(pairs) - u(pairs), u(pairs) - u(pairs)) / 0.16);
  const double expected = 6.0 - ec / 400000.0;
  std::size_t in_band = 0;
  double total = 0.0, total_sq = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = sim_gp(5000, {0, 5, 1, 0.16}, derive_seed(31, seed));
    const auto& v = d.values();
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / 5000.0;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double var = ss / 4999.0;
    total += var;
    total_sq += var * var;
    in_band += var >= 4.2 && var <= 7.8;
  }
  const double pooled = total / 20.0;
  const double sd = std::sqrt((total_sq - 20.0 * pooled * pooled) / 19.0);
  const bool gp_ok = pooled >= 4.2 && pooled <= 7.8 && std::fabs(pooled - expected) < 3.0 * sd / std::sqrt(20.0);
  detail += fmt("GP pooled variance %.3f over 20 seeds (band [4.2, 7.8], expected %.3f, per-field sd %.3f, "
                "%zu/20 single fields in band); ",
                pooled, expected, sd, in_band);

  const std::size_t n = 10000;
  const auto potts = sim_potts(n, 8, 0.0, 10, 32);
  std::vector<double> freq(8, 0.0);
  for (int l : potts.labels) freq[static_cast<std::size_t>(l - 1)] += 1.0 / static_cast<double>(n);
  const double band = 3.0 * std::sqrt(0.125 * 0.875 / static_cast<double>(n));
  double worst = 0.0;
  for (double f : freq) worst = std::max(worst, std::fabs(f - 0.125));
  const bool potts_ok = worst <= band;
  detail += fmt("Potts beta=0 max |freq - 1/8| %.4f (band %.4f); ", worst, band);

  Rng rng(33);
  std::size_t below = 0, sites = 0;
  for (int f = 0; f < 2000; ++f) {
    const auto locs = uniform_locations(5, rng);
    for (double z : sim_maxstable_unit_at(locs, 0.5, rng)) {
      below += z <= 1.0;
      ++sites;
    }
  }
  const double p = static_cast<double>(below) / static_cast<double>(sites);
  const bool ms_ok = std::fabs(p - std::exp(-1.0)) <= 0.02;
  detail += fmt("max-stable P(Z <= 1) %.4f over %zu sites (target %.4f +- 0.02)", p, sites, std::exp(-1.0));
  return {gp_ok && potts_ok && ms_ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"Vecchia exactness under full conditioning", vecchia_exactness},
      {"Kriging matches the dense conditional mean", kriging_oracle},
      {"bias-only check-loss model finds the quantile", quantile_property},
      {"transformed GP: 4N(kriging) beats the Kriging baseline", transformed_gp_ordering},
      {"GP: Kriging baseline at least as good as every 4N variant", gp_ordering},
      {"GP: 4N/baseline MSE ratio non-increasing from n=1000 to n=10000", ratio_trend},
      {"Potts quantile ordering", potts_quantile},
      {"Garson importance normalization and neighbor decay", importance_shape},
      {"95% interval coverage", interval_coverage_check},
      {"simulator statistical checks", simulator_checks},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%.1f s)\n       %s\n", v.pass ? "PASS" : "FAIL", id,
                criteria[i].first, secs, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
