#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fourn/csv_io.hpp"
#include "fourn/error.hpp"
#include "fourn/experiment.hpp"
#include "fourn/importance.hpp"
#include "fourn/kernels/kernels.hpp"
#include "fourn/model_io.hpp"
#include "fourn/pipeline.hpp"
#include "fourn/simulate.hpp"

namespace fs = std::filesystem;
using namespace fourn;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::size_t neighbors = 10;
  std::string features = "kriging-np";
  std::string loss = "mse";
  std::string config;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--neighbors", c.neighbors, "Neighbor count m")->check(CLI::PositiveNumber);
  cmd->add_option("--features", c.features, "kriging | np | kriging-np");
  cmd->add_option("--loss", c.loss, "mse | quantile:<gamma>");
  cmd->add_option("--config", c.config, "JSON experiment config");
  cmd->add_option("--out", c.out, "Output directory");
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

ExperimentConfig base_config(const Common& c) {
  return c.config.empty() ? ExperimentConfig{} : load_config(c.config);
}

struct SimulateArgs {
  std::string generator = "gp";
  std::size_t n = 1000;
  std::size_t sequential = 0;
  std::size_t sweeps = 500;
};

int run_simulate(const Common& c, const SimulateArgs& a) {
  ExperimentConfig cfg = base_config(c);
  GeneratorSpec gen = parse_generator(a.generator);
  gen.gp = cfg.generator.gp;
  gen.maxstable_rho = cfg.generator.maxstable_rho;
  gen.potts_beta = cfg.generator.potts_beta;
  gen.potts_labels = cfg.generator.potts_labels;
  gen.potts_sweeps = a.sweeps;
  if (gen.kind == GeneratorKind::File) throw ConfigError("simulate needs a synthetic generator");
  const fs::path path = out_dir(c) / "data.csv";
  if (gen.kind == GeneratorKind::Potts) {
    const PottsSample s = sim_potts(a.n, gen.potts_labels, gen.potts_beta, gen.potts_sweeps, c.seed);
    save_csv(path, s.data, s.labels);
  } else if (a.sequential > 0 && gen.kind != GeneratorKind::MaxStable) {
    SpatialDataset d = sim_gp_sequential(a.n, gen.gp, a.sequential, c.seed);
    if (gen.kind == GeneratorKind::TransformedGp) {
      std::vector<double> y = d.values();
      for (double& v : y) v = transform_gp(v);
      d = d.with_values(std::move(y));
    }
    save_csv(path, d);
  } else {
    save_csv(path, generate(gen, a.n, c.seed));
  }
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int run_fit(const Common& c, const std::string& data_path, std::size_t budget) {
  ExperimentConfig cfg = base_config(c);
  cfg.train.seed = c.seed;
  cfg.train.validate();
  validate_architecture(cfg.hidden);
  const FeatureSpec spec{parse_feature_kind(c.features), c.neighbors};
  const LossSpec loss = parse_loss(c.loss);
  const SpatialDataset data = load_csv(data_path);
  const PreparedReference ref = prepare_reference(data, c.neighbors, cfg.ordering, budget,
                                                  std::nullopt, cfg.training_neighbors);
  std::printf("covariance fit: mu=%.6g sigma2=%.6g tau2=%.6g rho=%.6g loglik=%.6f%s\n",
              ref.fit.params.mu, ref.fit.params.sigma2, ref.fit.params.tau2, ref.fit.params.rho,
              ref.fit.loglik, ref.fit.converged ? "" : " (not converged)");
  const ModelFit fit = fit_model(ref, spec, cfg.hidden, cfg.train, loss);
  std::printf("network: %zu epochs, best epoch %zu\n", fit.training.epochs_run, fit.training.best_epoch);
  const fs::path path = out_dir(c) / "model.json";
  save_model(path, fit.model);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int run_predict(const Common& c, const std::string& model_path, const std::string& data_path,
                const std::string& query_path) {
  const TrainedModel model = load_model(model_path);
  const SpatialDataset data = load_csv(data_path);
  const QueryTable q = load_query_csv(query_path);
  const auto pred = predict_sites(model, data, q.locations);
  const fs::path path = out_dir(c) / "predictions.csv";
  auto out = open_out(path);
  write_predictions_csv(out, q.locations, q.values, pred);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int run_importance(const Common& c, const std::string& model_path) {
  const TrainedModel model = load_model(model_path);
  const auto groups = aggregate_importance(garson_importance(model.network), model.layout);
  write_importance_csv(std::cout, groups);
  const fs::path path = out_dir(c) / "importance.csv";
  auto out = open_out(path);
  write_importance_csv(out, groups);
  return 0;
}

struct BenchArgs {
  std::optional<std::string> generator;
  std::optional<std::size_t> n;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> threads;
  std::optional<std::string> training_neighbors;
  bool intervals = false;
  bool importance = false;
};

int run_bench(const Common& c, const BenchArgs& a, const CLI::App& cmd) {
  ExperimentConfig cfg = base_config(c);
  if (cmd.count("--seed")) cfg.seed = c.seed;
  if (cmd.count("--neighbors")) cfg.m = c.neighbors;
  if (cmd.count("--features")) cfg.features = {parse_feature_kind(c.features)};
  if (cmd.count("--loss")) cfg.losses = {parse_loss(c.loss)};
  if (a.generator) {
    const CovParams gp = cfg.generator.gp;
    cfg.generator = parse_generator(*a.generator);
    cfg.generator.gp = gp;
  }
  if (a.n) cfg.n = *a.n;
  if (a.replications) cfg.replications = *a.replications;
  if (a.threads) cfg.threads = *a.threads;
  if (a.training_neighbors) cfg.training_neighbors = parse_training_neighbors(*a.training_neighbors);
  if (a.intervals) cfg.intervals = true;
  if (a.importance) cfg.importance = true;
  cfg.validate();

  const MetricsReport report =
      run_experiment(cfg, [](const std::string& msg) { std::cerr << msg << '\n'; });
  const fs::path dir = out_dir(c);
  {
    auto out = open_out(dir / "metrics.csv");
    write_metrics_csv(out, report);
  }
  for (const auto& row : report.rows)
    std::printf("%-22s %-14s %12.6g (%.3g)\n", row.method.c_str(), row.metric.c_str(), row.mean,
                row.stderr_);
  if (!report.mean_importance.empty()) {
    auto out = open_out(dir / "importance.csv");
    out << "method,loss,group,importance\n";
    for (const auto& rec : report.mean_importance)
      for (const auto& g : rec.groups)
        out << rec.method << ',' << rec.loss << ',' << g.group << ',' << format_double(g.importance) << '\n';
  }
  std::cout << "wrote " << (dir / "metrics.csv").string() << '\n';
  if (!report.valid) {
    std::cerr << "error: " << report.failures << " of " << cfg.replications
              << " replications failed; report is invalid\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"4N nearest-neighbor neural network spatial prediction"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "Force kernel set: scalar | avx2");

  Common common;
  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a benchmark dataset to data.csv");
  add_common(simulate, common);
  simulate->add_option("--generator", sim.generator, "gp | transformed-gp | maxstable | potts");
  simulate->add_option("-n,--n", sim.n, "Number of sites")->check(CLI::PositiveNumber);
  simulate->add_option("--sequential", sim.sequential,
                       "Use nearest-neighbor sequential GP simulation with this many neighbors");
  simulate->add_option("--sweeps", sim.sweeps, "Gibbs sweeps for potts");

  std::string data_path, model_path = "model.json", query_path;
  std::size_t budget = kDefaultFitBudget;
  auto* fit = app.add_subcommand("fit", "Fit covariance parameters and train a 4N model");
  add_common(fit, common);
  fit->add_option("--data", data_path, "Training CSV x,y,value")->required()->check(CLI::ExistingFile);
  fit->add_option("--budget", budget, "Likelihood evaluation budget")->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "Predict at query sites with a saved model");
  add_common(predict, common);
  predict->add_option("--model", model_path, "Model file")->check(CLI::ExistingFile);
  predict->add_option("--data", data_path, "Reference CSV used in training")->required()->check(CLI::ExistingFile);
  predict->add_option("--queries", query_path, "CSV x,y[,value]")->required()->check(CLI::ExistingFile);

  auto* importance = app.add_subcommand("importance", "Garson importance of a saved model");
  add_common(importance, common);
  importance->add_option("--model", model_path, "Model file")->check(CLI::ExistingFile);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Run a replicated benchmark experiment");
  add_common(bench, common);
  bench->add_option("--generator", bench_args.generator, "gp | transformed-gp | maxstable | potts | file:<path>");
  bench->add_option("-n,--n", bench_args.n, "Sites per replication");
  bench->add_option("--replications", bench_args.replications, "Replication count");
  bench->add_option("--threads", bench_args.threads, "Worker threads (0: all cores)");
  bench->add_option("--training-neighbors", bench_args.training_neighbors,
                    "Training feature neighbors: others | predecessors");
  bench->add_flag("--intervals", bench_args.intervals, "Also score 95% quantile intervals");
  bench->add_flag("--importance", bench_args.importance, "Write averaged Garson importance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (!kernels.empty() && !kernels::use(kernels)) throw ConfigError("kernel set '" + kernels + "' unavailable");
    if (*simulate) return run_simulate(common, sim);
    if (*fit) return run_fit(common, data_path, budget);
    if (*predict) return run_predict(common, model_path, data_path, query_path);
    if (*importance) return run_importance(common, model_path);
    if (*bench) return run_bench(common, bench_args, *bench);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
