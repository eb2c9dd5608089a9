#include "fourn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "fourn/csv_io.hpp"
#include "fourn/error.hpp"
#include "fourn/metrics.hpp"
#include "fourn/pipeline.hpp"

namespace fourn {

GeneratorSpec parse_generator(const std::string& text) {
  GeneratorSpec g;
  if (text == "gp") g.kind = GeneratorKind::Gp;
  else if (text == "transformed-gp") g.kind = GeneratorKind::TransformedGp;
  else if (text == "maxstable") g.kind = GeneratorKind::MaxStable;
  else if (text == "potts") g.kind = GeneratorKind::Potts;
  else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    g.kind = GeneratorKind::File;
    g.path = text.substr(5);
  } else {
    throw ConfigError("unknown generator '" + text + "'");
  }
  return g;
}

std::string to_string(const GeneratorSpec& gen) {
  switch (gen.kind) {
    case GeneratorKind::Gp: return "gp";
    case GeneratorKind::TransformedGp: return "transformed-gp";
    case GeneratorKind::MaxStable: return "maxstable";
    case GeneratorKind::Potts: return "potts";
    case GeneratorKind::File: return "file:" + gen.path.string();
  }
  return "gp";
}

SpatialDataset generate(const GeneratorSpec& gen, std::size_t n, std::uint64_t seed) {
  switch (gen.kind) {
    case GeneratorKind::Gp:
      return sim_gp(n, gen.gp, seed);
    case GeneratorKind::TransformedGp: {
      SpatialDataset d = sim_gp(n, gen.gp, seed);
      std::vector<double> y = d.values();
      for (double& v : y) v = transform_gp(v);
      return d.with_values(std::move(y));
    }
    case GeneratorKind::MaxStable:
      return sim_maxstable(n, gen.maxstable_rho, gen.gev, seed);
    case GeneratorKind::Potts:
      return sim_potts(n, gen.potts_labels, gen.potts_beta, gen.potts_sweeps, seed).data;
    case GeneratorKind::File:
      return load_csv(gen.path);
  }
  throw Error("unknown generator");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (m < 1) fail("m must be at least 1");
  if (replications < 1) fail("replications must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("test_fraction must lie in (0, 1)");
  if (features.empty()) fail("at least one feature set is required");
  if (losses.empty() && !intervals) fail("at least one loss is required");
  if (fit_budget < 1) fail("fit_budget must be at least 1");
  try {
    for (const auto& l : losses) l.validate();
    train.validate();
    validate_architecture(hidden);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const CovParams& gp = generator.gp;
  if (!(std::isfinite(gp.mu) && gp.sigma2 >= 0.0 && gp.tau2 >= 0.0 && gp.rho > 0.0 &&
        std::isfinite(gp.sigma2) && std::isfinite(gp.tau2) && std::isfinite(gp.rho)))
    fail("gp_params need finite mu, sigma2 >= 0, tau2 >= 0 and rho > 0");
  if (hidden.empty() || hidden.front() < 100 || hidden.front() > 500)
    fail("first hidden layer must have 100 to 500 units");
  if (generator.kind == GeneratorKind::File) {
    if (!std::filesystem::exists(generator.path))
      fail("data file " + generator.path.string() + " does not exist");
  } else {
    if (n < 2 * (m + 20)) fail("n is too small for the requested neighbor count");
    if (generator.kind == GeneratorKind::MaxStable && n > 10000)
      fail("maxstable generator supports n <= 10000");
    if ((generator.kind == GeneratorKind::Gp || generator.kind == GeneratorKind::TransformedGp) &&
        n > kDenseSimulationCap)
      fail("gp generator supports n <= " + std::to_string(kDenseSimulationCap));
    if (generator.kind == GeneratorKind::MaxStable && !(generator.maxstable_rho > 0.0))
      fail("maxstable_rho must be positive");
    if (generator.kind == GeneratorKind::Potts && generator.potts_labels < 2)
      fail("potts_labels must be at least 2");
  }
}

// ---- JSON config -----------------------------------------------------------

namespace {

using nlohmann::json;

std::string ordering_text(OrderingKind k) {
  switch (k) {
    case OrderingKind::Coordinate: return "coordinate";
    case OrderingKind::Random: return "random";
    case OrderingKind::Identity: return "identity";
  }
  return "coordinate";
}

OrderingKind ordering_from_text(const std::string& s) {
  if (s == "coordinate") return OrderingKind::Coordinate;
  if (s == "random") return OrderingKind::Random;
  if (s == "identity") return OrderingKind::Identity;
  throw ConfigError("unknown ordering '" + s + "'");
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [k, _] : obj.items())
    if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end())
      throw ConfigError(std::string("unknown key '") + k + "' in " + where);
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"generator", "n", "replications", "m", "features", "losses", "intervals",
                    "importance", "hidden", "train", "test_fraction", "seed", "ordering", "training_neighbors",
                    "fit_budget", "threads", "gp_params", "maxstable_rho", "potts"},
                   "config");
    if (j.contains("generator")) {
      const GeneratorSpec base = c.generator;
      c.generator = parse_generator(j["generator"].get<std::string>());
      c.generator.gp = base.gp;
    }
    if (j.contains("n")) c.n = j["n"].get<std::size_t>();
    if (j.contains("replications")) c.replications = j["replications"].get<std::size_t>();
    if (j.contains("m")) c.m = j["m"].get<std::size_t>();
    if (j.contains("features")) {
      c.features.clear();
      for (const auto& f : j["features"]) c.features.push_back(parse_feature_kind(f.get<std::string>()));
    }
    if (j.contains("losses")) {
      c.losses.clear();
      for (const auto& l : j["losses"]) c.losses.push_back(parse_loss(l.get<std::string>()));
    }
    if (j.contains("intervals")) c.intervals = j["intervals"].get<bool>();
    if (j.contains("importance")) c.importance = j["importance"].get<bool>();
    if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<std::size_t>>();
    if (j.contains("train")) {
      const json& t = j["train"];
      reject_unknown(t,
                     {"learning_rate", "batch_size", "epochs", "dropout_rate", "patience",
                      "min_delta", "validation_fraction"},
                     "train");
      if (t.contains("learning_rate")) c.train.learning_rate = t["learning_rate"].get<double>();
      if (t.contains("batch_size")) c.train.batch_size = t["batch_size"].get<std::size_t>();
      if (t.contains("epochs")) c.train.epochs = t["epochs"].get<std::size_t>();
      if (t.contains("dropout_rate")) c.train.dropout_rate = t["dropout_rate"].get<double>();
      if (t.contains("patience")) c.train.patience = t["patience"].get<std::size_t>();
      if (t.contains("min_delta")) c.train.min_delta = t["min_delta"].get<double>();
      if (t.contains("validation_fraction"))
        c.train.validation_fraction = t["validation_fraction"].get<double>();
    }
    if (j.contains("test_fraction")) c.test_fraction = j["test_fraction"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("ordering")) c.ordering.kind = ordering_from_text(j["ordering"].get<std::string>());
    if (j.contains("training_neighbors"))
      c.training_neighbors = parse_training_neighbors(j["training_neighbors"].get<std::string>());
    if (j.contains("fit_budget")) c.fit_budget = j["fit_budget"].get<std::size_t>();
    if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
    if (j.contains("gp_params")) {
      const json& g = j["gp_params"];
      reject_unknown(g, {"mu", "sigma2", "tau2", "rho"}, "gp_params");
      if (g.contains("mu")) c.generator.gp.mu = g["mu"].get<double>();
      if (g.contains("sigma2")) c.generator.gp.sigma2 = g["sigma2"].get<double>();
      if (g.contains("tau2")) c.generator.gp.tau2 = g["tau2"].get<double>();
      if (g.contains("rho")) c.generator.gp.rho = g["rho"].get<double>();
    }
    if (j.contains("maxstable_rho")) c.generator.maxstable_rho = j["maxstable_rho"].get<double>();
    if (j.contains("potts")) {
      const json& p = j["potts"];
      reject_unknown(p, {"labels", "beta", "sweeps"}, "potts");
      if (p.contains("labels")) c.generator.potts_labels = p["labels"].get<int>();
      if (p.contains("beta")) c.generator.potts_beta = p["beta"].get<double>();
      if (p.contains("sweeps")) c.generator.potts_sweeps = p["sweeps"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
  json features = json::array();
  for (auto f : c.features) features.push_back(std::string(to_string(f)));
  json losses = json::array();
  for (const auto& l : c.losses) losses.push_back(to_string(l));
  const json j = {
      {"generator", to_string(c.generator)},
      {"n", c.n},
      {"replications", c.replications},
      {"m", c.m},
      {"features", features},
      {"losses", losses},
      {"intervals", c.intervals},
      {"importance", c.importance},
      {"hidden", c.hidden},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"dropout_rate", c.train.dropout_rate},
        {"patience", c.train.patience},
        {"min_delta", c.train.min_delta},
        {"validation_fraction", c.train.validation_fraction}}},
      {"test_fraction", c.test_fraction},
      {"seed", c.seed},
      {"ordering", ordering_text(c.ordering.kind)},
      {"training_neighbors", std::string(to_string(c.training_neighbors))},
      {"fit_budget", c.fit_budget},
      {"threads", c.threads},
      {"gp_params",
       {{"mu", c.generator.gp.mu},
        {"sigma2", c.generator.gp.sigma2},
        {"tau2", c.generator.gp.tau2},
        {"rho", c.generator.gp.rho}}},
      {"maxstable_rho", c.generator.maxstable_rho},
      {"potts",
       {{"labels", c.generator.potts_labels},
        {"beta", c.generator.potts_beta},
        {"sweeps", c.generator.potts_sweeps}}},
  };
  return j.dump(2);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

// ---- one replication -------------------------------------------------------

TrainTestSplit split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_test = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n))));
  TrainTestSplit s;
  s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::string method_label(FeatureKind kind) { return "4N(" + std::string(to_string(kind)) + ")"; }

std::string metric_label(const LossSpec& loss) {
  if (loss.kind == LossKind::Squared) return "mse";
  char buf[32];
  std::snprintf(buf, sizeof buf, "check:%g", loss.gamma);
  return buf;
}

namespace {

// Sub-stream constants inside a replication.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kOrderStream = 3;
constexpr std::uint64_t kTrainStream = 100;

double score(const LossSpec& loss, std::span<const double> truth, std::span<const double> pred) {
  return loss.kind == LossKind::Squared ? mse(truth, pred) : mean_check_loss(truth, pred, loss.gamma);
}

// Smallest minimizer of the summed check loss over constants.
double empirical_quantile(std::vector<double> y, double gamma) {
  std::sort(y.begin(), y.end());
  const double pos = std::ceil(gamma * static_cast<double>(y.size()));
  const auto k = static_cast<std::size_t>(std::max(pos, 1.0)) - 1;
  return y[std::min(k, y.size() - 1)];
}

}  // namespace

ReplicationResult run_replication(const ExperimentConfig& config, std::size_t index) {
  ReplicationResult out;
  out.index = index;
  out.seed = derive_seed(config.seed, index);
  try {
    const SpatialDataset data = generate(config.generator, config.n, derive_seed(out.seed, kDataStream));

    const TrainTestSplit split =
        split_indices(data.size(), config.test_fraction, derive_seed(out.seed, kSplitStream));
    if (split.test.empty() || split.train.size() <= config.m)
      throw Error("train/test split leaves too few sites");
    const SpatialDataset train = data.subset(split.train);
    const SpatialDataset test = data.subset(split.test);

    OrderingScheme ordering = config.ordering;
    if (ordering.kind == OrderingKind::Random) ordering.seed = derive_seed(out.seed, kOrderStream);
    const PreparedReference ref = prepare_reference(train, config.m, ordering, config.fit_budget, std::nullopt,
                                                   config.training_neighbors);
    const PreparedQueries q = prepare_queries(ref.ordered, test.locations(), config.m, ref.fit.params);
    const auto& truth = test.values();

    out.metrics.push_back({kBaselineLabel, "mse", mse(truth, q.kriging)});
    for (const auto& loss : config.losses) {
      if (loss.kind != LossKind::Check) continue;
      out.metrics.push_back({kBaselineLabel, metric_label(loss), score(loss, truth, q.kriging)});
      const std::vector<double> constant(truth.size(), empirical_quantile(train.values(), loss.gamma));
      out.metrics.push_back({kConstantQuantileLabel, metric_label(loss), score(loss, truth, constant)});
    }

    std::uint64_t stream = kTrainStream;
    auto fit_and_predict = [&](const FeatureSpec& spec, const LossSpec& loss) {
      TrainConfig tc = config.train;
      tc.seed = derive_seed(out.seed, stream++);
      ModelFit fit = fit_model(ref, spec, config.hidden, tc, loss);
      if (config.importance) {
        const auto imp = garson_importance(fit.model.network);
        out.importance.push_back(
            {method_label(spec.kind), to_string(loss), aggregate_importance(imp, fit.model.layout)});
      }
      return predict_model(fit.model, ref, q);
    };

    for (FeatureKind kind : config.features) {
      const FeatureSpec spec{kind, config.m};
      for (const auto& loss : config.losses)
        out.metrics.push_back({method_label(kind), metric_label(loss),
                               score(loss, truth, fit_and_predict(spec, loss))});
      if (config.intervals) {
        const auto lower = fit_and_predict(spec, LossSpec::check(0.025));
        const auto upper = fit_and_predict(spec, LossSpec::check(0.975));
        out.metrics.push_back({method_label(kind), kCoverageLabel, interval_coverage(truth, lower, upper)});
      }
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    out.metrics.clear();
    out.importance.clear();
  }
  return out;
}

// ---- aggregation -----------------------------------------------------------

const MetricRow* MetricsReport::find(const std::string& method, const std::string& metric) const {
  for (const auto& r : rows)
    if (r.method == method && r.metric == metric) return &r;
  return nullptr;
}

MetricsReport aggregate(std::vector<ReplicationResult> results) {
  MetricsReport report;
  const std::size_t reps = results.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t r = 0; r < reps; ++r) {
    const auto& res = results[r];
    if (!res.ok) {
      ++report.failures;
      continue;
    }
    for (const auto& mv : res.metrics) {
      auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const MetricRow& row) {
        return row.method == mv.method && row.metric == mv.metric;
      });
      if (it == report.rows.end()) {
        report.rows.push_back({mv.method, mv.metric, std::vector<double>(reps, nan), 0.0, 0.0});
        it = std::prev(report.rows.end());
      }
      it->values[r] = mv.value;
    }
  }
  for (auto& row : report.rows) {
    std::size_t k = 0;
    double sum = 0.0;
    for (double v : row.values)
      if (!std::isnan(v)) {
        sum += v;
        ++k;
      }
    row.mean = k ? sum / static_cast<double>(k) : nan;
    double ss = 0.0;
    for (double v : row.values)
      if (!std::isnan(v)) ss += (v - row.mean) * (v - row.mean);
    row.stderr_ = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k)) : nan;
  }

  std::map<std::pair<std::string, std::string>, std::pair<std::vector<ImportanceGroup>, std::size_t>> acc;
  for (const auto& res : results) {
    if (!res.ok) continue;
    for (const auto& rec : res.importance) {
      auto& [groups, count] = acc[{rec.method, rec.loss}];
      if (groups.empty()) {
        groups = rec.groups;
      } else {
        if (groups.size() != rec.groups.size()) throw Error("importance layouts differ across replications");
        for (std::size_t g = 0; g < groups.size(); ++g) groups[g].importance += rec.groups[g].importance;
      }
      ++count;
    }
  }
  for (auto& [key, val] : acc) {
    for (auto& g : val.first) g.importance /= static_cast<double>(val.second);
    report.mean_importance.push_back({key.first, key.second, std::move(val.first)});
  }

  report.valid = static_cast<double>(report.failures) <= 0.1 * static_cast<double>(reps);
  report.replications = std::move(results);
  return report;
}

MetricsReport run_experiment(const ExperimentConfig& config, const LogSink& log) {
  config.validate();
  std::vector<ReplicationResult> results(config.replications);
  std::size_t workers = config.threads ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, config.replications);

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto work = [&] {
    for (std::size_t r = next++; r < config.replications; r = next++) {
      results[r] = run_replication(config, r);
      if (log) {
        std::lock_guard lock(log_mutex);
        log(results[r].ok ? "replication " + std::to_string(r) + " done"
                          : "replication " + std::to_string(r) + " failed: " + results[r].error);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return aggregate(std::move(results));
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  const std::size_t reps = report.replications.size();
  out << "method,metric,mean,stderr";
  for (std::size_t r = 0; r < reps; ++r) out << ",rep" << (r + 1);
  out << '\n';
  for (const auto& row : report.rows) {
    out << row.method << ',' << row.metric << ',' << format_double(row.mean) << ','
        << format_double(row.stderr_);
    for (double v : row.values) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace fourn
