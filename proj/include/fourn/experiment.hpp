#pragma once

// Replicated benchmark runs: simulate or load data, split, fit, train and
// score 4N against the Kriging baseline.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fourn/covariance.hpp"
#include "fourn/features.hpp"
#include "fourn/importance.hpp"
#include "fourn/neural.hpp"
#include "fourn/pipeline.hpp"
#include "fourn/simulate.hpp"
#include "fourn/spatial.hpp"

namespace fourn {

enum class GeneratorKind { Gp, TransformedGp, MaxStable, Potts, File };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Gp;
  std::filesystem::path path;                  // File only
  CovParams gp{0.0, 5.0, 1.0, 0.16};           // Gp and TransformedGp
  double maxstable_rho = 0.5;
  GevParams gev;
  int potts_labels = 8;
  double potts_beta = std::log(1.0 + std::sqrt(8.0));
  std::size_t potts_sweeps = 500;
};

/// "gp", "transformed-gp", "maxstable", "potts" or "file:<path>".
GeneratorSpec parse_generator(const std::string& text);
std::string to_string(const GeneratorSpec& gen);

/// One replication's data. File data ignores n and seed.
SpatialDataset generate(const GeneratorSpec& gen, std::size_t n, std::uint64_t seed);

struct TrainTestSplit {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Uniform random split with round(test_fraction * n) test sites.
TrainTestSplit split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

struct ExperimentConfig {
  GeneratorSpec generator;
  std::size_t n = 1000;
  std::size_t replications = 20;
  std::size_t m = 10;
  std::vector<FeatureKind> features{FeatureKind::KrigingPlusNP};
  std::vector<LossSpec> losses{LossSpec::squared()};
  bool intervals = false;   // also train the 0.025 / 0.975 pair per feature set
  bool importance = false;  // Garson importance of every trained network
  std::vector<std::size_t> hidden{200, 100};
  TrainConfig train;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  OrderingScheme ordering;
  TrainingNeighbors training_neighbors = TrainingNeighbors::Others;
  std::size_t fit_budget = 2000;
  std::size_t threads = 0;  // 0: one per hardware thread

  /// Throws ConfigError.
  void validate() const;
};

/// Field names match the struct; unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

/// "4N(kriging)", "4N(np)" or "4N(kriging-np)".
std::string method_label(FeatureKind kind);
inline constexpr const char* kBaselineLabel = "kriging-baseline";
inline constexpr const char* kConstantQuantileLabel = "constant-quantile";
/// "mse" for squared loss, "check:<gamma>" for check loss.
std::string metric_label(const LossSpec& loss);
inline constexpr const char* kCoverageLabel = "coverage95";

struct MetricValue {
  std::string method;
  std::string metric;
  double value;
};

struct ImportanceRecord {
  std::string method;
  std::string loss;
  std::vector<ImportanceGroup> groups;
};

struct ReplicationResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<MetricValue> metrics;
  std::vector<ImportanceRecord> importance;
};

/// Runs one replication; errors are caught and recorded in the result.
ReplicationResult run_replication(const ExperimentConfig& config, std::size_t index);

struct MetricRow {
  std::string method;
  std::string metric;
  std::vector<double> values;  // per replication; NaN where it failed
  double mean = 0.0;
  double stderr_ = 0.0;  // sample sd / sqrt(successful replications)
};

struct MetricsReport {
  std::vector<MetricRow> rows;
  std::vector<ReplicationResult> replications;
  std::vector<ImportanceRecord> mean_importance;
  std::size_t failures = 0;
  bool valid = true;  // false when more than 10% of replications failed

  const MetricRow* find(const std::string& method, const std::string& metric) const;
};

/// Aggregates replication results in index order.
MetricsReport aggregate(std::vector<ReplicationResult> results);

using LogSink = std::function<void(const std::string&)>;

/// Replications run on a worker pool; each uses seed derive_seed(seed, r),
/// so the report does not depend on the thread count.
MetricsReport run_experiment(const ExperimentConfig& config, const LogSink& log = {});

/// "method,metric,mean,stderr,rep1,...,repR".
void write_metrics_csv(std::ostream& out, const MetricsReport& report);

}  // namespace fourn
