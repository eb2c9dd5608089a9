#pragma once

// End-to-end 4N steps shared by the CLI and the experiment harness.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fourn/features.hpp"
#include "fourn/model_io.hpp"
#include "fourn/neural.hpp"
#include "fourn/spatial.hpp"
#include "fourn/vecchia.hpp"

namespace fourn {

inline constexpr std::size_t kDefaultFitBudget = 2000;

/// Which neighbors describe a training site in its feature row.
///  Predecessors: the m nearest earlier sites in the reference ordering.
///  Others: the m nearest other training sites, as a query would see them.
enum class TrainingNeighbors { Predecessors, Others };

std::string_view to_string(TrainingNeighbors t) noexcept;
TrainingNeighbors parse_training_neighbors(std::string_view text);

/// Ordered training data with its predecessor table and fitted covariance
/// parameters, plus the table and Kriging predictions behind the training
/// feature rows.
struct PreparedReference {
  SpatialDataset ordered;
  std::vector<std::size_t> order;  // ordered row k is input row order[k]
  NeighborTable table;             // predecessors, used by the likelihood
  FitResult fit;
  NeighborTable feature_table;
  std::vector<double> kriging;  // per feature_table row
  OrderingScheme ordering;
};

/// When `cov` is given the fit step is skipped and those parameters are used.
PreparedReference prepare_reference(const SpatialDataset& train, std::size_t m,
                                    OrderingScheme ordering, std::size_t fit_budget,
                                    std::optional<CovParams> cov = std::nullopt,
                                    TrainingNeighbors neighbors = TrainingNeighbors::Others);

/// Query-side neighbor table over the ordered reference and its Kriging
/// predictions.
struct PreparedQueries {
  NeighborTable table;
  std::vector<double> kriging;
};

PreparedQueries prepare_queries(const SpatialDataset& ordered_reference,
                                std::span<const Location> queries, std::size_t m,
                                const CovParams& cov);

/// Training features for a feature spec (unstandardized) and matching responses.
struct TrainingSet {
  FeatureMatrix features;
  std::vector<double> responses;
};
TrainingSet training_set(const PreparedReference& ref, const FeatureSpec& spec);

FeatureMatrix query_features(const PreparedReference& ref, const PreparedQueries& queries,
                             const FeatureSpec& spec);

struct ModelFit {
  TrainedModel model;
  TrainResult training;  // empty history when the response is constant
};

/// Standardizes, trains and packages the network. A constant training
/// response yields a network that outputs that constant.
ModelFit fit_model(const PreparedReference& ref, const FeatureSpec& spec,
                   std::span<const std::size_t> hidden, const TrainConfig& config,
                   const LossSpec& loss);

/// Predictions at the queries with the stored standardization.
std::vector<double> predict_model(const TrainedModel& model, const PreparedReference& ref,
                                  const PreparedQueries& queries);

/// Convenience for the CLI: reference data in any order plus a saved model.
std::vector<double> predict_sites(const TrainedModel& model, const SpatialDataset& reference,
                                  std::span<const Location> queries);

}  // namespace fourn
