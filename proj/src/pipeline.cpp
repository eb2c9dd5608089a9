#include "fourn/pipeline.hpp"

#include <algorithm>
#include <string>

#include "fourn/error.hpp"
#include "fourn/kriging.hpp"

namespace fourn {

std::string_view to_string(TrainingNeighbors t) noexcept {
  return t == TrainingNeighbors::Predecessors ? "predecessors" : "others";
}

TrainingNeighbors parse_training_neighbors(std::string_view text) {
  if (text == "predecessors") return TrainingNeighbors::Predecessors;
  if (text == "others") return TrainingNeighbors::Others;
  throw ConfigError("unknown training neighbor scheme '" + std::string(text) + "'");
}

PreparedReference prepare_reference(const SpatialDataset& train, std::size_t m,
                                    OrderingScheme ordering, std::size_t fit_budget,
                                    std::optional<CovParams> cov, TrainingNeighbors neighbors) {
  if (m == 0) throw ConfigError("neighbor count must be at least 1");
  if (train.size() <= m) throw Error("insufficient reference points");
  auto order = order_reference(train, ordering);
  SpatialDataset ordered = train.subset(order);
  NeighborTable table = build_neighbor_table_training(ordered, m);
  FitResult fit;
  if (cov) {
    cov->validate();
    fit.params = *cov;
    fit.loglik = fit.initial_loglik = vecchia_loglik(ordered, table, *cov);
    fit.converged = true;
  } else {
    fit = fit_params_on_table(ordered, table, default_initial_params(ordered), fit_budget);
  }
  NeighborTable feature_table = neighbors == TrainingNeighbors::Predecessors
                                    ? table
                                    : build_neighbor_table_others(ordered, m);
  std::vector<double> kriging = krige_all(ordered, feature_table, fit.params);
  return {std::move(ordered), std::move(order), std::move(table), fit,
          std::move(feature_table), std::move(kriging), ordering};
}

PreparedQueries prepare_queries(const SpatialDataset& ordered_reference,
                                std::span<const Location> queries, std::size_t m,
                                const CovParams& cov) {
  NeighborTable table = build_neighbor_table_prediction(ordered_reference, queries, m);
  std::vector<double> kriging = krige_all(ordered_reference, table, cov);
  return {std::move(table), std::move(kriging)};
}

namespace {

void check_m(const PreparedReference& ref, const FeatureSpec& spec) {
  if (spec.m != ref.table.m())
    throw ConfigError("feature neighbor count differs from the reference table");
}

std::optional<std::span<const double>> kriging_column(const FeatureSpec& spec,
                                                      const std::vector<double>& k) {
  if (!spec.uses_kriging()) return std::nullopt;
  return std::span<const double>(k);
}

}  // namespace

TrainingSet training_set(const PreparedReference& ref, const FeatureSpec& spec) {
  check_m(ref, spec);
  FeatureMatrix fm =
      build_features(ref.ordered, ref.feature_table, spec, kriging_column(spec, ref.kriging));
  std::vector<double> y = gather_rows(ref.ordered.values(), fm.row_sites);
  return {std::move(fm), std::move(y)};
}

FeatureMatrix query_features(const PreparedReference& ref, const PreparedQueries& queries,
                             const FeatureSpec& spec) {
  check_m(ref, spec);
  return build_features(ref.ordered, queries.table, spec, kriging_column(spec, queries.kriging));
}

ModelFit fit_model(const PreparedReference& ref, const FeatureSpec& spec,
                   std::span<const std::size_t> hidden, const TrainConfig& config,
                   const LossSpec& loss) {
  TrainingSet ts = training_set(ref, spec);
  const FeatureMatrix z = standardize(ts.features);

  ModelFit out;
  TrainedModel& tm = out.model;
  tm.standardization = *z.standardization;
  tm.loss = loss;
  tm.features = spec;
  tm.layout = z.layout;
  tm.cov = ref.fit.params;
  tm.ordering = ref.ordering;

  const auto& y = ts.responses;
  const bool constant =
      !y.empty() && std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  if (constant) {
    config.validate();
    loss.validate();
    validate_architecture(hidden);
    std::vector<std::size_t> dims{z.cols()};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    MlpModel net(dims);
    net.layers().back().bias[0] = y.front();
    tm.network = std::move(net);
    out.training.model = tm.network;
    return out;
  }
  out.training = train(z.values, y, hidden, config, loss);
  tm.network = out.training.model;
  return out;
}

std::vector<double> predict_model(const TrainedModel& model, const PreparedReference& ref,
                                  const PreparedQueries& queries) {
  const FeatureMatrix raw = query_features(ref, queries, model.features);
  return predict(model.network, model.standardization, raw);
}

std::vector<double> predict_sites(const TrainedModel& model, const SpatialDataset& reference,
                                  std::span<const Location> queries) {
  const std::size_t m = model.features.m;
  PreparedReference ref = prepare_reference(reference, m, model.ordering, 0, model.cov);
  PreparedQueries q = prepare_queries(ref.ordered, queries, m, model.cov);
  return predict_model(model, ref, q);
}

}  // namespace fourn
