#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fourn/covariance.hpp"
#include "fourn/features.hpp"
#include "fourn/neural.hpp"
#include "fourn/spatial.hpp"

namespace fourn {

/// Everything needed to predict at new sites given the reference data.
struct TrainedModel {
  MlpModel network;
  Standardization standardization;
  LossSpec loss;
  FeatureSpec features;
  std::vector<std::string> layout;
  CovParams cov;
  OrderingScheme ordering;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

inline constexpr int kModelFormatVersion = 1;

/// JSON text; doubles are written in shortest round-trip form so reading
/// back reproduces every weight bit for bit.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace fourn
