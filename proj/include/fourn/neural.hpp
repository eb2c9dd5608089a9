#pragma once

// Multilayer perceptron with ReLU hidden layers and a linear scalar output,
// trained by mini-batch ADAM under squared or check loss.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fourn/features.hpp"
#include "fourn/matrix.hpp"
#include "fourn/rng.hpp"

namespace fourn {

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// layer_dims = [p, h1, ..., 1]; at most three hidden layers.
class MlpModel {
 public:
  static constexpr std::size_t kMaxLayers = 4;

  MlpModel() = default;
  /// All weights and biases zero.
  explicit MlpModel(std::vector<std::size_t> layer_dims);

  /// He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
  static MlpModel he_uniform(std::vector<std::size_t> layer_dims, Rng& rng);

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t input_dim() const noexcept { return dims_.empty() ? 0 : dims_.front(); }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t num_hidden() const noexcept { return layers_.empty() ? 0 : layers_.size() - 1; }
  std::size_t parameter_count() const noexcept;

  DenseLayer& layer(std::size_t l) { return layers_[l]; }
  const DenseLayer& layer(std::size_t l) const { return layers_[l]; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<DenseLayer> layers_;
};

enum class LossKind { Squared, Check };

struct LossSpec {
  LossKind kind = LossKind::Squared;
  double gamma = 0.5;  // quantile level, meaningful for Check only

  static LossSpec squared() { return {LossKind::Squared, 0.5}; }
  static LossSpec check(double gamma);
  void validate() const;

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

/// "mse" or "quantile:<gamma>".
std::string to_string(const LossSpec& spec);
LossSpec parse_loss(std::string_view text);

/// Loss of the residual u = y - pred: u^2, or u * (gamma - 1{u < 0}).
double loss_value(double pred, double y, const LossSpec& spec);

/// Inference-mode outputs, one per row of X.
std::vector<double> forward(const MlpModel& model, MatrixView x);

/// Mean loss of forward(model, x) against y.
double mean_loss(const MlpModel& model, MatrixView x, std::span<const double> y,
                 const LossSpec& spec);

/// Inverted-dropout multipliers, one rows x width block per hidden layer;
/// entries are 0 or 1/(1-rate). An empty mask set means no dropout.
using DropoutMasks = std::vector<Matrix>;

DropoutMasks sample_dropout_masks(const MlpModel& model, std::size_t rows, double rate, Rng& rng);

struct MlpGradients {
  std::vector<DenseLayer> layers;  // same shapes as the model
  double loss = 0.0;               // mean batch loss under the masks
};

/// Exact gradient of the mean batch loss. The check-loss subgradient at
/// u == 0 uses gamma.
MlpGradients gradients(const MlpModel& model, MatrixView x, std::span<const double> y,
                       const LossSpec& spec, const DropoutMasks& masks = {});

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<DenseLayer> first;   // m
  std::vector<DenseLayer> second;  // v
  std::uint64_t step = 0;

  static AdamState for_model(const MlpModel& model);
};

/// One bias-corrected ADAM update of every parameter.
void adam_step(AdamState& state, MlpModel& model, const MlpGradients& grads, double learning_rate);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 50;
  double dropout_rate = 0.2;
  std::size_t patience = 5;
  double min_delta = 1e-4;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  /// learning_rate in [1e-6, 0.1], batch_size in [16, 128], dropout in
  /// [0.1, 0.5], validation_fraction in (0, 0.5), epochs and patience >= 1.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double val_loss;
};

struct TrainResult {
  MlpModel model;                    // weights of the best validation epoch
  std::vector<EpochRecord> history;  // epochs 1..epochs_run
  double initial_train_loss = 0.0;
  double initial_val_loss = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
};

/// Hidden widths must be nonincreasing, at most three layers, each >= 1.
void validate_architecture(std::span<const std::size_t> hidden);

/// Mini-batch ADAM with inverted dropout on hidden activations and early
/// stopping on a held-out validation split. Deterministic in config.seed.
/// Throws NumericalError naming the epoch if a loss becomes non-finite.
TrainResult train(MatrixView x, std::span<const double> y, std::span<const std::size_t> hidden,
                  const TrainConfig& config, const LossSpec& loss);

/// Applies the stored training statistics to raw features, then forward().
std::vector<double> predict(const MlpModel& model, const Standardization& stats,
                            const FeatureMatrix& raw);

}  // namespace fourn
