#include "fourn/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fourn/error.hpp"
#include "fourn/kernels/kernels.hpp"

namespace fourn {

// ---------------------------------------------------------------- model

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw Error("a perceptron needs input and output dimensions");
  if (dims.size() - 1 > MlpModel::kMaxLayers) throw Error("at most three hidden layers are supported");
  if (dims.back() != 1) throw Error("the output layer must have exactly one unit");
  for (std::size_t d : dims)
    if (d == 0) throw Error("layer widths must be positive");
}

std::vector<DenseLayer> zero_layers(const std::vector<std::size_t>& dims) {
  std::vector<DenseLayer> layers(dims.size() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    layers[l].in = dims[l];
    layers[l].out = dims[l + 1];
    layers[l].weights.assign(dims[l] * dims[l + 1], 0.0);
    layers[l].bias.assign(dims[l + 1], 0.0);
  }
  return layers;
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out[l].in = layers[l].in;
    out[l].out = layers[l].out;
    out[l].weights.assign(layers[l].weights.size(), 0.0);
    out[l].bias.assign(layers[l].bias.size(), 0.0);
  }
  return out;
}

}  // namespace

MlpModel::MlpModel(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
  check_dims(dims_);
  layers_ = zero_layers(dims_);
}

MlpModel MlpModel::he_uniform(std::vector<std::size_t> layer_dims, Rng& rng) {
  MlpModel model(std::move(layer_dims));
  for (DenseLayer& layer : model.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weights) w = dist(rng);
  }
  return model;
}

std::size_t MlpModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

// ---------------------------------------------------------------- losses

LossSpec LossSpec::check(double gamma) {
  LossSpec s{LossKind::Check, gamma};
  s.validate();
  return s;
}

void LossSpec::validate() const {
  if (kind == LossKind::Check && !(gamma > 0.0 && gamma < 1.0))
    throw Error("quantile level must lie in (0, 1)");
}

std::string to_string(const LossSpec& spec) {
  if (spec.kind == LossKind::Squared) return "mse";
  char buf[32];
  std::snprintf(buf, sizeof buf, "quantile:%g", spec.gamma);
  return buf;
}

LossSpec parse_loss(std::string_view text) {
  if (text == "mse") return LossSpec::squared();
  constexpr std::string_view prefix = "quantile:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string rest(text.substr(prefix.size()));
    std::size_t used = 0;
    double gamma = 0.0;
    try {
      gamma = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size())
      throw ConfigError("malformed quantile level in '" + std::string(text) + "'");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
    return {LossKind::Check, gamma};
  }
  throw ConfigError("unknown loss '" + std::string(text) + "' (mse|quantile:<gamma>)");
}

double loss_value(double pred, double y, const LossSpec& spec) {
  const double u = y - pred;
  if (spec.kind == LossKind::Squared) return u * u;
  return u * (spec.gamma - (u < 0.0 ? 1.0 : 0.0));
}

namespace {

// d loss / d pred
double loss_slope(double pred, double y, const LossSpec& spec) {
  const double u = y - pred;
  if (spec.kind == LossKind::Squared) return -2.0 * u;
  return -(spec.gamma - (u < 0.0 ? 1.0 : 0.0));
}

// ---------------------------------------------------------------- passes

// Activations kept for the backward pass.
struct Tape {
  std::vector<Matrix> pre;   // Z per layer, rows x out
  std::vector<Matrix> post;  // A per hidden layer after ReLU and mask
};

void run_forward(const MlpModel& model, MatrixView x, const DropoutMasks* masks, Tape& tape) {
  if (x.cols != model.input_dim())
    throw Error("feature matrix has " + std::to_string(x.cols) + " columns, model expects " +
                std::to_string(model.input_dim()));
  const auto& kern = kernels::active();
  const std::size_t rows = x.rows;
  const std::size_t nl = model.num_layers();
  tape.pre.resize(nl);
  tape.post.resize(nl - 1);
  MatrixView input = x;
  for (std::size_t l = 0; l < nl; ++l) {
    const DenseLayer& layer = model.layer(l);
    Matrix& z = tape.pre[l];
    if (z.rows() != rows || z.cols() != layer.out) z = Matrix(rows, layer.out);
    kern.gemm_nt(input.data, layer.weights.data(), z.data(), rows, layer.out, layer.in);
    for (std::size_t r = 0; r < rows; ++r) {
      double* zr = z.data() + r * layer.out;
      for (std::size_t o = 0; o < layer.out; ++o) zr[o] += layer.bias[o];
    }
    if (l + 1 == nl) break;
    Matrix& a = tape.post[l];
    if (a.rows() != rows || a.cols() != layer.out) a = Matrix(rows, layer.out);
    const double* mask = (masks != nullptr && !masks->empty()) ? (*masks)[l].data() : nullptr;
    for (std::size_t t = 0; t < rows * layer.out; ++t) {
      const double v = z.data()[t] > 0.0 ? z.data()[t] : 0.0;
      a.data()[t] = mask ? v * mask[t] : v;
    }
    input = MatrixView(a);
  }
}

void check_masks(const MlpModel& model, std::size_t rows, const DropoutMasks& masks) {
  if (masks.empty()) return;
  if (masks.size() != model.num_hidden()) throw Error("one dropout mask per hidden layer is required");
  for (std::size_t l = 0; l < masks.size(); ++l)
    if (masks[l].rows() != rows || masks[l].cols() != model.layer(l).out)
      throw Error("dropout mask shape does not match hidden layer " + std::to_string(l + 1));
}

class Backprop {
 public:
  MlpGradients run(const MlpModel& model, MatrixView x, std::span<const double> y,
                   const LossSpec& spec, const DropoutMasks& masks) {
    if (y.size() != x.rows) throw Error("response count does not match feature rows");
    if (x.rows == 0) throw Error("empty batch");
    check_masks(model, x.rows, masks);
    run_forward(model, x, &masks, tape_);

    const auto& kern = kernels::active();
    const std::size_t rows = x.rows;
    const std::size_t nl = model.num_layers();
    const double inv = 1.0 / static_cast<double>(rows);

    MlpGradients g;
    g.layers = zeros_like(model.layers());

    const Matrix& out = tape_.pre[nl - 1];
    if (delta_.size() != rows) delta_.assign(rows, 0.0);
    delta_.resize(rows);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      loss += loss_value(out.data()[r], y[r], spec);
      delta_[r] = loss_slope(out.data()[r], y[r], spec) * inv;
    }
    g.loss = loss * inv;

    for (std::size_t l = nl; l-- > 0;) {
      const DenseLayer& layer = model.layer(l);
      DenseLayer& gl = g.layers[l];
      const double* prev = l == 0 ? x.data : tape_.post[l - 1].data();
      kern.gemm_tn_acc(delta_.data(), prev, gl.weights.data(), rows, layer.out, layer.in);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < layer.out; ++o) gl.bias[o] += delta_[r * layer.out + o];
      if (l == 0) break;
      upstream_.resize(rows * layer.in);
      kern.gemm_nn(delta_.data(), layer.weights.data(), upstream_.data(), rows, layer.out, layer.in);
      const Matrix& z = tape_.pre[l - 1];
      const double* mask = masks.empty() ? nullptr : masks[l - 1].data();
      for (std::size_t t = 0; t < rows * layer.in; ++t) {
        double d = z.data()[t] > 0.0 ? upstream_[t] : 0.0;
        if (mask) d *= mask[t];
        upstream_[t] = d;
      }
      std::swap(delta_, upstream_);
    }
    return g;
  }

 private:
  Tape tape_;
  std::vector<double> delta_;
  std::vector<double> upstream_;
};

}  // namespace

std::vector<double> forward(const MlpModel& model, MatrixView x) {
  if (model.num_layers() == 0) throw Error("model has no layers");
  Tape tape;
  run_forward(model, x, nullptr, tape);
  const Matrix& out = tape.pre.back();
  return std::vector<double>(out.data(), out.data() + out.rows());
}

double mean_loss(const MlpModel& model, MatrixView x, std::span<const double> y,
                 const LossSpec& spec) {
  if (y.size() != x.rows) throw Error("response count does not match feature rows");
  const auto pred = forward(model, x);
  double s = 0.0;
  for (std::size_t r = 0; r < pred.size(); ++r) s += loss_value(pred[r], y[r], spec);
  return pred.empty() ? 0.0 : s / static_cast<double>(pred.size());
}

DropoutMasks sample_dropout_masks(const MlpModel& model, std::size_t rows, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout rate must lie in [0, 1)");
  DropoutMasks masks;
  if (rate == 0.0) return masks;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t l = 0; l < model.num_hidden(); ++l) {
    Matrix m(rows, model.layer(l).out);
    for (double& v : m.storage()) v = u(rng) < rate ? 0.0 : keep_scale;
    masks.push_back(std::move(m));
  }
  return masks;
}

MlpGradients gradients(const MlpModel& model, MatrixView x, std::span<const double> y,
                       const LossSpec& spec, const DropoutMasks& masks) {
  Backprop bp;
  return bp.run(model, x, y, spec, masks);
}

// ---------------------------------------------------------------- ADAM

AdamState AdamState::for_model(const MlpModel& model) {
  AdamState s;
  s.first = zeros_like(model.layers());
  s.second = zeros_like(model.layers());
  return s;
}

namespace {

void adam_update(std::vector<double>& param, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& g, double lr, double c1, double c2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * g[i];
    v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::kEpsilon);
  }
}

}  // namespace

void adam_step(AdamState& state, MlpModel& model, const MlpGradients& grads, double learning_rate) {
  if (state.first.size() != model.num_layers() || grads.layers.size() != model.num_layers())
    throw Error("ADAM state does not match the model");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    DenseLayer& p = model.layer(l);
    adam_update(p.weights, state.first[l].weights, state.second[l].weights, grads.layers[l].weights,
                learning_rate, c1, c2);
    adam_update(p.bias, state.first[l].bias, state.second[l].bias, grads.layers[l].bias,
                learning_rate, c1, c2);
  }
}

// ---------------------------------------------------------------- training

void TrainConfig::validate() const {
  if (!(learning_rate >= 1e-6 && learning_rate <= 0.1))
    throw ConfigError("learning_rate must lie in [1e-6, 0.1]");
  if (batch_size < 16 || batch_size > 128) throw ConfigError("batch_size must lie in [16, 128]");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(dropout_rate >= 0.1 && dropout_rate <= 0.5))
    throw ConfigError("dropout_rate must lie in [0.1, 0.5]");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be nonnegative");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5))
    throw ConfigError("validation_fraction must lie in (0, 0.5)");
}

void validate_architecture(std::span<const std::size_t> hidden) {
  if (hidden.size() > MlpModel::kMaxLayers - 1) throw ConfigError("at most three hidden layers");
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    if (hidden[l] == 0) throw ConfigError("hidden layer widths must be positive");
    if (l > 0 && hidden[l] > hidden[l - 1])
      throw ConfigError("hidden layer widths must be nonincreasing");
  }
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

Matrix take_rows(MatrixView x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = x.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

TrainResult train(MatrixView x, std::span<const double> y, std::span<const std::size_t> hidden,
                  const TrainConfig& config, const LossSpec& loss) {
  config.validate();
  loss.validate();
  validate_architecture(hidden);
  const std::size_t n = x.rows;
  if (n < 20) throw Error("training needs at least 20 rows");
  if (y.size() != n) throw Error("response count does not match feature rows");
  if (x.cols == 0) throw Error("feature matrix has no columns");

  Rng rng(config.seed);
  std::vector<std::size_t> dims{x.cols};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  MlpModel model = MlpModel::he_uniform(dims, rng);

  TrainResult result;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm, rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n))), 1,
      n - 1);
  result.val_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  result.train_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());

  const Matrix x_train = take_rows(x, result.train_rows);
  const Matrix x_val = take_rows(x, result.val_rows);
  const std::vector<double> y_train = gather_rows(y, result.train_rows);
  const std::vector<double> y_val = gather_rows(y, result.val_rows);

  result.initial_train_loss = mean_loss(model, x_train, y_train, loss);
  result.initial_val_loss = mean_loss(model, x_val, y_val, loss);

  AdamState adam = AdamState::for_model(model);
  Backprop backprop;
  const std::size_t n_train = result.train_rows.size();
  const std::size_t batch = std::min(config.batch_size, n_train);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix xb;
  std::vector<double> yb;

  MlpModel best_model = model;
  double best_seen = std::numeric_limits<double>::infinity();
  double reference = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t len = std::min(batch, n_train - start);
      if (xb.rows() != len) xb = Matrix(len, x.cols);
      yb.resize(len);
      for (std::size_t r = 0; r < len; ++r) {
        const auto src = x_train.row(order[start + r]);
        std::copy(src.begin(), src.end(), xb.row(r).begin());
        yb[r] = y_train[order[start + r]];
      }
      const DropoutMasks masks = sample_dropout_masks(model, len, config.dropout_rate, rng);
      const MlpGradients g = backprop.run(model, xb, yb, loss, masks);
      adam_step(adam, model, g, config.learning_rate);
    }

    const double train_loss = mean_loss(model, x_train, y_train, loss);
    const double val_loss = mean_loss(model, x_val, y_val, loss);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, train_loss, val_loss});
    result.epochs_run = epoch;

    if (val_loss < best_seen) {
      best_seen = val_loss;
      best_model = model;
      result.best_epoch = epoch;
    }
    if (val_loss < reference - config.min_delta) {
      reference = val_loss;
      wait = 0;
    } else if (++wait >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  result.model = std::move(best_model);
  return result;
}

std::vector<double> predict(const MlpModel& model, const Standardization& stats,
                            const FeatureMatrix& raw) {
  const FeatureMatrix z = apply_standardization(raw, stats);
  return forward(model, z.values);
}

}  // namespace fourn
