#include "fourn/metrics.hpp"

#include "fourn/error.hpp"

namespace fourn {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error("truth and prediction lengths differ");
  if (a == 0) throw Error("metrics need at least one observation");
}

}  // namespace

double mse(std::span<const double> truth, std::span<const double> pred) {
  check_lengths(truth.size(), pred.size());
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - pred[i];
    s += d * d;
  }
  return s / static_cast<double>(truth.size());
}

double mean_check_loss(std::span<const double> truth, std::span<const double> pred, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("quantile level must lie in (0, 1)");
  check_lengths(truth.size(), pred.size());
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double u = truth[i] - pred[i];
    s += u < 0.0 ? (gamma - 1.0) * u : gamma * u;
  }
  return s / static_cast<double>(truth.size());
}

double interval_coverage(std::span<const double> truth, std::span<const double> lower,
                         std::span<const double> upper) {
  check_lengths(truth.size(), lower.size());
  check_lengths(truth.size(), upper.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (lower[i] <= truth[i] && truth[i] <= upper[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace fourn
