#pragma once

#include <span>

namespace fourn {

/// Mean squared prediction error.
double mse(std::span<const double> truth, std::span<const double> pred);

/// Mean per-observation check loss at quantile level gamma.
double mean_check_loss(std::span<const double> truth, std::span<const double> pred, double gamma);

/// Fraction of sites with lower <= truth <= upper.
double interval_coverage(std::span<const double> truth, std::span<const double> lower,
                         std::span<const double> upper);

}  // namespace fourn
