#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fourn/neural.hpp"

namespace fourn {

/// Garson relative importance of each input, nonnegative and summing to one.
///
/// Each layer's |W| is row-normalized so every unit splits its incoming
/// weight across its inputs; the output layer's normalized |W| is chained
/// back through those shares. With one hidden layer this is Garson's
/// original partition. Biases carry no input attribution and are ignored.
/// Throws NumericalError("degenerate network") if a layer is all zeros.
std::vector<double> garson_importance(const MlpModel& model);

struct ImportanceGroup {
  std::string group;  // "kriging", "site", "neighbor_<l>"
  double importance;

  friend bool operator==(const ImportanceGroup&, const ImportanceGroup&) = default;
};

/// Sums per-input importance by feature group in layout order: kriging,
/// site (sx + sy), then neighbor_l = dx_l + dy_l + yn_l.
std::vector<ImportanceGroup> aggregate_importance(std::span<const double> importance,
                                                  std::span<const std::string> layout);

/// CSV "group,importance".
void write_importance_csv(std::ostream& out, std::span<const ImportanceGroup> groups);

}  // namespace fourn
