#pragma once

#include <span>
#include <vector>

#include "fourn/covariance.hpp"
#include "fourn/spatial.hpp"

namespace fourn {

/// Simple Kriging with plug-in mean:
///   mu + c^T C^{-1} (y_N - mu)
/// where c is the nugget-free cross-covariance between the query and its
/// neighbors and C the covariance of Y over the neighbors.
double krige_one(Location query, std::span<const Location> neighbor_locs,
                 std::span<const double> neighbor_vals, const CovParams& params);

/// krige_one for every row of the table. Rows with no neighbors (the first
/// site of a training table) predict mu.
std::vector<double> krige_all(const SpatialDataset& reference, const NeighborTable& table,
                              const CovParams& params);

}  // namespace fourn
