#include "fourn/kriging.hpp"

#include "fourn/error.hpp"

namespace fourn {

double krige_one(Location query, std::span<const Location> neighbor_locs,
                 std::span<const double> neighbor_vals, const CovParams& params) {
  if (neighbor_locs.empty()) throw Error("Kriging needs at least one neighbor");
  if (neighbor_locs.size() != neighbor_vals.size())
    throw Error("neighbor locations and values differ in length");
  params.validate();
  const std::size_t k = neighbor_locs.size();

  Matrix cov;
  try {
    cov = cov_matrix_y(neighbor_locs, params);
  } catch (const NumericalError&) {
    throw NumericalError("singular neighbor covariance");
  }
  Cholesky chol;
  if (!chol.try_factor(cov.data(), k)) throw NumericalError("singular neighbor covariance");

  std::vector<double> resid(k);
  for (std::size_t a = 0; a < k; ++a) resid[a] = neighbor_vals[a] - params.mu;
  chol.solve_in_place(resid);
  double pred = params.mu;
  for (std::size_t a = 0; a < k; ++a) pred += exp_cov(distance(query, neighbor_locs[a]), params) * resid[a];
  return pred;
}

std::vector<double> krige_all(const SpatialDataset& reference, const NeighborTable& table,
                              const CovParams& params) {
  std::vector<double> out(table.size());
  std::vector<Location> locs;
  std::vector<double> vals;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto nb = table.neighbors(i);
    if (nb.empty()) {
      out[i] = params.mu;
      continue;
    }
    locs.clear();
    vals.clear();
    for (std::size_t j : nb) {
      if (j >= reference.size()) throw Error("neighbor index outside the reference set");
      locs.push_back(reference.location(j));
      vals.push_back(reference.value(j));
    }
    out[i] = krige_one(table.site(i), locs, vals, params);
  }
  return out;
}

}  // namespace fourn
