#pragma once

#include <cstddef>
#include <vector>

#include "fourn/covariance.hpp"
#include "fourn/spatial.hpp"

namespace fourn {

/// Vecchia log-likelihood sum_i log p(Y_i | Y_{N_i}) for a fixed ordered
/// reference set and training neighbor table.
///
/// Pairwise neighbor distances are computed once, so repeated evaluation
/// under different parameters only pays for the kernel and the m x m
/// factorizations.
class VecchiaObjective {
 public:
  VecchiaObjective(const SpatialDataset& ordered, const NeighborTable& table);

  /// Throws NumericalError when a neighbor covariance is not SPD or a
  /// conditional variance is nonpositive.
  double loglik(const CovParams& params) const;

  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;         // per-site start into neighbor arrays
  std::vector<std::size_t> neighbor_index_;  // flattened neighbor lists
  std::vector<double> cross_dist_;           // d(i, N_i[j])
  std::vector<std::size_t> pair_offsets_;    // per-site start into pair_dist_
  std::vector<double> pair_dist_;            // row-major k x k, d(N_i[a], N_i[b])
};

double vecchia_loglik(const SpatialDataset& ordered, const NeighborTable& table,
                      const CovParams& params);

struct FitResult {
  CovParams params;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
};

/// Starting point scaled to the data: mean, 0.8/0.2 split of the sample
/// variance between sill and nugget, and a tenth of the bounding-box diagonal
/// as range.
CovParams default_initial_params(const SpatialDataset& dataset);

/// Maximum-likelihood Nelder-Mead over (mu, log sigma2, log tau2, log rho).
///
/// Stops when the simplex size falls below 1e-6 or after `budget`
/// likelihood evaluations; in the latter case the best point seen is returned
/// with converged == false. The returned log-likelihood is never below the
/// value at `init`.
FitResult fit_params_on_table(const SpatialDataset& ordered, const NeighborTable& table,
                              const CovParams& init, std::size_t budget);

/// Orders the dataset, builds the m-neighbor training table, then fits.
FitResult fit_params(const SpatialDataset& dataset, std::size_t m, const CovParams& init,
                     std::size_t budget, OrderingScheme ordering = {});

}  // namespace fourn
