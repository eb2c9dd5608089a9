#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fourn/covariance.hpp"
#include "fourn/rng.hpp"
#include "fourn/spatial.hpp"

namespace fourn {

/// Largest n accepted by the dense (n x n Cholesky) Gaussian simulators.
inline constexpr std::size_t kDenseSimulationCap = 20000;

/// n iid points, uniform on the unit square (x drawn before y per point).
std::vector<Location> uniform_locations(std::size_t n, Rng& rng);

/// Exact Gaussian draw Y = mu + L z + tau * eps where L L^T is the
/// nugget-free exponential kernel matrix. sigma2 = 0 is allowed.
std::vector<double> sim_gp_at(std::span<const Location> locs, const CovParams& params, Rng& rng);
SpatialDataset sim_gp(std::size_t n, const CovParams& params, std::uint64_t seed);

/// Draw from the nearest-neighbor approximation: sites are visited in index
/// order and Y_i is sampled from its Gaussian conditional on the m nearest
/// earlier sites. m = 0 gives iid N(mu, sigma2 + tau2); m >= n - 1 is exact.
std::vector<double> sim_gp_sequential_at(std::span<const Location> locs, const CovParams& params,
                                         std::size_t m, Rng& rng);
SpatialDataset sim_gp_sequential(std::size_t n, const CovParams& params, std::size_t m,
                                 std::uint64_t seed);

/// y^3/100 + exp(y/5)/10
double transform_gp(double y);

struct GevParams {
  double loc = 1.0;
  double scale = 2.0;
  double shape = 0.3;
};

/// Unit-Frechet -> GEV: loc + scale * (z^shape - 1) / shape.
double gev_from_unit_frechet(double z, const GevParams& gev);

struct MaxStableOptions {
  double bound = 4.0;                       // assumed ceiling on max(0, W)
  std::size_t max_functions = 1'000'000;
};

/// Schlather process with unit-Frechet margins:
///   Z(s) = sqrt(2 pi) max_k zeta_k max(0, W_k(s)),
/// zeta_k = 1 / (E_1 + ... + E_k), W_k iid standard GPs with exp(-d/rho)
/// correlation. Stops once sqrt(2 pi) zeta_k bound < min_s Z(s).
std::vector<double> sim_maxstable_unit_at(std::span<const Location> locs, double rho, Rng& rng,
                                          const MaxStableOptions& options = {});
SpatialDataset sim_maxstable(std::size_t n, double rho, const GevParams& gev, std::uint64_t seed);

struct PottsSample {
  SpatialDataset data;
  std::vector<int> labels;  // 1..G, aligned with data rows
};

/// Conditional label probabilities P(k) proportional to
/// exp(beta * #{neighbors with label k}), k = 1..G.
std::vector<double> potts_conditional(std::span<const int> neighbor_labels, int num_labels,
                                      double beta);

/// Single-site Gibbs sampling of a ceil(sqrt(n))^2 lattice with free
/// boundaries, raster sweeps from a uniform start. The first n sites in
/// row-major order are kept, placed at cell centers of the unit square, and
/// given responses N(g^2 + 5g, variance sqrt(g)).
PottsSample sim_potts(std::size_t n, int num_labels, double beta, std::size_t sweeps,
                      std::uint64_t seed);

}  // namespace fourn
