#include "fourn/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fourn/error.hpp"
#include "fourn/kdtree.hpp"

namespace fourn {
namespace {

void check_sim_params(const CovParams& p) {
  if (!std::isfinite(p.mu) || !(p.sigma2 >= 0.0) || !(p.tau2 >= 0.0) || !(p.rho > 0.0) ||
      !std::isfinite(p.sigma2) || !std::isfinite(p.tau2) || !std::isfinite(p.rho))
    throw Error("simulation needs finite mu, sigma2 >= 0, tau2 >= 0, rho > 0");
}

// Lower Cholesky factor of sigma2 * exp(-d/rho) over the sites.
Eigen::MatrixXd kernel_factor(std::span<const Location> locs, double sigma2, double rho) {
  const auto n = static_cast<Eigen::Index>(locs.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = sigma2;
    for (Eigen::Index i = j + 1; i < n; ++i)
      k(i, j) = sigma2 * std::exp(-distance(locs[static_cast<std::size_t>(i)],
                                            locs[static_cast<std::size_t>(j)]) / rho);
  }
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalError("kernel matrix is not positive definite");
  return k;  // lower triangle now holds the factor
}

Eigen::VectorXd standard_normals(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return z;
}

}  // namespace

std::vector<Location> uniform_locations(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Location> locs(n);
  for (Location& l : locs) {
    l.x = u(rng);
    l.y = u(rng);
  }
  return locs;
}

std::vector<double> sim_gp_at(std::span<const Location> locs, const CovParams& params, Rng& rng) {
  check_sim_params(params);
  const std::size_t n = locs.size();
  if (n > kDenseSimulationCap)
    throw Error("dense GP simulation is capped at " + std::to_string(kDenseSimulationCap) +
                " sites; use sim_gp_sequential for larger n");
  std::vector<double> y(n, params.mu);
  if (params.sigma2 > 0.0 && n > 0) {
    const Eigen::MatrixXd l = kernel_factor(locs, params.sigma2, params.rho);
    const Eigen::VectorXd w = l.triangularView<Eigen::Lower>() * standard_normals(n, rng);
    for (std::size_t i = 0; i < n; ++i) y[i] += w(static_cast<Eigen::Index>(i));
  }
  if (params.tau2 > 0.0) {
    const double tau = std::sqrt(params.tau2);
    std::normal_distribution<double> normal;
    for (double& v : y) v += tau * normal(rng);
  }
  return y;
}

SpatialDataset sim_gp(std::size_t n, const CovParams& params, std::uint64_t seed) {
  Rng rng(seed);
  auto locs = uniform_locations(n, rng);
  auto y = sim_gp_at(locs, params, rng);
  return SpatialDataset(std::move(locs), std::move(y));
}

std::vector<double> sim_gp_sequential_at(std::span<const Location> locs, const CovParams& params,
                                         std::size_t m, Rng& rng) {
  check_sim_params(params);
  const std::size_t n = locs.size();
  const double total_var = params.sigma2 + params.tau2;
  std::normal_distribution<double> normal;
  std::vector<double> y(n, params.mu);
  if (total_var == 0.0) return y;
  if (m == 0) {
    const double sd = std::sqrt(total_var);
    for (double& v : y) v += sd * normal(rng);
    return y;
  }

  const KdTree tree(locs);
  std::vector<Location> nlocs;
  std::vector<double> cross, resid;
  Cholesky chol;
  for (std::size_t i = 0; i < n; ++i) {
    double mean = params.mu;
    double var = total_var;
    if (i > 0) {
      const auto hits = tree.nearest(locs[i], std::min(m, i), i);
      nlocs.clear();
      for (const NeighborHit& h : hits) nlocs.push_back(locs[h.index]);
      const Matrix cov = cov_matrix_y(nlocs, params);
      if (!chol.try_factor(cov.data(), nlocs.size())) throw NumericalError("not positive definite");
      cross.resize(hits.size());
      resid.resize(hits.size());
      for (std::size_t a = 0; a < hits.size(); ++a) {
        cross[a] = exp_cov(std::sqrt(hits[a].squared_distance), params);
        resid[a] = y[hits[a].index] - params.mu;
      }
      chol.forward_in_place(cross);
      chol.forward_in_place(resid);
      for (std::size_t a = 0; a < hits.size(); ++a) {
        mean += cross[a] * resid[a];
        var -= cross[a] * cross[a];
      }
    }
    y[i] = mean + std::sqrt(std::max(var, 0.0)) * normal(rng);
  }
  return y;
}

SpatialDataset sim_gp_sequential(std::size_t n, const CovParams& params, std::size_t m,
                                 std::uint64_t seed) {
  Rng rng(seed);
  auto locs = uniform_locations(n, rng);
  auto y = sim_gp_sequential_at(locs, params, m, rng);
  return SpatialDataset(std::move(locs), std::move(y));
}

double transform_gp(double y) { return y * y * y / 100.0 + std::exp(y / 5.0) / 10.0; }

double gev_from_unit_frechet(double z, const GevParams& gev) {
  if (gev.shape == 0.0) return gev.loc + gev.scale * std::log(z);
  return gev.loc + gev.scale * (std::pow(z, gev.shape) - 1.0) / gev.shape;
}

std::vector<double> sim_maxstable_unit_at(std::span<const Location> locs, double rho, Rng& rng,
                                          const MaxStableOptions& options) {
  if (!(rho > 0.0)) throw Error("max-stable range must be positive");
  const std::size_t n = locs.size();
  if (n > kDenseSimulationCap) throw Error("max-stable simulation is capped at 20000 sites");
  std::vector<double> z(n, 0.0);
  if (n == 0) return z;
  const Eigen::MatrixXd l = kernel_factor(locs, 1.0, rho);
  const double c = std::sqrt(2.0 * std::numbers::pi);
  std::exponential_distribution<double> expo(1.0);
  double arrival = 0.0;
  for (std::size_t k = 0; k < options.max_functions; ++k) {
    arrival += expo(rng);
    const double zeta = 1.0 / arrival;
    const double floor = *std::min_element(z.begin(), z.end());
    if (c * zeta * options.bound < floor) return z;
    const Eigen::VectorXd w = l.triangularView<Eigen::Lower>() * standard_normals(n, rng);
    for (std::size_t s = 0; s < n; ++s) {
      const double ws = w(static_cast<Eigen::Index>(s));
      if (ws > 0.0) z[s] = std::max(z[s], c * zeta * ws);
    }
  }
  throw NumericalError("max-stable truncation failure");
}

SpatialDataset sim_maxstable(std::size_t n, double rho, const GevParams& gev, std::uint64_t seed) {
  if (n > 10000) throw Error("max-stable simulation supports at most 10000 sites");
  Rng rng(seed);
  auto locs = uniform_locations(n, rng);
  auto z = sim_maxstable_unit_at(locs, rho, rng);
  for (double& v : z) v = gev_from_unit_frechet(v, gev);
  return SpatialDataset(std::move(locs), std::move(z));
}

std::vector<double> potts_conditional(std::span<const int> neighbor_labels, int num_labels,
                                      double beta) {
  if (num_labels < 1) throw Error("Potts model needs at least one label");
  std::vector<double> count(static_cast<std::size_t>(num_labels), 0.0);
  for (int g : neighbor_labels) {
    if (g < 1 || g > num_labels) throw Error("Potts label out of range");
    count[static_cast<std::size_t>(g - 1)] += 1.0;
  }
  const double top = beta * *std::max_element(count.begin(), count.end());
  std::vector<double> p(count.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(beta * count[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

PottsSample sim_potts(std::size_t n, int num_labels, double beta, std::size_t sweeps,
                      std::uint64_t seed) {
  if (num_labels < 1) throw Error("Potts model needs at least one label");
  if (!std::isfinite(beta)) throw Error("Potts beta must be finite");
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  Rng rng(seed);
  std::uniform_int_distribution<int> init(1, num_labels);
  std::vector<int> grid(side * side);
  for (int& g : grid) g = init(rng);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> nb;
  nb.reserve(4);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        nb.clear();
        if (r > 0) nb.push_back(grid[(r - 1) * side + c]);
        if (r + 1 < side) nb.push_back(grid[(r + 1) * side + c]);
        if (c > 0) nb.push_back(grid[r * side + c - 1]);
        if (c + 1 < side) nb.push_back(grid[r * side + c + 1]);
        const auto p = potts_conditional(nb, num_labels, beta);
        double draw = u(rng);
        int label = num_labels;
        for (std::size_t k = 0; k < p.size(); ++k) {
          draw -= p[k];
          if (draw < 0.0) {
            label = static_cast<int>(k) + 1;
            break;
          }
        }
        grid[r * side + c] = label;
      }
    }
  }

  std::vector<Location> locs(n);
  std::vector<double> y(n);
  std::vector<int> labels(n);
  std::normal_distribution<double> normal;
  const double cell = 1.0 / static_cast<double>(side);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = i / side, c = i % side;
    locs[i] = {(static_cast<double>(c) + 0.5) * cell, (static_cast<double>(r) + 0.5) * cell};
    const int g = grid[i];
    labels[i] = g;
    const double gd = static_cast<double>(g);
    y[i] = gd * gd + 5.0 * gd + std::pow(gd, 0.25) * normal(rng);
  }
  return {SpatialDataset(std::move(locs), std::move(y)), std::move(labels)};
}

}  // namespace fourn
