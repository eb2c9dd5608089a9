#include "fourn/vecchia.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "fourn/error.hpp"

namespace fourn {

VecchiaObjective::VecchiaObjective(const SpatialDataset& ordered, const NeighborTable& table)
    : values_(ordered.values()) {
  if (table.mode() != NeighborMode::Training) throw Error("Vecchia likelihood needs a training table");
  if (table.size() != ordered.size()) throw Error("neighbor table does not match the dataset");
  const auto& locs = ordered.locations();
  offsets_.reserve(table.size() + 1);
  pair_offsets_.reserve(table.size() + 1);
  offsets_.push_back(0);
  pair_offsets_.push_back(0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto nb = table.neighbors(i);
    for (std::size_t a = 0; a < nb.size(); ++a) {
      if (nb[a] >= i) throw Error("training neighbor table admits a non-predecessor");
      neighbor_index_.push_back(nb[a]);
      cross_dist_.push_back(distance(locs[i], locs[nb[a]]));
      for (std::size_t b = 0; b < nb.size(); ++b) pair_dist_.push_back(distance(locs[nb[a]], locs[nb[b]]));
    }
    offsets_.push_back(neighbor_index_.size());
    pair_offsets_.push_back(pair_dist_.size());
  }
}

double VecchiaObjective::loglik(const CovParams& params) const {
  const double total_var = params.sigma2 + params.tau2;
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> cov;
  std::vector<double> cross;
  std::vector<double> resid;
  Cholesky chol;
  double ll = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const std::size_t k = offsets_[i + 1] - offsets_[i];
    double mean = params.mu;
    double var = total_var;
    if (k > 0) {
      const double* pd = pair_dist_.data() + pair_offsets_[i];
      cov.resize(k * k);
      for (std::size_t a = 0; a < k; ++a) {
        cov[a * k + a] = total_var;
        for (std::size_t b = 0; b < a; ++b) {
          const double v = params.sigma2 * std::exp(-pd[a * k + b] / params.rho);
          cov[a * k + b] = v;
          cov[b * k + a] = v;
        }
      }
      if (!chol.try_factor(cov.data(), k)) throw NumericalError("not positive definite");
      cross.resize(k);
      resid.resize(k);
      for (std::size_t a = 0; a < k; ++a) {
        cross[a] = params.sigma2 * std::exp(-cross_dist_[offsets_[i] + a] / params.rho);
        resid[a] = values_[neighbor_index_[offsets_[i] + a]] - params.mu;
      }
      chol.forward_in_place(cross);
      chol.forward_in_place(resid);
      for (std::size_t a = 0; a < k; ++a) {
        mean += cross[a] * resid[a];
        var -= cross[a] * cross[a];
      }
    }
    if (!(var > 0.0)) throw NumericalError("nonpositive conditional variance");
    const double r = values_[i] - mean;
    ll += -0.5 * (log_2pi + std::log(var)) - 0.5 * r * r / var;
  }
  return ll;
}

double vecchia_loglik(const SpatialDataset& ordered, const NeighborTable& table,
                      const CovParams& params) {
  params.validate();
  return VecchiaObjective(ordered, table).loglik(params);
}

CovParams default_initial_params(const SpatialDataset& dataset) {
  if (dataset.empty()) throw Error("empty reference set");
  const auto& v = dataset.values();
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double y : v) mean += y;
  mean /= n;
  double var = 0.0;
  for (double y : v) var += (y - mean) * (y - mean);
  var /= n;
  if (!(var > 0.0)) var = 1.0;
  double min_x = dataset.location(0).x, max_x = min_x;
  double min_y = dataset.location(0).y, max_y = min_y;
  for (const Location& l : dataset.locations()) {
    min_x = std::min(min_x, l.x);
    max_x = std::max(max_x, l.x);
    min_y = std::min(min_y, l.y);
    max_y = std::max(max_y, l.y);
  }
  double diag = std::hypot(max_x - min_x, max_y - min_y);
  if (!(diag > 0.0)) diag = 1.0;
  return {mean, 0.8 * var, 0.2 * var, 0.1 * diag};
}

namespace {

constexpr double kSimplexTolerance = 1e-6;
// Stand-in for -loglik where the likelihood is undefined; finite so the
// simplex treats the vertex as merely bad.
constexpr double kPenalty = 1e300;

struct NmContext {
  const VecchiaObjective* objective;
  std::size_t evaluations = 0;
  double best_value = std::numeric_limits<double>::infinity();
  CovParams best{};
};

CovParams from_theta(const gsl_vector* t) {
  return {gsl_vector_get(t, 0), std::exp(gsl_vector_get(t, 1)), std::exp(gsl_vector_get(t, 2)),
          std::exp(gsl_vector_get(t, 3))};
}

double negative_loglik(const gsl_vector* theta, void* raw) {
  auto* ctx = static_cast<NmContext*>(raw);
  ++ctx->evaluations;
  const CovParams p = from_theta(theta);
  if (!std::isfinite(p.sigma2) || !std::isfinite(p.rho) || !std::isfinite(p.tau2) ||
      !(p.sigma2 > 0.0) || !(p.rho > 0.0))
    return kPenalty;
  double value = kPenalty;
  try {
    const double ll = ctx->objective->loglik(p);
    if (std::isfinite(ll)) value = -ll;
  } catch (const NumericalError&) {
    // infeasible region
  }
  if (value < ctx->best_value) {
    ctx->best_value = value;
    ctx->best = p;
  }
  return value;
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace

FitResult fit_params_on_table(const SpatialDataset& ordered, const NeighborTable& table,
                              const CovParams& init, std::size_t budget) {
  if (ordered.size() < 10) throw Error("parameter fitting needs at least 10 observations");
  if (!std::isfinite(init.mu) || !(init.sigma2 > 0.0) || !(init.tau2 >= 0.0) || !(init.rho > 0.0))
    throw Error("invalid initial covariance parameters");
  const VecchiaObjective objective(ordered, table);

  FitResult result;
  result.initial_loglik = objective.loglik(init);

  const auto& v = ordered.values();
  if (std::all_of(v.begin(), v.end(), [&](double y) { return y == v.front(); })) {
    // Constant field: every residual vanishes at mu = y, which dominates any
    // other mean for the same covariance parameters.
    result.params = init;
    result.params.mu = v.front();
    result.loglik = objective.loglik(result.params);
    result.converged = true;
    return result;
  }

  double mean = 0.0, sq = 0.0;
  for (double y : v) mean += y;
  mean /= static_cast<double>(v.size());
  for (double y : v) sq += (y - mean) * (y - mean);
  const double sd = std::sqrt(sq / static_cast<double>(v.size()));

  // A zero nugget has no log; start just above it.
  const double tau2_start = std::max(init.tau2, 1e-6 * init.sigma2);

  std::unique_ptr<gsl_vector, VectorDeleter> x0(gsl_vector_alloc(4));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(4));
  gsl_vector_set(x0.get(), 0, init.mu);
  gsl_vector_set(x0.get(), 1, std::log(init.sigma2));
  gsl_vector_set(x0.get(), 2, std::log(tau2_start));
  gsl_vector_set(x0.get(), 3, std::log(init.rho));
  gsl_vector_set(step.get(), 0, 0.5 * sd);
  gsl_vector_set(step.get(), 1, 0.5);
  gsl_vector_set(step.get(), 2, 0.5);
  gsl_vector_set(step.get(), 3, 0.5);

  NmContext ctx{&objective};
  gsl_multimin_function fn{&negative_loglik, 4, &ctx};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> nm(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4));
  gsl_error_handler_t* previous = gsl_set_error_handler_off();
  int status = gsl_multimin_fminimizer_set(nm.get(), &fn, x0.get(), step.get());
  bool converged = false;
  while (status == GSL_SUCCESS && ctx.evaluations < budget) {
    status = gsl_multimin_fminimizer_iterate(nm.get());
    if (status != GSL_SUCCESS) break;
    if (gsl_multimin_fminimizer_size(nm.get()) < kSimplexTolerance) {
      converged = true;
      break;
    }
  }
  gsl_set_error_handler(previous);

  result.evaluations = ctx.evaluations;
  result.converged = converged;
  if (std::isfinite(ctx.best_value) && ctx.best_value < kPenalty &&
      -ctx.best_value >= result.initial_loglik) {
    result.params = ctx.best;
    result.loglik = -ctx.best_value;
  } else {
    result.params = init;
    result.loglik = result.initial_loglik;
  }
  return result;
}

FitResult fit_params(const SpatialDataset& dataset, std::size_t m, const CovParams& init,
                     std::size_t budget, OrderingScheme ordering) {
  if (dataset.size() < 10) throw Error("parameter fitting needs at least 10 observations");
  const auto perm = order_reference(dataset, ordering);
  const SpatialDataset ordered = dataset.subset(perm);
  const NeighborTable table = build_neighbor_table_training(ordered, m);
  return fit_params_on_table(ordered, table, init, budget);
}

}  // namespace fourn
