#pragma once

// Independent reference implementations used only by the tests. They share
// no code with the library beyond plain data types.

#include <cstddef>
#include <span>
#include <vector>

#include "fourn/spatial.hpp"

namespace oracle {

using Dense = std::vector<std::vector<double>>;

/// Gaussian elimination with partial pivoting.
std::vector<double> gauss_solve(Dense a, std::vector<double> b);

/// log|det A| via LU with partial pivoting.
double lu_logdet(Dense a);

/// sigma2 * exp(-d / rho) + tau2 * [i == j], written out independently.
Dense exp_cov_y(std::span<const fourn::Location> locs, double sigma2, double tau2, double rho);

/// log N(y; mu 1, A) using LU and Gaussian elimination.
double mvn_logpdf(std::span<const double> y, double mu, const Dense& a);

/// E[Y_0 | Y_N] for a Gaussian field: mu + c^T A^{-1} (y - mu), where c uses
/// the nugget-free kernel.
double conditional_mean(fourn::Location query, std::span<const fourn::Location> locs,
                        std::span<const double> y, double mu, double sigma2, double tau2,
                        double rho);

/// k nearest by exhaustive scan, ties by lower index; only indices < limit.
std::vector<std::size_t> linear_knn(std::span<const fourn::Location> pts, fourn::Location q,
                                    std::size_t k, std::size_t limit);

/// Scalar ADAM with beta1 0.9, beta2 0.999, eps 1e-8; returns the parameter
/// trace after each step.
std::vector<double> scalar_adam(double theta, std::span<const double> grads, double lr);

}  // namespace oracle
