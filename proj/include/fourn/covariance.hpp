#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fourn/matrix.hpp"
#include "fourn/spatial.hpp"

namespace fourn {

/// Parameters of Y = mu + W + eps with cov(W_i, W_j) = sigma2 * exp(-d/rho)
/// and eps ~ N(0, tau2).
struct CovParams {
  double mu = 0.0;
  double sigma2 = 1.0;  // partial sill
  double tau2 = 0.0;    // nugget
  double rho = 1.0;     // range

  /// Throws Error unless sigma2 > 0, tau2 >= 0, rho > 0 and all are finite.
  void validate() const;

  friend bool operator==(const CovParams&, const CovParams&) = default;
};

/// sigma2 * exp(-d / rho). The nugget is not part of the kernel.
double exp_cov(double d, const CovParams& params);

/// Covariance of Y over the given sites: kernel plus tau2 on the diagonal.
/// Throws NumericalError("singular covariance") for coincident sites when
/// tau2 == 0.
Matrix cov_matrix_y(std::span<const Location> locs, const CovParams& params);

/// In-place lower Cholesky factor of a small SPD matrix.
class Cholesky {
 public:
  Cholesky() = default;
  /// Throws NumericalError("not positive definite") on a nonpositive pivot.
  explicit Cholesky(const Matrix& a) { factor(a); }

  /// Reuses internal storage; returns false instead of throwing on failure.
  bool try_factor(const double* a, std::size_t n);
  void factor(const Matrix& a);

  std::size_t size() const noexcept { return n_; }
  double log_determinant() const;

  /// Solves A x = b in place.
  void solve_in_place(std::span<double> b) const;
  std::vector<double> solve(std::span<const double> b) const;

  /// Solves L z = b in place (forward substitution only).
  void forward_in_place(std::span<double> b) const;

  double lower(std::size_t r, std::size_t c) const { return l_[r * n_ + c]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> l_;
};

struct CholSolveResult {
  std::vector<double> solution;
  double log_determinant;
};

CholSolveResult chol_solve_logdet(const Matrix& a, std::span<const double> b);

}  // namespace fourn
