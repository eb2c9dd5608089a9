#include "fourn/covariance.hpp"

#include <cmath>
#include <string>

#include "fourn/error.hpp"

namespace fourn {

void CovParams::validate() const {
  if (!std::isfinite(mu) || !std::isfinite(sigma2) || !std::isfinite(tau2) || !std::isfinite(rho))
    throw Error("covariance parameters must be finite");
  if (!(sigma2 > 0.0)) throw Error("partial sill sigma2 must be positive");
  if (!(tau2 >= 0.0)) throw Error("nugget tau2 must be nonnegative");
  if (!(rho > 0.0)) throw Error("range rho must be positive");
}

double exp_cov(double d, const CovParams& params) {
  if (!(d >= 0.0)) throw Error("distance must be nonnegative, got " + std::to_string(d));
  return params.sigma2 * std::exp(-d / params.rho);
}

Matrix cov_matrix_y(std::span<const Location> locs, const CovParams& params) {
  const std::size_t n = locs.size();
  Matrix c(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    c(j, j) = params.sigma2 + params.tau2;
    for (std::size_t k = 0; k < j; ++k) {
      const double d = distance(locs[j], locs[k]);
      if (d <= kDuplicateTolerance && params.tau2 == 0.0) throw NumericalError("singular covariance");
      const double v = exp_cov(d, params);
      c(j, k) = v;
      c(k, j) = v;
    }
  }
  return c;
}

bool Cholesky::try_factor(const double* a, std::size_t n) {
  n_ = n;
  l_.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= l_[j * n + k] * l_[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    l_[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l_[i * n + k] * l_[j * n + k];
      l_[i * n + j] = s / ljj;
    }
  }
  return true;
}

void Cholesky::factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error("Cholesky needs a square matrix");
  if (!try_factor(a.data(), a.rows())) throw NumericalError("not positive definite");
}

double Cholesky::log_determinant() const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_; ++j) s += 2.0 * std::log(l_[j * n_ + j]);
  return s;
}

void Cholesky::forward_in_place(std::span<double> b) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_[i * n_ + k] * b[k];
    b[i] = s / l_[i * n_ + i];
  }
}

void Cholesky::solve_in_place(std::span<double> b) const {
  if (b.size() != n_) throw Error("right-hand side has the wrong length");
  forward_in_place(b);
  for (std::size_t ii = n_; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n_; ++k) s -= l_[k * n_ + ii] * b[k];
    b[ii] = s / l_[ii * n_ + ii];
  }
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

CholSolveResult chol_solve_logdet(const Matrix& a, std::span<const double> b) {
  if (a.rows() != b.size()) throw Error("dimension mismatch in chol_solve_logdet");
  const Cholesky chol(a);
  return {chol.solve(b), chol.log_determinant()};
}

}  // namespace fourn
