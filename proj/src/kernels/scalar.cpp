#include "fourn/kernels/kernels.hpp"

namespace fourn::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < n; ++j) {
      const double s = a[r * n + j];
      if (s != 0.0) axpy(s, b + r * k, c + j * k, k);
    }
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * k;
    for (std::size_t j = 0; j < k; ++j) ci[j] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double s = a[i * n + l];
      if (s != 0.0) axpy(s, b + l * k, ci, k);
    }
  }
}

void squared_distances(const double* xs, const double* ys, std::size_t n, double qx, double qy,
                       double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    out[i] = dx * dx + dy * dy;
  }
}

constexpr KernelTable kTable{"scalar", dot, axpy, gemm_nt, gemm_tn_acc, gemm_nn,
                             squared_distances};

}  // namespace

const KernelTable& scalar_table() noexcept { return kTable; }

}  // namespace fourn::kernels
