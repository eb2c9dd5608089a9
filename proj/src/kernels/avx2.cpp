// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "fourn/kernels/kernels.hpp"

namespace fourn::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four output columns per pass share each load of the A row.
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  const std::size_t k4 = k & ~std::size_t{3};
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + (j + 0) * k;
      const double* b1 = b + (j + 1) * k;
      const double* b2 = b + (j + 2) * k;
      const double* b3 = b + (j + 3) * k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      for (std::size_t l = 0; l < k4; l += 4) {
        const __m256d va = _mm256_loadu_pd(ai + l);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + l), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + l), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + l), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + l), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (std::size_t l = k4; l < k; ++l) {
        r0 += ai[l] * b0[l];
        r1 += ai[l] * b1[l];
        r2 += ai[l] * b2[l];
        r3 += ai[l] * b3[l];
      }
      ci[j] = r0;
      ci[j + 1] = r1;
      ci[j + 2] = r2;
      ci[j + 3] = r3;
    }
    for (; j < n; ++j) ci[j] = dot(ai, b + j * k, k);
  }
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
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vqy);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    out[i] = dx * dx + dy * dy;
  }
}

constexpr KernelTable kTable{"avx2", dot, axpy, gemm_nt, gemm_tn_acc, gemm_nn, squared_distances};

}  // namespace

const KernelTable& avx2_table_unchecked() noexcept { return kTable; }

}  // namespace fourn::kernels
