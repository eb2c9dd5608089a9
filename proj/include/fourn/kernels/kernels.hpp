#pragma once

// Data-parallel inner loops used by the perceptron and the spatial index.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2+FMA variant is compiled into a separate translation unit and chosen at
// first use when the CPU supports it. Setting FOURN_KERNELS=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <string_view>

namespace fourn::kernels {

struct KernelTable {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // C[m x n] = A[m x k] * B[n x k]^T   (all row-major)
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                  std::size_t k);

  // C[n x k] += A[m x n]^T * B[m x k]
  void (*gemm_tn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k);

  // C[m x k] = A[m x n] * B[n x k]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                  std::size_t k);

  // out[i] = (xs[i]-qx)^2 + (ys[i]-qy)^2, evaluated without fused multiply-add
  // so that every variant returns bitwise-identical values.
  void (*squared_distances)(const double* xs, const double* ys, std::size_t n, double qx,
                            double qy, double* out);
};

const KernelTable& scalar_table() noexcept;

// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table() noexcept;

// Table used by the library; resolved once, may be overridden with use().
const KernelTable& active() noexcept;

// Select a table by name ("scalar", "avx2"). Returns false if unavailable.
bool use(std::string_view name) noexcept;

}  // namespace fourn::kernels
