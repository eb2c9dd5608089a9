#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fourn/kernels/kernels.hpp"

using namespace fourn::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= tol * (1.0 + std::fabs(b[i])));
}

// Straight loops written in the test, independent of the library kernels.
std::vector<double> naive_gemm_nt(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t m, std::size_t n, std::size_t k) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[j * k + p];
  return c;
}

void check_table(const KernelTable& t, std::mt19937_64& rng) {
  for (std::size_t n : {0, 1, 3, 4, 7, 8, 15, 16, 33, 100}) {
    auto a = random_vec(n, rng), b = random_vec(n, rng);
    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i];
    CHECK(t.dot(a.data(), b.data(), n) == doctest::Approx(ref).epsilon(1e-12));

    auto y = b;
    t.axpy(0.7, a.data(), y.data(), n);
    std::vector<double> yref(n);
    for (std::size_t i = 0; i < n; ++i) yref[i] = b[i] + 0.7 * a[i];
    check_close(y, yref, 1e-14);
  }
  const std::size_t shapes[][3] = {{1, 1, 1}, {5, 3, 7}, {9, 13, 33}, {16, 8, 4}, {3, 17, 1}};
  for (const auto& shape : shapes) {
    const std::size_t m = shape[0], n = shape[1], k = shape[2];
    auto a = random_vec(m * k, rng), b = random_vec(n * k, rng);
    std::vector<double> c(m * n);
    t.gemm_nt(a.data(), b.data(), c.data(), m, n, k);
    check_close(c, naive_gemm_nt(a, b, m, n, k), 1e-12);

    // C[n x k] += A[m x n]^T B[m x k]
    auto a2 = random_vec(m * n, rng), b2 = random_vec(m * k, rng), c2 = random_vec(n * k, rng);
    auto ref = c2;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) ref[i * k + j] += a2[r * n + i] * b2[r * k + j];
    t.gemm_tn_acc(a2.data(), b2.data(), c2.data(), m, n, k);
    check_close(c2, ref, 1e-12);

    // C[m x k] = A[m x n] B[n x k]
    auto a3 = random_vec(m * n, rng), b3 = random_vec(n * k, rng);
    std::vector<double> c3(m * k, 99.0), ref3(m * k, 0.0);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) ref3[r * k + j] += a3[r * n + i] * b3[i * k + j];
    t.gemm_nn(a3.data(), b3.data(), c3.data(), m, n, k);
    check_close(c3, ref3, 1e-12);
  }
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  std::mt19937_64 rng(1);
  check_table(scalar_table(), rng);
}

TEST_CASE("avx2 kernels match naive loops") {
  const KernelTable* t = avx2_table();
  if (!t) {
    MESSAGE("avx2 kernels unavailable on this machine; skipped");
    return;
  }
  std::mt19937_64 rng(2);
  check_table(*t, rng);
}

TEST_CASE("avx2 and scalar kernels agree") {
  const KernelTable* v = avx2_table();
  if (!v) return;
  const KernelTable& s = scalar_table();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 70)(rng);
    auto xs = random_vec(n, rng), ys = random_vec(n, rng);
    std::vector<double> o1(n), o2(n);
    s.squared_distances(xs.data(), ys.data(), n, 0.3, -0.1, o1.data());
    v->squared_distances(xs.data(), ys.data(), n, 0.3, -0.1, o2.data());
    CHECK(o1 == o2);  // bitwise: neighbor tie-breaking depends on it

    const std::size_t m = 1 + n % 9, k = 1 + n % 13, p = 1 + n;
    auto a = random_vec(m * p, rng), b = random_vec(k * p, rng);
    std::vector<double> c1(m * k), c2(m * k);
    s.gemm_nt(a.data(), b.data(), c1.data(), m, k, p);
    v->gemm_nt(a.data(), b.data(), c2.data(), m, k, p);
    check_close(c2, c1, 1e-12);
  }
}

TEST_CASE("kernel selection") {
  const std::string original = active().name;
  CHECK(use("scalar"));
  CHECK(std::string_view(active().name) == "scalar");
  CHECK_FALSE(use("neon-does-not-exist"));
  if (avx2_table()) {
    CHECK(use("avx2"));
    CHECK(std::string_view(active().name) == "avx2");
  }
  CHECK(use(original));
}
