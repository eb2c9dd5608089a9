#include <doctest.h>

#include <cmath>
#include <numbers>
#include <algorithm>
#include <random>
#include <span>

#include "fourn/error.hpp"
#include "fourn/simulate.hpp"
#include "fourn/vecchia.hpp"
#include "oracles.hpp"

using namespace fourn;

namespace {

SpatialDataset random_dataset(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(1.0, 2.0);
  std::vector<Location> p(n);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = {u(rng), u(rng)};
    v[i] = g(rng);
  }
  return SpatialDataset(std::move(p), std::move(v));
}

double exact_loglik(const SpatialDataset& d, const CovParams& p) {
  return oracle::mvn_logpdf(d.values(), p.mu, oracle::exp_cov_y(d.locations(), p.sigma2, p.tau2, p.rho));
}

}  // namespace

TEST_CASE("single site equals the marginal density") {
  const SpatialDataset d({{0.4, 0.4}}, {2.0});
  const CovParams p{0.5, 1.5, 0.5, 0.2};
  const auto t = build_neighbor_table_training(d, 3);
  const double v = 2.0;
  CHECK(vecchia_loglik(d, t, p) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * v) - 1.5 * 1.5 / (2 * v)).epsilon(1e-14));
}

TEST_CASE("two sites equal the bivariate density") {
  const SpatialDataset d({{0.1, 0.2}, {0.3, 0.25}}, {0.4, -1.1});
  const CovParams p{0.1, 2.0, 0.3, 0.25};
  const auto t = build_neighbor_table_training(d, 1);
  CHECK(std::fabs(vecchia_loglik(d, t, p) - exact_loglik(d, p)) <= 1e-12);
}

TEST_CASE("full conditioning is exact and ordering invariant") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_dataset(60 + 20 * trial, rng);
    const CovParams p{0.7, 1.0 + trial, 0.2 * trial, 0.1 + 0.05 * trial};
    const double exact = exact_loglik(d, p);
    for (OrderingKind k : {OrderingKind::Coordinate, OrderingKind::Random, OrderingKind::Identity}) {
      const auto ordered = d.subset(order_reference(d, {k, 3}));
      const auto t = build_neighbor_table_training(ordered, d.size() - 1);
      CHECK(std::fabs(vecchia_loglik(ordered, t, p) - exact) <= 1e-8);
    }
  }
}

TEST_CASE("conditional variances shrink as the neighbor set grows") {
  std::mt19937_64 rng(8);
  const auto d = random_dataset(200, rng);
  const CovParams p{0, 1, 0.1, 0.2};
  auto cond_var = [&](std::size_t i, std::span<const std::size_t> nb) {
    std::vector<Location> locs;
    for (auto j : nb) locs.push_back(d.location(j));
    const auto a = oracle::exp_cov_y(locs, p.sigma2, p.tau2, p.rho);
    std::vector<double> c;
    for (const auto& l : locs) c.push_back(p.sigma2 * std::exp(-distance(l, d.location(i)) / p.rho));
    const auto w = oracle::gauss_solve(a, c);
    double v = p.sigma2 + p.tau2;
    for (std::size_t k = 0; k < c.size(); ++k) v -= w[k] * c[k];
    return v;
  };
  const auto first = SpatialDataset({d.location(0)}, {d.value(0)});
  const double first_term = vecchia_loglik(first, build_neighbor_table_training(first, 1), p);
  for (std::size_t m = 1; m < 12; ++m) {
    const auto small = build_neighbor_table_training(d, m);
    const auto large = build_neighbor_table_training(d, m + 1);
    for (std::size_t i = 1; i < d.size(); ++i) {
      const auto a = small.neighbors(i), b = large.neighbors(i);
      REQUIRE(std::equal(a.begin(), a.end(), b.begin()));
      CHECK(cond_var(i, b) <= cond_var(i, a) + 1e-12);
    }
    const auto one = build_neighbor_table_training(first, m);
    CHECK(vecchia_loglik(first, one, p) == first_term);
  }
}

TEST_CASE("fit never decreases the likelihood") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 4; ++trial) {
    const auto d = random_dataset(80, rng);
    const CovParams init = default_initial_params(d);
    const auto fit = fit_params(d, 10, init, 300);
    CHECK(fit.loglik >= fit.initial_loglik);
    const auto ordered = d.subset(order_reference(d, {}));
    const auto t = build_neighbor_table_training(ordered, 10);
    CHECK(fit.initial_loglik == doctest::Approx(vecchia_loglik(ordered, t, init)).epsilon(1e-12));
    CHECK(fit.loglik == doctest::Approx(vecchia_loglik(ordered, t, fit.params)).epsilon(1e-12));
    CHECK(fit.evaluations <= 300 + 10);
  }
}

TEST_CASE("budget exhaustion returns best so far without throwing") {
  std::mt19937_64 rng(10);
  const auto d = random_dataset(50, rng);
  const auto fit = fit_params(d, 5, default_initial_params(d), 5);
  CHECK_FALSE(fit.converged);
  CHECK(fit.loglik >= fit.initial_loglik);
}

TEST_CASE("fit is translation equivariant") {
  const auto base = sim_gp(300, {0, 2, 0.3, 0.2}, 77);
  std::vector<double> shifted = base.values();
  for (double& v : shifted) v += 10.0;
  const auto moved = base.with_values(shifted);
  CovParams init = default_initial_params(base);
  CovParams init2 = init;
  init2.mu += 10.0;
  const auto a = fit_params(base, 10, init, 2000);
  const auto b = fit_params(moved, 10, init2, 2000);
  CHECK(b.params.mu - a.params.mu == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(b.params.sigma2 == doctest::Approx(a.params.sigma2).epsilon(1e-3));
  CHECK(b.params.tau2 == doctest::Approx(a.params.tau2).epsilon(1e-3));
  CHECK(b.params.rho == doctest::Approx(a.params.rho).epsilon(1e-3));
}

TEST_CASE("fit recovers simulation parameters in most seeds") {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = sim_gp(2000, {0, 5, 1, 0.16}, 1000 + seed);
    const auto fit = fit_params(d, 10, default_initial_params(d), 2000);
    if (fit.params.rho >= 0.08 && fit.params.rho <= 0.32 && fit.params.sigma2 >= 2.5 &&
        fit.params.sigma2 <= 10.0)
      ++good;
  }
  CHECK(good >= 18);
}

TEST_CASE("constant field") {
  std::mt19937_64 rng(12);
  auto d = random_dataset(30, rng);
  d = d.with_values(std::vector<double>(30, 4.0));
  const auto fit = fit_params(d, 5, default_initial_params(d), 500);
  CHECK(fit.params.mu == 4.0);
  CHECK(fit.loglik >= fit.initial_loglik);
}
