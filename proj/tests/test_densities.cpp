#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "durascale/densities.hpp"
#include "durascale/models.hpp"
#include "durascale/synth.hpp"

using namespace durascale;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Brute-force sup |F_a - F_b| over all sample points.
double ks_oracle(const std::vector<double> &a, const std::vector<double> &b) {
  auto ecdf = [](const std::vector<double> &s, double x) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [x](double v) { return v <= x; })) /
           static_cast<double>(s.size());
  };
  double d = 0.0;
  for (const auto *s : {&a, &b})
    for (double x : *s)
      d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
  return d;
}

} // namespace

TEST_CASE("sample moments", "[densities]") {
  const std::vector<double> x = {2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(sample_mean(x) == 5.0);
  CHECK_THAT(sample_std(x), WithinRel(std::sqrt(32.0 / 7.0), 1e-15));
  CHECK(sample_std(std::vector<double>{3.0}) == 0.0);
}

TEST_CASE("normalization drops zeros and divides by sigma", "[densities]") {
  const std::vector<double> tau = {0.0, 1.0, 3.0, 0.0, 5.0};
  const auto n = normalize(tau, "000001", ClassFilter::Filled);
  REQUIRE(n.values.size() == 3);
  REQUIRE(n.sigma);
  CHECK(*n.sigma == 2.0);
  CHECK(n.values == std::vector<double>{0.5, 1.5, 2.5});
  CHECK(n.stock_code == "000001");
  CHECK(n.trade_class_filter == ClassFilter::Filled);
  CHECK_THROWS_AS(normalize(std::vector<double>{2.0, 2.0, 0.0}), DegenerateSeries);
  CHECK_THROWS_AS(normalize(std::vector<double>{1.0}), DegenerateSeries);
  CHECK_THROWS_AS(normalize(std::vector<double>{1.0, -2.0}), DomainError);

  const auto a = normalize(std::vector<double>{1, 2, 3}, "a");
  const auto b = normalize(std::vector<double>{10, 30}, "b");
  const std::vector<NormalizedSeries> both = {a, b};
  const auto p = pool(both);
  CHECK(p.values.size() == 5);
  CHECK_FALSE(p.sigma);
  CHECK(p.stock_code == "ensemble");
}

TEST_CASE("log lattice", "[densities]") {
  const auto e = log_edges(0.0123, 45.6, 25);
  CHECK(e.front() <= 0.0123);
  CHECK(e.back() > 45.6);
  CHECK(e[1] > 0.0123);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double k = std::round(25.0 * std::log10(e[i]));
    CHECK_THAT(e[i], WithinRel(std::pow(10.0, k / 25.0), 1e-14));
  }
  // a value exactly on a lattice edge opens the first bin
  const auto f = log_edges(1.0, 10.0, 10);
  CHECK(f.front() == 1.0);
  CHECK(f.back() > 10.0);
  CHECK_THROWS_AS(log_edges(0.0, 1.0, 25), DomainError);
}

TEST_CASE("histogram bookkeeping", "[densities]") {
  const std::vector<double> v = {1.0, 1.5, 2.0, 9.99, 10.0, 0.5};
  const auto d = estimate_density(v, 10);
  std::size_t total = 0;
  for (auto c : d.counts)
    total += c;
  CHECK(total == v.size());
  CHECK(d.total_n == v.size());
  CHECK_THAT(d.in_range_mass(), WithinRel(1.0, 1e-12));
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK_THAT(d.centers[i], WithinRel(std::sqrt(d.bin_edges[i] * d.bin_edges[i + 1]), 1e-15));
  CHECK(d.bins_per_decade == 10);
  CHECK_THROWS_AS(estimate_density(std::vector<double>{}, 25), EmptyInput);
  CHECK_THROWS_AS(estimate_density(std::vector<double>{0.0, 1.0}, 25), DomainError);

  // values outside fixed edges still count toward n
  const auto e = estimate_density_on(v, {1.0, 2.0, 4.0});
  CHECK(e.counts == std::vector<std::size_t>{2, 1});
  CHECK_THAT(e.in_range_mass(), WithinRel(0.5, 1e-12));
}

TEST_CASE("bin counts follow multinomial bands", "[densities]") {
  const WeibullParams p(1.85, 0.68);
  const std::size_t n = 200000;
  const auto g = sample_weibull(p, n, 11);
  const auto d = estimate_density(g, 25);
  int checked = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double prob = std::exp(-1.85 * std::pow(d.bin_edges[i], 0.68)) -
                        std::exp(-1.85 * std::pow(d.bin_edges[i + 1], 0.68));
    const double expected = prob * static_cast<double>(n);
    if (expected < 50.0)
      continue;
    const double sd = std::sqrt(expected * (1.0 - prob));
    CHECK(std::abs(static_cast<double>(d.counts[i]) - expected) < 5.0 * sd);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("empirical CCDF and DKW bound", "[densities]") {
  const std::vector<double> v = {3.0, 1.0, 2.0, 2.0};
  const EmpiricalCcdf c(v);
  CHECK(c(0.5) == 1.0);
  CHECK(c(1.0) == 0.75);
  CHECK(c(2.0) == 0.25);
  CHECK(c(3.0) == 0.0);

  const QExpParams p(4.17, 1.65);
  const std::size_t n = 100000;
  const auto g = sample_qexp(p, n, 5);
  const auto cc = estimate_ccdf(g);
  const double eps = std::sqrt(std::log(2.0 / 1e-6) / (2.0 * static_cast<double>(n)));
  double worst = 0.0;
  for (const auto &[x, y] : cc.steps())
    worst = std::max(worst, std::abs(y - qexp_ccdf(p, x)));
  CHECK(worst < eps);
}

TEST_CASE("two-sample KS distance", "[densities]") {
  CHECK(ks_distance(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}) == 1.0);
  CHECK(ks_distance(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 40);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(37), b(53);
    for (auto &x : a)
      x = u(rng);
    for (auto &x : b)
      x = u(rng) + 3;
    CHECK_THAT(ks_distance(a, b), WithinAbs(ks_oracle(a, b), 1e-15));
  }
  CHECK_THAT(ks_critical_value(100, 100, 0.05), WithinRel(1.3581015 * std::sqrt(0.02), 1e-6));
  CHECK_THROWS_AS(ks_critical_value(10, 10, 0.0), DomainError);
}

TEST_CASE("collapse report", "[densities]") {
  const WeibullParams p(1.85, 0.68);
  std::vector<NormalizedSeries> same, unscaled;
  std::vector<std::vector<double>> raw;
  for (int i = 0; i < 4; ++i) {
    auto g = sample_weibull(p, 20000, 100 + i);
    unscaled.push_back(normalize(g, "s" + std::to_string(i)));
    const double s = std::pow(10.0, i / 3.0);
    for (double &v : g)
      v *= s;
    raw.push_back(g);
    same.push_back(normalize(g, "s" + std::to_string(i)));
  }
  const auto r = collapse_report(same, 0.01);
  CHECK(r.labels.size() == 4);
  CHECK(r.pairwise_ks.size() == 4);
  CHECK_THAT(r.pair_alpha, WithinRel(0.01 / 6.0, 1e-15));
  CHECK(r.pairwise_ks[1][2] == r.pairwise_ks[2][1]);
  // normalization removes the scale exactly
  const auto u = collapse_report(unscaled, 0.01);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK_THAT(r.pairwise_ks[i][j], WithinAbs(u.pairwise_ks[i][j], 1e-12));

  // two ensembles, one law, scales a decade apart
  auto a = sample_weibull(p, 100000, 200), b = sample_weibull(p, 100000, 201);
  for (double &v : b)
    v *= 10.0;
  const std::vector<NormalizedSeries> pair = {normalize(a, "a"), normalize(b, "b")};
  const auto two = collapse_report(pair, 0.01);
  INFO("max_ks " << two.max_ks << " critical " << two.max_ks_critical);
  CHECK(two.collapses());
  const std::vector<std::string> labels = {"a", "b", "c", "d"};
  const auto rr = collapse_statistics(raw, labels, 0.01);
  CHECK_FALSE(rr.collapses());
  CHECK(rr.max_ks > rr.max_ks_critical);

  CHECK_THROWS_AS(collapse_report(std::vector<NormalizedSeries>{same[0]}), TooFewEnsembles);
  std::vector<std::vector<double>> tiny = {{1, 2, 3}, {1, 2, 3}};
  CHECK_THROWS_AS(collapse_statistics(tiny, labels), TooFewSamples);
}
