#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "durascale/conditional.hpp"
#include "durascale/synth.hpp"

using namespace durascale;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<DurationPair> pairs_of(const std::vector<double> &tau) {
  const double s = *normalize(tau).sigma;
  std::vector<double> g(tau);
  for (double &v : g)
    v /= s;
  return successive_pairs(g);
}

std::vector<double> acd(double a, double b, std::size_t n, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.model = GeneratorModel::ACD;
  cfg.acd = AcdSpec{1.0, a, b};
  cfg.n = n;
  cfg.seed = seed;
  return generate(cfg);
}

} // namespace

TEST_CASE("successive pairs stay within runs and skip zeros", "[conditional]") {
  const std::vector<double> g = {1, 2, 0, 3, 4, 5, 6};
  const std::vector<std::size_t> runs = {0, 4};
  const auto p = successive_pairs(g, runs);
  REQUIRE(p.size() == 3);
  CHECK(p[0].g0 == 1);
  CHECK(p[0].g == 2);
  CHECK(p[1].g0 == 4); // (3, 4) crosses into the second run
  CHECK(p[2].g0 == 5);
  CHECK(successive_pairs(std::vector<double>{1.0}).empty());

  DurationSeries s;
  s.durations = {100, 200, 0, 300};
  s.session_starts = {0};
  const auto q = successive_pairs(s);
  REQUIRE(q.size() == 1);
  CHECK_THAT(q[0].g / q[0].g0, WithinRel(2.0, 1e-15));
}

TEST_CASE("quintile partition sizes and edges", "[conditional]") {
  std::vector<double> ten(10);
  std::iota(ten.begin(), ten.end(), 1.0);
  const auto p10 = partition_quintiles(ten, 5);
  CHECK(p10.sizes() == std::array<std::size_t, 5>{2, 2, 2, 2, 2});
  CHECK(p10.edges == std::array<double, 4>{2.5, 4.5, 6.5, 8.5});

  std::vector<double> eleven = {11, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  const auto p11 = partition_quintiles(eleven, 5);
  CHECK(p11.sizes() == std::array<std::size_t, 5>{3, 2, 2, 2, 2});
  for (std::size_t idx : p11.groups[0])
    CHECK(eleven[idx] <= 3.0);

  CHECK_THROWS_AS(partition_quintiles(ten), TooFewSamples);
  CHECK_THROWS_AS(partition_quintiles(std::vector<double>{1, 2, 3, 4}, 0), TooFewSamples);
}

TEST_CASE("average ranks and Spearman trend", "[conditional]") {
  const auto r = detail::average_ranks(std::vector<double>{10, 20, 20, 5});
  CHECK(r == std::vector<double>{2.0, 3.5, 3.5, 1.0});

  const std::vector<double> x = {1, 2, 3, 4, 5, 6};
  CHECK(spearman_trend(x, std::vector<double>{1, 4, 9, 16, 25, 36}).rho == 1.0);
  CHECK(spearman_trend(x, std::vector<double>{1, 4, 9, 16, 25, 36}).p_increasing == 0.0);
  CHECK(spearman_trend(x, std::vector<double>{6, 5, 4, 3, 2, 1}).p_increasing == 1.0);
  // 1 - 6 sum d^2 / (n (n^2 - 1)) without ties
  const std::vector<double> y = {2, 1, 4, 3, 6, 5};
  const auto t = spearman_trend(x, y);
  CHECK_THAT(t.rho, WithinRel(1.0 - 6.0 * 6.0 / (6.0 * 35.0), 1e-14));
  CHECK(t.p_increasing > 0.0);
  CHECK(t.p_increasing < 0.05);
  CHECK_THROWS_AS(spearman_trend(std::vector<double>{1, 2}, std::vector<double>{1, 2}), TooFewSamples);
  CHECK_THROWS_AS(spearman_trend(x, std::vector<double>{1, 2}), DomainError);
}

TEST_CASE("mean conditional duration", "[conditional]") {
  const auto pairs = pairs_of(sample_weibull(WeibullParams(1.0, 0.7), 50000, 1));
  const auto mc = mean_conditional(pairs, 20);
  std::size_t total = 0;
  double weighted = 0.0;
  for (const auto &b : mc.bins) {
    total += b.count;
    weighted += b.mean * static_cast<double>(b.count);
    CHECK(b.count > 0);
    CHECK(b.low_confidence == (b.count < kLowConfidencePairs));
    CHECK(b.g0_lo < b.g0_center);
    CHECK(b.g0_center < b.g0_hi);
  }
  CHECK(total == pairs.size());
  CHECK(mc.bins.size() <= 20);
  double gm = 0.0;
  for (const auto &p : pairs)
    gm += p.g;
  gm /= static_cast<double>(pairs.size());
  CHECK_THAT(mc.grand_mean, WithinRel(gm, 1e-12));
  CHECK_THAT(weighted / static_cast<double>(total), WithinRel(gm, 1e-12));
  CHECK_THROWS_AS(mean_conditional({}, 20), EmptyInput);
}

TEST_CASE("z curves", "[conditional]") {
  const auto pairs = pairs_of(sample_weibull(WeibullParams(1.0, 0.7), 20000, 2));
  const auto part = partition_pairs(pairs);
  const auto d = conditional_densities(pairs, part, 10);
  for (std::size_t i = 1; i < 5; ++i)
    CHECK(d[i].bin_edges == d[0].bin_edges);
  const auto z = z_curves(d);
  for (std::size_t b = 0; b < z[0].z.size(); ++b) {
    const double expect = std::log((static_cast<double>(z[0].count_q5[b]) / static_cast<double>(part.groups[4].size())) /
                                   (static_cast<double>(z[0].count_qi[b]) / static_cast<double>(part.groups[0].size())));
    CHECK_THAT(z[0].z[b], WithinAbs(expect, 1e-12));
  }
  auto same = d;
  same[4] = same[0];
  const auto zs = z_curves(same);
  for (const auto &c : zs[0].z)
    CHECK(c == 0.0);
  auto other = d;
  other[2] = estimate_density(std::vector<double>{1.0, 2.0}, 10);
  CHECK_THROWS_AS(z_curves(other), DomainError);
}

TEST_CASE("i.i.d. and ACD profiles", "[conditional]") {
  const auto iid = conditional_profile(pairs_of(sample_weibull(WeibullParams(1.0, 0.7), 100000, 3)));
  for (double f : iid.tail_fraction)
    CHECK_THAT(f, WithinAbs(0.5, 0.02));
  CHECK(iid.group_sizes[0] >= iid.group_sizes[4]);

  const auto clustered = conditional_profile(pairs_of(acd(0.2, 0.7, 100000, 4)));
  CHECK(clustered.tail_fraction[4] > clustered.tail_fraction[0] + 0.05);
  const auto trend = mean_conditional_trend(clustered.mean_conditional);
  CHECK(trend.rho > 0.8);
  CHECK(trend.p_increasing < 1e-3);
}
