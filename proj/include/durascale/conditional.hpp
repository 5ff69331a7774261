#pragma once

// Dependence of a normalized duration g on its predecessor g0.
//
// Pairs (g0, g) are successive nonzero durations inside one session of one
// stock. The g0 values are split into rank quintiles Q1..Q5; the densities
// p(g | g0 in Qi) share one bin grid so that z_i = ln[p(g|Q5) / p(g|Qi)] can
// be formed bin by bin. Under independence every p(g|Qi) equals rho(g) and
// <g|g0> = <g> for all g0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "durascale/densities.hpp"
#include "durascale/errors.hpp"
#include "durascale/tape.hpp"

namespace durascale {

struct DurationPair {
  double g0;
  double g;
};

/// Pairs from a sequence split into runs starting at `run_starts` (indices,
/// ascending; an empty list means one run). Pairs touching a zero are dropped.
inline std::vector<DurationPair> successive_pairs(std::span<const double> g,
                                                  std::span<const std::size_t> run_starts = {}) {
  std::vector<DurationPair> out;
  if (g.size() < 2)
    return out;
  out.reserve(g.size() - 1);
  std::size_t next_start = 0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    while (next_start < run_starts.size() && run_starts[next_start] <= i)
      ++next_start;
    if (next_start < run_starts.size() && run_starts[next_start] == i + 1)
      continue; // i is the last duration of its run
    if (g[i] > 0.0 && g[i + 1] > 0.0)
      out.push_back({g[i], g[i + 1]});
  }
  return out;
}

/// Normalizes a series by the standard deviation of its nonzero durations and
/// forms within-session pairs.
inline std::vector<DurationPair> successive_pairs(const DurationSeries &series) {
  const auto secs = series.seconds();
  const double sigma = *normalize(secs).sigma;
  std::vector<double> g(secs.size());
  std::transform(secs.begin(), secs.end(), g.begin(),
                 [sigma](double v) { return v / sigma; });
  return successive_pairs(g, series.session_starts);
}

// ---------------------------------------------------------------------------
// Quintile partition

struct QuintilePartition {
  /// Indices into the partitioned sequence, Q1 (smallest) to Q5.
  std::array<std::vector<std::size_t>, 5> groups;
  /// Midpoints between the largest value of Qi and the smallest of Qi+1.
  std::array<double, 4> edges{};

  std::array<std::size_t, 5> sizes() const {
    std::array<std::size_t, 5> s{};
    for (std::size_t i = 0; i < 5; ++i)
      s[i] = groups[i].size();
    return s;
  }
};

/// Rank split into five groups of sizes differing by at most one, the extra
/// elements going to the lowest groups. Ties are broken by position, so equal
/// values may straddle a boundary.
inline QuintilePartition partition_quintiles(std::span<const double> values,
                                             std::size_t min_samples = 1000) {
  if (values.size() < std::max<std::size_t>(min_samples, 5))
    throw TooFewSamples("quintile partition needs at least " +
                        std::to_string(std::max<std::size_t>(min_samples, 5)) +
                        " values, got " + std::to_string(values.size()));
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  QuintilePartition p;
  const std::size_t base = values.size() / 5, extra = values.size() % 5;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    p.groups[i].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    if (i > 0)
      p.edges[i - 1] = 0.5 * (values[p.groups[i - 1].back()] + values[p.groups[i].front()]);
  }
  return p;
}

inline QuintilePartition partition_pairs(std::span<const DurationPair> pairs,
                                         std::size_t min_samples = 1000) {
  std::vector<double> g0(pairs.size());
  std::transform(pairs.begin(), pairs.end(), g0.begin(),
                 [](const DurationPair &p) { return p.g0; });
  return partition_quintiles(g0, min_samples);
}

// ---------------------------------------------------------------------------
// Conditional densities and z curves

/// p(g | g0 in Qi) for i = 1..5 on the lattice spanning all g of `pairs`.
inline std::array<EmpiricalDensity, 5>
conditional_densities(std::span<const DurationPair> pairs, const QuintilePartition &part,
                      int bins_per_decade = kDefaultBinsPerDecade) {
  for (std::size_t i = 0; i < 5; ++i)
    if (part.groups[i].empty())
      throw EmptyGroup("quintile Q" + std::to_string(i + 1) + " is empty");
  double lo = pairs[part.groups[0].front()].g, hi = lo;
  for (const auto &p : pairs) {
    lo = std::min(lo, p.g);
    hi = std::max(hi, p.g);
  }
  const auto edges = log_edges(lo, hi, bins_per_decade);
  std::array<EmpiricalDensity, 5> out;
  std::vector<double> g;
  for (std::size_t i = 0; i < 5; ++i) {
    g.clear();
    for (std::size_t idx : part.groups[i])
      g.push_back(pairs[idx].g);
    out[i] = estimate_density_on(g, edges);
    out[i].bins_per_decade = bins_per_decade;
  }
  return out;
}

struct ZCurve {
  std::vector<double> centers;
  std::vector<double> z;
  /// Counts behind the numerator (Q5) and denominator (Qi) at each point.
  std::vector<std::size_t> count_q5;
  std::vector<std::size_t> count_qi;
};

/// z_i(g) = ln[p(g|Q5) / p(g|Qi)], i = 1..4, on bins occupied in both.
inline std::array<ZCurve, 4> z_curves(const std::array<EmpiricalDensity, 5> &d) {
  for (std::size_t i = 0; i < 4; ++i)
    if (d[i].bin_edges != d[4].bin_edges)
      throw DomainError("z curves need conditional densities on one bin grid");
  std::array<ZCurve, 4> out;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t b = 0; b < d[4].size(); ++b) {
      if (d[4].counts[b] == 0 || d[i].counts[b] == 0)
        continue;
      out[i].centers.push_back(d[4].centers[b]);
      out[i].z.push_back(std::log(d[4].density[b] / d[i].density[b]));
      out[i].count_q5.push_back(d[4].counts[b]);
      out[i].count_qi.push_back(d[i].counts[b]);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Mean conditional duration

struct MeanConditionalBin {
  double g0_lo = 0.0;
  double g0_hi = 0.0;
  double g0_center = 0.0;
  double mean = 0.0;
  /// Sample standard deviation of g in the bin over sqrt(count).
  double std_error = 0.0;
  std::size_t count = 0;
  bool low_confidence = false;
};

struct MeanConditional {
  std::vector<MeanConditionalBin> bins;
  double grand_mean = 0.0;
  double grand_std_error = 0.0;
};

inline constexpr std::size_t kLowConfidencePairs = 50;

/// <g | g0> on `g0_bins` equal-ratio bins spanning [min g0, max g0]. Empty
/// bins are omitted; bins with fewer than 50 pairs are flagged.
inline MeanConditional mean_conditional(std::span<const DurationPair> pairs, int g0_bins) {
  if (pairs.empty())
    throw EmptyInput("mean conditional duration needs pairs");
  if (g0_bins < 5)
    throw DomainError("mean conditional duration needs at least 5 g0 bins");
  double lo = pairs.front().g0, hi = lo;
  for (const auto &p : pairs) {
    if (!(p.g0 > 0.0))
      throw DomainError("g0 must be positive");
    lo = std::min(lo, p.g0);
    hi = std::max(hi, p.g0);
  }
  const std::size_t nb = static_cast<std::size_t>(g0_bins);
  const double llo = std::log(lo);
  const double step = (std::log(hi) - llo) / static_cast<double>(nb);
  std::vector<double> sum(nb, 0.0), sum2(nb, 0.0);
  std::vector<std::size_t> cnt(nb, 0);
  double gs = 0.0, gs2 = 0.0;
  for (const auto &p : pairs) {
    std::size_t b = step > 0.0 ? static_cast<std::size_t>((std::log(p.g0) - llo) / step) : 0;
    b = std::min(b, nb - 1);
    sum[b] += p.g;
    sum2[b] += p.g * p.g;
    ++cnt[b];
    gs += p.g;
    gs2 += p.g * p.g;
  }
  auto se = [](double s, double s2, std::size_t n) {
    if (n < 2)
      return 0.0;
    const double dn = static_cast<double>(n);
    const double var = std::max(0.0, (s2 - s * s / dn) / (dn - 1.0));
    return std::sqrt(var / dn);
  };
  MeanConditional out;
  out.grand_mean = gs / static_cast<double>(pairs.size());
  out.grand_std_error = se(gs, gs2, pairs.size());
  for (std::size_t b = 0; b < nb; ++b) {
    if (cnt[b] == 0)
      continue;
    MeanConditionalBin r;
    r.g0_lo = std::exp(llo + step * static_cast<double>(b));
    r.g0_hi = std::exp(llo + step * static_cast<double>(b + 1));
    r.g0_center = std::sqrt(r.g0_lo * r.g0_hi);
    r.count = cnt[b];
    r.mean = sum[b] / static_cast<double>(cnt[b]);
    r.std_error = se(sum[b], sum2[b], cnt[b]);
    r.low_confidence = cnt[b] < kLowConfidencePairs;
    out.bins.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trend test

struct TrendTest {
  double rho = 0.0;
  double t_statistic = 0.0;
  /// P(rho >= observed) under no association (Student t approximation).
  double p_increasing = 1.0;
  std::size_t n = 0;
};

namespace detail {
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]])
      ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}
} // namespace detail

/// Spearman rank correlation with a one-sided test for an increasing trend.
inline TrendTest spearman_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DomainError("trend test needs paired sequences");
  if (x.size() < 3)
    throw TooFewSamples("trend test needs at least 3 points");
  const auto rx = detail::average_ranks(x), ry = detail::average_ranks(y);
  const double mx = sample_mean(rx), my = sample_mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  TrendTest t;
  t.n = x.size();
  if (sxx == 0.0 || syy == 0.0)
    return t;
  t.rho = sxy / std::sqrt(sxx * syy);
  const double dof = static_cast<double>(t.n) - 2.0;
  if (t.rho >= 1.0) {
    t.t_statistic = std::numeric_limits<double>::infinity();
    t.p_increasing = 0.0;
    return t;
  }
  if (t.rho <= -1.0) {
    t.t_statistic = -std::numeric_limits<double>::infinity();
    t.p_increasing = 1.0;
    return t;
  }
  t.t_statistic = t.rho * std::sqrt(dof / (1.0 - t.rho * t.rho));
  boost::math::students_t dist(dof);
  t.p_increasing = boost::math::cdf(boost::math::complement(dist, t.t_statistic));
  return t;
}

/// Trend of the binned <g|g0> against g0, low-confidence bins excluded.
inline TrendTest mean_conditional_trend(const MeanConditional &mc) {
  std::vector<double> x, y;
  for (const auto &b : mc.bins)
    if (!b.low_confidence) {
      x.push_back(b.g0_center);
      y.push_back(b.mean);
    }
  return spearman_trend(x, y);
}

// ---------------------------------------------------------------------------
// Profile

struct ConditionalOptions {
  int bins_per_decade = kDefaultBinsPerDecade;
  int g0_bins = 20;
  std::size_t min_samples = 1000;
};

struct ConditionalProfile {
  std::array<double, 4> quintile_edges{};
  std::array<std::size_t, 5> group_sizes{};
  std::array<EmpiricalDensity, 5> conditional_densities;
  std::array<ZCurve, 4> z_curves;
  MeanConditional mean_conditional;
  double grand_mean = 0.0;
  /// Fraction of each group's g above the median g of all pairs.
  std::array<double, 5> tail_fraction{};
  double median_g = 0.0;
};

inline ConditionalProfile conditional_profile(std::span<const DurationPair> pairs,
                                              const ConditionalOptions &opt = {}) {
  const auto part = partition_pairs(pairs, opt.min_samples);
  ConditionalProfile p;
  p.quintile_edges = part.edges;
  p.group_sizes = part.sizes();
  p.conditional_densities = conditional_densities(pairs, part, opt.bins_per_decade);
  p.z_curves = z_curves(p.conditional_densities);
  p.mean_conditional = mean_conditional(pairs, opt.g0_bins);
  p.grand_mean = p.mean_conditional.grand_mean;

  std::vector<double> g(pairs.size());
  std::transform(pairs.begin(), pairs.end(), g.begin(),
                 [](const DurationPair &q) { return q.g; });
  const auto mid = g.begin() + static_cast<std::ptrdiff_t>(g.size() / 2);
  std::nth_element(g.begin(), mid, g.end());
  p.median_g = *mid;
  for (std::size_t i = 0; i < 5; ++i) {
    std::size_t above = 0;
    for (std::size_t idx : part.groups[i])
      above += pairs[idx].g > p.median_g ? 1 : 0;
    p.tail_fraction[i] = static_cast<double>(above) / static_cast<double>(part.groups[i].size());
  }
  return p;
}

} // namespace durascale
