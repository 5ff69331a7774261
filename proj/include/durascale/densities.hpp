#pragma once

// Normalized durations, log-binned densities, empirical CCDFs and the
// two-sample Kolmogorov-Smirnov collapse report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "durascale/errors.hpp"
#include "durascale/tape.hpp"

namespace durascale {

inline constexpr int kDefaultBinsPerDecade = 25;

/// g = tau / sigma for one (stock, class). `sigma` is absent for pooled
/// ensembles whose members were normalized separately.
struct NormalizedSeries {
  std::vector<double> values;
  std::optional<double> sigma;
  std::string stock_code;
  ClassFilter trade_class_filter = ClassFilter::All;
};

inline double sample_mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation with the n-1 denominator (two-pass).
inline double sample_std(std::span<const double> x) {
  if (x.size() < 2)
    return 0.0;
  const double m = sample_mean(x);
  double ss = 0.0;
  for (double v : x)
    ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Divides the positive entries by their sample standard deviation. Zero
/// durations are dropped before sigma is computed.
inline NormalizedSeries normalize(std::span<const double> durations,
                                  std::string stock_code = {},
                                  ClassFilter cls = ClassFilter::All) {
  std::vector<double> pos;
  pos.reserve(durations.size());
  for (double v : durations) {
    if (v < 0.0 || !std::isfinite(v))
      throw DomainError("durations must be finite and non-negative");
    if (v > 0.0)
      pos.push_back(v);
  }
  if (pos.size() < 2)
    throw DegenerateSeries("normalization needs at least 2 positive durations");
  const double sigma = sample_std(pos);
  if (!(sigma > 0.0))
    throw DegenerateSeries("durations have zero spread");
  for (double &v : pos)
    v /= sigma;
  return {std::move(pos), sigma, std::move(stock_code), cls};
}

inline NormalizedSeries normalize(const DurationSeries &series) {
  const auto secs = series.seconds();
  return normalize(secs, series.stock_code, series.trade_class_filter);
}

/// Concatenation of already normalized ensembles.
inline NormalizedSeries pool(std::span<const NormalizedSeries> ensembles) {
  NormalizedSeries out;
  std::size_t n = 0;
  for (const auto &e : ensembles)
    n += e.values.size();
  out.values.reserve(n);
  for (const auto &e : ensembles)
    out.values.insert(out.values.end(), e.values.begin(), e.values.end());
  out.stock_code = "ensemble";
  if (ensembles.size() == 1) {
    out.sigma = ensembles.front().sigma;
    out.stock_code = ensembles.front().stock_code;
  }
  if (!ensembles.empty())
    out.trade_class_filter = ensembles.front().trade_class_filter;
  return out;
}

// ---------------------------------------------------------------------------
// Log-binned density

struct EmpiricalDensity {
  std::vector<double> bin_edges;
  std::vector<double> centers;
  std::vector<double> density;
  std::vector<std::size_t> counts;
  std::size_t total_n = 0;
  int bins_per_decade = 0;

  std::size_t size() const noexcept { return counts.size(); }
  double width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }

  std::size_t occupied_bins() const {
    return static_cast<std::size_t>(
        std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }

  /// Probability mass covered by the bins; 1 when every value fell in range.
  double in_range_mass() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      m += density[i] * width(i);
    return m;
  }
};

/// Edge k of the universal lattice 10^(k / bins_per_decade).
inline double lattice_edge(long k, int bins_per_decade) {
  return std::pow(10.0, static_cast<double>(k) / bins_per_decade);
}

/// Lattice edges with edges.front() <= lo and edges.back() > hi.
inline std::vector<double> log_edges(double lo, double hi, int bins_per_decade) {
  if (!(lo > 0.0) || !(hi >= lo))
    throw DomainError("log edges need 0 < lo <= hi");
  if (bins_per_decade < 1)
    throw DomainError("bins_per_decade must be >= 1");
  long k0 = static_cast<long>(std::floor(std::log10(lo) * bins_per_decade));
  while (lattice_edge(k0, bins_per_decade) > lo)
    --k0;
  long k1 = static_cast<long>(std::floor(std::log10(hi) * bins_per_decade)) + 1;
  while (lattice_edge(k1, bins_per_decade) <= hi)
    ++k1;
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(k1 - k0 + 1));
  for (long k = k0; k <= k1; ++k)
    edges.push_back(lattice_edge(k, bins_per_decade));
  return edges;
}

/// Histogram on given ascending edges, bins [e_i, e_i+1). Values outside
/// the edges still count in total_n, so the density integrates to the
/// in-range fraction.
inline EmpiricalDensity estimate_density_on(std::span<const double> values,
                                            std::vector<double> edges) {
  if (edges.size() < 2)
    throw DomainError("need at least one bin");
  EmpiricalDensity d;
  d.bin_edges = std::move(edges);
  const std::size_t nb = d.bin_edges.size() - 1;
  d.counts.assign(nb, 0);
  for (double v : values) {
    const auto it = std::upper_bound(d.bin_edges.begin(), d.bin_edges.end(), v);
    if (it == d.bin_edges.begin() || it == d.bin_edges.end())
      continue;
    ++d.counts[static_cast<std::size_t>(it - d.bin_edges.begin()) - 1];
  }
  d.total_n = values.size();
  d.centers.resize(nb);
  d.density.resize(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    d.centers[i] = std::sqrt(d.bin_edges[i] * d.bin_edges[i + 1]);
    d.density[i] = d.total_n == 0
                       ? 0.0
                       : static_cast<double>(d.counts[i]) /
                             (static_cast<double>(d.total_n) * d.width(i));
  }
  return d;
}

/// Logarithmically binned density over [min, max] of a positive sample.
inline EmpiricalDensity estimate_density(std::span<const double> values,
                                         int bins_per_decade = kDefaultBinsPerDecade) {
  if (values.empty())
    throw EmptyInput("density estimation needs a non-empty sample");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*lo > 0.0))
    throw DomainError("log-binned density needs strictly positive values");
  auto d = estimate_density_on(values, log_edges(*lo, *hi, bins_per_decade));
  d.bins_per_decade = bins_per_decade;
  return d;
}

// ---------------------------------------------------------------------------
// Empirical CCDF

/// C(x) = #{v > x} / n, right-continuous.
class EmpiricalCcdf {
public:
  explicit EmpiricalCcdf(std::span<const double> values)
      : sorted_(values.begin(), values.end()) {
    if (sorted_.empty())
      throw EmptyInput("CCDF needs a non-empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(sorted_.end() - it) /
           static_cast<double>(sorted_.size());
  }

  std::size_t size() const noexcept { return sorted_.size(); }
  const std::vector<double> &sorted() const noexcept { return sorted_; }

  /// (x, C(x)) at each distinct sample value.
  std::vector<std::pair<double, double>> steps() const {
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(sorted_.size());
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
      if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i])
        continue;
      out.emplace_back(sorted_[i], static_cast<double>(sorted_.size() - i - 1) / n);
    }
    return out;
  }

private:
  std::vector<double> sorted_;
};

inline EmpiricalCcdf estimate_ccdf(std::span<const double> values) {
  return EmpiricalCcdf(values);
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov

/// sup_x |F_a(x) - F_b(x)| for two ascending samples.
inline double ks_distance_sorted(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw EmptyInput("KS distance needs two non-empty samples");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x)
      ++i;
    while (j < b.size() && b[j] == x)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_distance(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return ks_distance_sorted(sa, sb);
}

/// Asymptotic two-sample critical value c(alpha) sqrt((n+m)/(n m)) with
/// c(alpha) = sqrt(-ln(alpha/2) / 2).
inline double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("alpha must lie in (0, 1)");
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

struct CollapseReport {
  std::vector<std::string> labels;
  std::vector<std::size_t> sizes;
  /// Symmetric, zero diagonal.
  std::vector<std::vector<double>> pairwise_ks;
  double max_ks = 0.0;
  std::pair<std::size_t, std::size_t> max_pair{0, 0};
  /// KS distance of each ensemble to the pooled ensemble.
  std::vector<double> pooled_deviation;
  /// Family-wise level; each pair is tested at alpha / (number of pairs).
  double alpha = 0.01;
  double pair_alpha = 0.01;
  /// Critical value for the pair attaining max_ks.
  double max_ks_critical = 0.0;
  /// max over pairs of ks / critical(pair); below 1 means every pair passes.
  double worst_ratio = 0.0;

  bool collapses() const { return worst_ratio < 1.0; }
};

/// Pairwise KS over arbitrary positive samples (normalized or not).
inline CollapseReport collapse_statistics(std::span<const std::vector<double>> samples,
                                          std::span<const std::string> labels,
                                          double alpha = 0.01,
                                          std::size_t min_samples = 100) {
  const std::size_t k = samples.size();
  if (k < 2)
    throw TooFewEnsembles("collapse report needs at least 2 ensembles");
  for (const auto &s : samples)
    if (s.size() < min_samples)
      throw TooFewSamples("each ensemble needs at least " +
                          std::to_string(min_samples) + " values");

  std::vector<std::vector<double>> sorted(samples.begin(), samples.end());
  for (auto &s : sorted)
    std::sort(s.begin(), s.end());

  CollapseReport r;
  r.alpha = alpha;
  const double n_pairs = static_cast<double>(k * (k - 1) / 2);
  r.pair_alpha = alpha / n_pairs;
  r.labels.assign(labels.begin(), labels.end());
  r.labels.resize(k);
  for (const auto &s : sorted)
    r.sizes.push_back(s.size());
  r.pairwise_ks.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = ks_distance_sorted(sorted[i], sorted[j]);
      r.pairwise_ks[i][j] = r.pairwise_ks[j][i] = d;
      const double crit = ks_critical_value(sorted[i].size(), sorted[j].size(),
                                            r.pair_alpha);
      if (d > r.max_ks || (i == 0 && j == 1)) {
        r.max_ks = d;
        r.max_pair = {i, j};
        r.max_ks_critical = crit;
      }
      r.worst_ratio = std::max(r.worst_ratio, d / crit);
    }

  std::vector<double> pooled;
  for (const auto &s : sorted)
    pooled.insert(pooled.end(), s.begin(), s.end());
  std::sort(pooled.begin(), pooled.end());
  for (const auto &s : sorted)
    r.pooled_deviation.push_back(ks_distance_sorted(s, pooled));
  return r;
}

inline CollapseReport collapse_report(std::span<const NormalizedSeries> ensembles,
                                      double alpha = 0.01) {
  std::vector<std::vector<double>> samples;
  std::vector<std::string> labels;
  for (const auto &e : ensembles) {
    samples.push_back(e.values);
    labels.push_back(e.stock_code);
  }
  return collapse_statistics(samples, labels, alpha);
}

} // namespace durascale
