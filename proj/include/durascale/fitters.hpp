#pragma once

// Calibration of the Weibull and q-exponential laws on normalized durations.
//
// MLE works on the raw sample through one-dimensional profile likelihoods.
// NLSE minimizes sum [ln rho_model(c) - ln rho_hat(c)]^2 over the occupied
// bins of a log-binned density, unweighted.
//
// The r.m.s. residual chi depends on the estimator:
//   MLE : chi = rms(rho_hat(c) - rho_model(c))         linear density
//   NLSE: chi = rms(ln rho_model(c) - ln rho_hat(c))   log density
// both over the occupied bins of the same log-binned density.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "durascale/densities.hpp"
#include "durascale/errors.hpp"
#include "durascale/models.hpp"
#include "durascale/optimize.hpp"

namespace durascale {

enum class Model { Weibull, QExponential };
enum class Estimator { MLE, NLSE };

inline std::string_view to_string(Model m) {
  return m == Model::Weibull ? "weibull" : "qexp";
}
inline std::string_view to_string(Estimator e) {
  return e == Estimator::MLE ? "mle" : "nlse";
}

inline constexpr std::string_view kMleResidualDefinition =
    "rms of (empirical density - model density) at geometric bin centers, occupied log bins";
inline constexpr std::string_view kNlseResidualDefinition =
    "rms of (ln model density - ln empirical density) at geometric bin centers, occupied log bins";

using ModelParams = std::variant<WeibullParams, QExpParams>;

struct FitResult {
  Model model;
  Estimator estimator;
  ModelParams params;
  double chi = 0.0;
  std::size_t n_samples = 0;
  std::size_t bins_used = 0;
  std::size_t bins_skipped = 0;
  int bins_per_decade = 0;
  bool converged = false;
  int iterations = 0;
  std::optional<double> log_likelihood{};

  const WeibullParams &weibull() const { return std::get<WeibullParams>(params); }
  const QExpParams &qexp() const { return std::get<QExpParams>(params); }

  std::optional<double> tail_exponent() const {
    if (model != Model::QExponential)
      return std::nullopt;
    return durascale::tail_exponent(qexp());
  }

  std::string_view residual_definition() const {
    return estimator == Estimator::MLE ? kMleResidualDefinition
                                       : kNlseResidualDefinition;
  }
};

/// Raised when an iteration budget runs out; carries the last iterate.
class NonConvergence : public ConvergenceError {
public:
  NonConvergence(const std::string &what, FitResult partial)
      : ConvergenceError(what), partial_(std::move(partial)) {}
  const FitResult &partial() const noexcept { return partial_; }

private:
  FitResult partial_;
};

/// The q-exponential likelihood peaks at (or indistinguishably from) the
/// exponential limit q -> 1. The exponential fallback is attached.
class TailTooLight : public DataError {
public:
  TailTooLight(double mu, double log_likelihood, double lr_statistic)
      : DataError("q-exponential MLE sits at the q -> 1 boundary"),
        fallback_mu_(mu), fallback_log_likelihood_(log_likelihood),
        lr_statistic_(lr_statistic) {}
  /// Rate of the exponential law mu e^(-mu g), mu = 1/mean.
  double fallback_mu() const noexcept { return fallback_mu_; }
  double fallback_log_likelihood() const noexcept { return fallback_log_likelihood_; }
  /// 2 (max profile log-likelihood - exponential log-likelihood).
  double lr_statistic() const noexcept { return lr_statistic_; }

private:
  double fallback_mu_;
  double fallback_log_likelihood_;
  double lr_statistic_;
};

// ---------------------------------------------------------------------------
// Likelihoods and residuals

inline double log_likelihood(const WeibullParams &p, std::span<const double> g) {
  double ll = 0.0;
  for (double v : g)
    ll += weibull_log_pdf(p, v);
  return ll;
}

inline double log_likelihood(const QExpParams &p, std::span<const double> g) {
  double ll = 0.0;
  for (double v : g)
    ll += qexp_log_pdf(p, v);
  return ll;
}

inline double model_pdf(const ModelParams &p, double g) {
  return std::visit(
      [g](const auto &m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, WeibullParams>)
          return weibull_pdf(m, g);
        else
          return qexp_pdf(m, g);
      },
      p);
}

inline double model_log_pdf(const ModelParams &p, double g) {
  return std::visit(
      [g](const auto &m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, WeibullParams>)
          return weibull_log_pdf(m, g);
        else
          return qexp_log_pdf(m, g);
      },
      p);
}

/// rms(rho_hat - rho_model) over occupied bins.
inline double chi_linear(const EmpiricalDensity &d, const ModelParams &p) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.counts[i] == 0)
      continue;
    const double r = d.density[i] - model_pdf(p, d.centers[i]);
    ss += r * r;
    ++n;
  }
  return n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
}

/// rms(ln rho_model - ln rho_hat) over occupied bins.
inline double chi_log(const EmpiricalDensity &d, const ModelParams &p) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.counts[i] == 0)
      continue;
    const double r = model_log_pdf(p, d.centers[i]) - std::log(d.density[i]);
    ss += r * r;
    ++n;
  }
  return n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

struct MleOptions {
  int bins_per_decade = kDefaultBinsPerDecade;
  std::size_t min_samples = 100;
  int max_iterations = 200;
  /// TailTooLight is raised when 2 (l_max - l_exponential) falls below this
  /// (chi-square, 1 dof, 1%).
  double tail_lr_critical = 6.635;
};

namespace detail {

inline void check_positive_sample(std::span<const double> g, std::size_t min_n) {
  if (g.size() < min_n)
    throw TooFewSamples("fit needs at least " + std::to_string(min_n) +
                        " positive samples, got " + std::to_string(g.size()));
  for (double v : g)
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("fit samples must be finite and strictly positive");
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  if (*lo == *hi)
    throw DegenerateSample("all samples are equal");
}

inline void attach_mle_chi(FitResult &r, std::span<const double> g, int bpd) {
  const auto d = estimate_density(g, bpd);
  r.chi = chi_linear(d, r.params);
  r.bins_used = d.occupied_bins();
  r.bins_skipped = d.size() - r.bins_used;
  r.bins_per_decade = bpd;
}

/// Root of a continuous f on [a, b] with f(a) > 0 > f(b) (Illinois variant of
/// regula falsi, with bisection fallback).
template <class F>
double bracketed_root(F &&f, double a, double b, double fa, double fb,
                      double x_tol, int max_iter, int &iters, bool &ok) {
  int side = 0;
  double c = a;
  ok = false;
  for (iters = 0; iters < max_iter; ++iters) {
    c = (a * fb - b * fa) / (fb - fa);
    if (!(c > std::min(a, b) && c < std::max(a, b)))
      c = 0.5 * (a + b);
    const double fc = f(c);
    if (fc == 0.0 || std::abs(b - a) <= x_tol) {
      ok = true;
      return c;
    }
    if ((fc > 0.0) == (fa > 0.0)) {
      a = c;
      fa = fc;
      if (side == -1)
        fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1)
        fa *= 0.5;
      side = 1;
    }
    if (std::abs(b - a) <= x_tol) {
      ok = true;
      return 0.5 * (a + b);
    }
  }
  return c;
}

} // namespace detail

/// Weibull MLE. Given beta, alpha = n / sum g^beta; beta solves the profile
/// score 1/beta + mean(ln g) - sum g^beta ln g / sum g^beta = 0, which is
/// strictly decreasing. Safeguarded Newton inside a sign bracket.
inline FitResult fit_weibull_mle(std::span<const double> g, const MleOptions &opt = {}) {
  detail::check_positive_sample(g, opt.min_samples);
  const std::size_t n = g.size();
  std::vector<double> lg(n);
  std::transform(g.begin(), g.end(), lg.begin(), [](double v) { return std::log(v); });
  const double lmean = sample_mean(lg);
  const double lmax = *std::max_element(lg.begin(), lg.end());

  struct Sums {
    double s0, s1, s2;
  };
  auto sums = [&](double beta) {
    Sums s{0.0, 0.0, 0.0};
    for (double l : lg) {
      const double w = std::exp(beta * (l - lmax));
      s.s0 += w;
      s.s1 += w * l;
      s.s2 += w * l * l;
    }
    return s;
  };
  auto score = [&](double beta, Sums &s) {
    s = sums(beta);
    return 1.0 / beta + lmean - s.s1 / s.s0;
  };

  Sums s{};
  double lo = 1.0, hi = 1.0;
  double h = score(1.0, s);
  int guard = 0;
  if (h > 0.0) {
    do {
      lo = hi;
      hi *= 2.0;
      h = score(hi, s);
    } while (h > 0.0 && ++guard < 60);
  } else {
    do {
      hi = lo;
      lo *= 0.5;
      h = score(lo, s);
    } while (h < 0.0 && ++guard < 60);
  }
  if (guard >= 60)
    throw DegenerateSample("Weibull profile score has no sign change");

  double beta = 0.5 * (lo + hi);
  bool converged = false;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const double hv = score(beta, s);
    if (hv > 0.0)
      lo = beta;
    else
      hi = beta;
    const double m1 = s.s1 / s.s0;
    const double var = s.s2 / s.s0 - m1 * m1;
    const double dh = -1.0 / (beta * beta) - var;
    double next = beta - hv / dh;
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    const double step = std::abs(next - beta);
    beta = next;
    if (step <= 1e-13 * beta || hi - lo <= 1e-14 * beta) {
      converged = true;
      break;
    }
  }
  s = sums(beta);
  const double log_alpha = std::log(static_cast<double>(n)) - beta * lmax - std::log(s.s0);
  FitResult r{.model = Model::Weibull,
              .estimator = Estimator::MLE,
              .params = WeibullParams(std::exp(log_alpha), beta)};
  r.n_samples = n;
  r.iterations = it + 1;
  r.converged = converged;
  r.log_likelihood = log_likelihood(r.weibull(), g);
  detail::attach_mle_chi(r, g, opt.bins_per_decade);
  if (!converged)
    throw NonConvergence("Weibull MLE exhausted its iteration budget", r);
  return r;
}

/// q-exponential MLE through its generalized Pareto form (shape q-1, scale
/// 1/mu). With theta = (q-1) mu and m(theta) = mean ln(1 + theta g), the
/// profile log-likelihood per sample is
///   l(theta)/n = ln theta - ln m - 1 - m,
/// maximized over ln theta; then q = 1 + m and mu = theta / m.
inline FitResult fit_qexp_mle(std::span<const double> g, const MleOptions &opt = {}) {
  detail::check_positive_sample(g, opt.min_samples);
  const std::size_t n = g.size();
  const double dn = static_cast<double>(n);
  const double mean = sample_mean(g);

  auto m_and_slope = [&](double theta, double &m, double &mp) {
    double a = 0.0, b = 0.0;
    for (double v : g) {
      const double t = theta * v;
      a += std::log1p(t);
      b += t / (1.0 + t);
    }
    m = a / dn;
    mp = b / dn; // theta * m'(theta)
  };
  // d(l/n)/d ln(theta)
  auto dscore = [&](double psi) {
    double m, tm;
    m_and_slope(std::exp(psi), m, tm);
    return 1.0 - tm / m - tm;
  };
  auto profile = [&](double theta) {
    double m, tm;
    m_and_slope(theta, m, tm);
    return std::log(theta) - std::log(m) - 1.0 - m;
  };

  const double ll_exp = -dn * (std::log(mean) + 1.0);
  // Scan ln(theta * mean) over [-14, 14] for + to - sign changes of the score.
  const double psi0 = -std::log(mean);
  constexpr int kGrid = 57;
  double best_psi = std::numeric_limits<double>::quiet_NaN();
  double best_ll = -std::numeric_limits<double>::infinity();
  int total_iters = 0;
  bool all_ok = true;
  double prev_psi = psi0 - 14.0;
  double prev_d = dscore(prev_psi);
  for (int k = 1; k < kGrid; ++k) {
    const double psi = psi0 - 14.0 + 28.0 * k / (kGrid - 1);
    const double d = dscore(psi);
    if (prev_d > 0.0 && d <= 0.0) {
      int iters = 0;
      bool ok = false;
      const double root = detail::bracketed_root(dscore, prev_psi, psi, prev_d, d,
                                                 1e-12, opt.max_iterations, iters, ok);
      total_iters += iters;
      all_ok = all_ok && ok;
      const double ll = dn * profile(std::exp(root));
      if (ll > best_ll) {
        best_ll = ll;
        best_psi = root;
      }
    }
    prev_psi = psi;
    prev_d = d;
  }

  if (std::isnan(best_psi) || 2.0 * (best_ll - ll_exp) < opt.tail_lr_critical)
    throw TailTooLight(1.0 / mean, ll_exp,
                       std::isnan(best_psi) ? 0.0 : 2.0 * (best_ll - ll_exp));

  const double theta = std::exp(best_psi);
  double m, tm;
  m_and_slope(theta, m, tm);
  FitResult r{.model = Model::QExponential,
              .estimator = Estimator::MLE,
              .params = QExpParams(theta / m, 1.0 + m)};
  r.n_samples = n;
  r.iterations = total_iters;
  r.converged = all_ok;
  r.log_likelihood = log_likelihood(r.qexp(), g);
  detail::attach_mle_chi(r, g, opt.bins_per_decade);
  if (!all_ok)
    throw NonConvergence("q-exponential MLE exhausted its iteration budget", r);
  return r;
}

// ---------------------------------------------------------------------------
// Nonlinear least squares on log densities

struct NlseOptions {
  /// Extra starting points besides the initial guess and its perturbation,
  /// typically the MLE estimate.
  std::vector<ModelParams> extra_starts;
  int max_iterations = 10000;
  std::size_t min_bins = 10;
  /// Bins with fewer counts are skipped like empty ones. The default keeps
  /// every occupied bin; single-count bins at the sparse ends of the range
  /// bias the fit toward heavier tails.
  std::size_t min_count = 1;
};

namespace detail {

// Log-parameterizations keep both models inside their domains:
//   Weibull (ln alpha, ln beta), q-exponential (ln mu, ln(q - 1)).
inline Point<2> to_internal(const ModelParams &p) {
  if (const auto *w = std::get_if<WeibullParams>(&p))
    return {std::log(w->alpha), std::log(w->beta)};
  const auto &q = std::get<QExpParams>(p);
  return {std::log(q.mu), std::log(q.q - 1.0)};
}

inline ModelParams from_internal(Model m, const Point<2> &x) {
  if (m == Model::Weibull)
    return WeibullParams(std::exp(x[0]), std::exp(x[1]));
  return QExpParams(std::exp(x[0]), 1.0 + std::exp(x[1]));
}

/// Log density and its gradient in internal coordinates.
inline double log_density_grad(Model m, const Point<2> &x, double g, Point<2> &grad) {
  const double lg = std::log(g);
  if (m == Model::Weibull) {
    const double alpha = std::exp(x[0]), beta = std::exp(x[1]);
    const double agb = alpha * std::exp(beta * lg);
    grad = {1.0 - agb, 1.0 + beta * lg * (1.0 - agb)};
    return x[0] + x[1] + (beta - 1.0) * lg - agb;
  }
  const double mu = std::exp(x[0]), k = std::exp(x[1]);
  const double kmg = k * mu * g;
  const double lb = std::log1p(kmg);
  const double frac = (1.0 + k) * mu * g / (1.0 + kmg);
  grad = {1.0 - frac, lb / k - frac};
  return x[0] - (1.0 + k) / k * lb;
}

} // namespace detail

/// NLSE fit of `model` to the occupied bins of `density`, multi-started from
/// {init, perturbed init, opt.extra_starts}: Nelder-Mead from each start, a
/// Levenberg-Marquardt polish, best optimum kept.
inline FitResult fit_nlse(const EmpiricalDensity &density, Model model,
                          const ModelParams &init, const NlseOptions &opt = {}) {
  if ((model == Model::Weibull) != std::holds_alternative<WeibullParams>(init))
    throw ParamError("initial parameters do not match the model");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (density.counts[i] < std::max<std::size_t>(opt.min_count, 1) ||
        !(density.density[i] > 0.0))
      continue;
    xs.push_back(density.centers[i]);
    ys.push_back(std::log(density.density[i]));
  }
  if (xs.size() < opt.min_bins)
    throw InsufficientBins("NLSE needs at least " + std::to_string(opt.min_bins) +
                           " occupied bins, got " + std::to_string(xs.size()));

  auto objective = [&](const Point<2> &x) {
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || std::abs(x[0]) > 300 ||
        std::abs(x[1]) > 300)
      return std::numeric_limits<double>::infinity();
    double ss = 0.0;
    Point<2> grad;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = detail::log_density_grad(model, x, xs[i], grad) - ys[i];
      ss += r * r;
    }
    return std::isfinite(ss) ? ss : std::numeric_limits<double>::infinity();
  };
  auto residuals = [&](const Point<2> &x) {
    ResidualBlock<2> b;
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || std::abs(x[0]) > 300 ||
        std::abs(x[1]) > 300)
      return b;
    b.r.resize(xs.size());
    b.jac.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      b.r[i] = detail::log_density_grad(model, x, xs[i], b.jac[i]) - ys[i];
    return b;
  };

  std::vector<Point<2>> starts;
  const auto x0 = detail::to_internal(init);
  starts.push_back(x0);
  for (const auto &e : opt.extra_starts)
    if ((model == Model::Weibull) == std::holds_alternative<WeibullParams>(e))
      starts.push_back(detail::to_internal(e));
  starts.push_back({x0[0] + 0.25, x0[1] - 0.25});

  SimplexOptions so;
  so.max_iterations = opt.max_iterations;
  LevenbergOptions lo;
  lo.max_iterations = std::min(opt.max_iterations, 500);

  MinimizeResult<2> best;
  bool best_converged = false;
  int iterations = 0;
  for (const auto &s : starts) {
    const auto nm = nelder_mead<2>(objective, s, so);
    auto lm = levenberg_marquardt<2>(residuals, nm.x, lo);
    iterations += nm.iterations + lm.iterations;
    const bool ok = nm.converged && lm.converged;
    if (!std::isfinite(lm.value) || lm.value > nm.value) {
      lm.x = nm.x;
      lm.value = nm.value;
    }
    if (lm.value < best.value) {
      best = lm;
      best_converged = ok;
    }
  }
  if (!std::isfinite(best.value))
    throw NonConvergence("NLSE found no finite objective",
                         FitResult{.model = model,
                                   .estimator = Estimator::NLSE,
                                   .params = init});

  FitResult r{.model = model,
              .estimator = Estimator::NLSE,
              .params = detail::from_internal(model, best.x)};
  r.chi = std::sqrt(best.value / static_cast<double>(xs.size()));
  r.n_samples = density.total_n;
  r.bins_used = xs.size();
  r.bins_skipped = density.size() - xs.size();
  r.bins_per_decade = density.bins_per_decade;
  r.converged = best_converged;
  r.iterations = iterations;
  if (!best_converged)
    throw NonConvergence("NLSE hit its iteration cap", r);
  return r;
}

/// Density table of a model evaluated exactly at the geometric centers of
/// `edges`; every bin is marked occupied.
inline EmpiricalDensity model_density_table(const ModelParams &p,
                                            std::vector<double> edges,
                                            int bins_per_decade = 0) {
  EmpiricalDensity d;
  d.bin_edges = std::move(edges);
  const std::size_t nb = d.bin_edges.size() - 1;
  d.centers.resize(nb);
  d.density.resize(nb);
  d.counts.assign(nb, 1);
  for (std::size_t i = 0; i < nb; ++i) {
    d.centers[i] = std::sqrt(d.bin_edges[i] * d.bin_edges[i + 1]);
    d.density[i] = model_pdf(p, d.centers[i]);
  }
  d.total_n = nb;
  d.bins_per_decade = bins_per_decade;
  return d;
}

// ---------------------------------------------------------------------------
// Model comparison

enum class Preference { Weibull, QExponential, Tie };

inline std::string_view to_string(Preference p) {
  switch (p) {
  case Preference::Weibull:
    return "weibull";
  case Preference::QExponential:
    return "qexp";
  case Preference::Tie:
    return "tie";
  }
  return "?";
}

struct ComparisonVerdict {
  Preference preferred = Preference::Tie;
  double chi_w = 0.0;
  double chi_q = 0.0;
  Estimator estimator = Estimator::MLE;
};

inline ComparisonVerdict compare_chi(double chi_w, double chi_q, Estimator e) {
  ComparisonVerdict v{Preference::Tie, chi_w, chi_q, e};
  if (chi_w < chi_q)
    v.preferred = Preference::Weibull;
  else if (chi_q < chi_w)
    v.preferred = Preference::QExponential;
  return v;
}

/// Prefers the model with strictly smaller chi. Argument order is irrelevant;
/// the fits are told apart by their model tag.
inline ComparisonVerdict compare_models(const FitResult &a, const FitResult &b) {
  if (a.estimator != b.estimator)
    throw MixedEstimators("cannot compare an MLE chi with an NLSE chi");
  if (a.model == b.model)
    throw DataError("comparison needs one Weibull and one q-exponential fit");
  if (!a.converged || !b.converged)
    throw DataError("comparison needs converged fits");
  const auto &w = a.model == Model::Weibull ? a : b;
  const auto &q = a.model == Model::Weibull ? b : a;
  return compare_chi(w.chi, q.chi, a.estimator);
}

/// Per-stock preference counts, the "(19/23)" style tallies.
struct PreferenceTally {
  std::size_t weibull = 0;
  std::size_t qexp = 0;
  std::size_t ties = 0;
  std::size_t total() const { return weibull + qexp + ties; }
};

inline PreferenceTally tally(std::span<const ComparisonVerdict> verdicts) {
  PreferenceTally t;
  for (const auto &v : verdicts) {
    if (v.preferred == Preference::Weibull)
      ++t.weibull;
    else if (v.preferred == Preference::QExponential)
      ++t.qexp;
    else
      ++t.ties;
  }
  return t;
}

} // namespace durascale
