#pragma once

// Mittag-Leffler survival function C(tau) = E_beta[-(tau/tau0)^beta].
//
// E_beta(-x) is evaluated in three regimes:
//  * the power series sum (-x)^n / Gamma(beta n + 1) when x is small and the
//    alternating sum does not cancel catastrophically;
//  * the large-x expansion sum_{k>=1} (-1)^(k+1) x^-k / Gamma(1 - beta k)
//    for x >= 50, truncated at its smallest term;
//  * in between, the completely monotone spectral representation
//      E_beta(-t^beta) = sin(beta pi)/(beta pi)
//                        * int_0^inf exp(-t s^(1/beta)) / (s^2 + 2 s cos(beta pi) + 1) ds
//    integrated by adaptive Gauss-Kronrod in u = ln s.
// Each regime carries an error estimate; a result is returned only when that
// estimate meets the requested relative tolerance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "durascale/errors.hpp"
#include "durascale/quadrature.hpp"

namespace durascale {

struct MittagLefflerParams {
  double beta;
  double tau0;

  MittagLefflerParams(double beta_, double tau0_) : beta(beta_), tau0(tau0_) {
    if (!(beta > 0.0 && beta <= 1.0))
      throw ParamError("Mittag-Leffler order must lie in (0, 1]");
    if (!(tau0 > 0.0) || !std::isfinite(tau0))
      throw ParamError("Mittag-Leffler time scale must be positive");
  }
};

enum class MittagLefflerRegime { Exact, Series, Integral, Asymptotic };

struct MittagLefflerValue {
  double value;
  double error_estimate;
  MittagLefflerRegime regime;
};

namespace detail {

/// 1 / Gamma(z), zero at the poles z = 0, -1, -2, ...
inline double reciprocal_gamma(double z) {
  if (z <= 0.0 && z == std::floor(z))
    return 0.0;
  if (z < 0.5) {
    // reflection: 1/Gamma(z) = Gamma(1 - z) sin(pi z) / pi
    return std::tgamma(1.0 - z) * std::sin(std::numbers::pi * z) /
           std::numbers::pi;
  }
  return 1.0 / std::tgamma(z);
}

inline constexpr double kSeriesMaxX = 5.0;
inline constexpr double kAsymptoticMinX = 50.0;

inline bool ml_series(double beta, double x, double tol, MittagLefflerValue &out) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double lx = std::log(x);
  double sum = 1.0;
  double biggest = 1.0;
  double prev = 1.0;
  for (int n = 1; n < 2000; ++n) {
    const double mag = std::exp(n * lx - std::lgamma(beta * n + 1.0));
    const double term = (n % 2 == 0) ? mag : -mag;
    sum += term;
    biggest = std::max(biggest, mag);
    // stop once terms are shrinking and negligible
    if (mag < prev && mag <= 1e-17 * std::max(std::abs(sum), 1e-300)) {
      const double err = 4.0 * biggest * eps * std::sqrt(static_cast<double>(n));
      out = {sum, err, MittagLefflerRegime::Series};
      return sum > 0.0 && err <= tol * sum;
    }
    prev = mag;
  }
  return false;
}

inline bool ml_asymptotic(double beta, double x, double tol,
                          MittagLefflerValue &out) {
  double sum = 0.0;
  double last = std::numeric_limits<double>::infinity();
  double err = std::numeric_limits<double>::infinity();
  double xk = 1.0;
  for (int k = 1; k <= 80; ++k) {
    xk /= x;
    const double term = xk * reciprocal_gamma(1.0 - beta * k);
    const double mag = std::abs(term);
    if (mag == 0.0)
      continue;
    if (mag > last)
      break; // divergent from here on; the previous term bounds the error
    sum += (k % 2 == 1) ? term : -term;
    last = mag;
    err = mag;
    if (mag <= 1e-17 * std::abs(sum))
      break;
  }
  out = {sum, err, MittagLefflerRegime::Asymptotic};
  return sum > 0.0 && err <= tol * sum;
}

inline bool ml_integral(double beta, double x, double tol,
                        MittagLefflerValue &out) {
  const double pi = std::numbers::pi;
  const double c = std::cos(beta * pi);
  const double sn = std::sin(beta * pi);
  const double t = std::pow(x, 1.0 / beta);
  const double inv_beta = 1.0 / beta;
  auto f = [&](double u) {
    const double s = std::exp(u);
    const double damp = t * std::exp(u * inv_beta);
    if (damp > 745.0)
      return 0.0;
    // s^2 + 2 s cos + 1, written to avoid cancellation near s = -cos
    const double d = s + c;
    return s * std::exp(-damp) / (d * d + sn * sn);
  };
  constexpr double L = 46.0; // integrand <= e^-|u| beyond, so tails < 1e-20
  std::vector<double> cuts{-L, L, 0.0};
  if (c < 0.0)
    cuts.push_back(std::log(-c)); // near-pole of the kernel
  if (t > 0.0)
    cuts.push_back(std::clamp(-beta * std::log(t), -L, L)); // damping onset
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto q = integrate_adaptive(f, cuts, 0.05 * tol);
  const double scale = sn / (beta * pi);
  const double value = scale * q.value;
  const double err = scale * q.error + 1e-19;
  out = {value, err, MittagLefflerRegime::Integral};
  return value > 0.0 && err <= tol * value;
}

} // namespace detail

/// E_beta(-x) for 0 < beta <= 1 and x >= 0. Throws ConvergenceError when no
/// regime reaches `rel_tol`.
inline MittagLefflerValue mittag_leffler_neg(double beta, double x,
                                             double rel_tol = 1e-12) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw ParamError("Mittag-Leffler order must lie in (0, 1]");
  if (!(x >= 0.0))
    throw DomainError("Mittag-Leffler argument must be non-negative");
  if (x == 0.0)
    return {1.0, 0.0, MittagLefflerRegime::Exact};
  if (beta == 1.0)
    return {std::exp(-x), 0.0, MittagLefflerRegime::Exact};
  if (std::isinf(x))
    return {0.0, 0.0, MittagLefflerRegime::Exact};

  MittagLefflerValue v{};
  if (x <= detail::kSeriesMaxX && detail::ml_series(beta, x, rel_tol, v))
    return v;
  if (x >= detail::kAsymptoticMinX && detail::ml_asymptotic(beta, x, rel_tol, v))
    return v;
  if (detail::ml_integral(beta, x, rel_tol, v))
    return v;
  throw ConvergenceError("Mittag-Leffler evaluation missed tolerance at beta=" +
                         std::to_string(beta) + ", x=" + std::to_string(x));
}

inline double mittag_leffler_survival(const MittagLefflerParams &p, double tau,
                                      double rel_tol = 1e-12) {
  if (!(tau >= 0.0))
    throw DomainError("survival time must be non-negative");
  const double x = std::pow(tau / p.tau0, p.beta);
  return mittag_leffler_neg(p.beta, x, rel_tol).value;
}

/// Small-time branch exp[-(tau/tau0)^beta / Gamma(1 + beta)].
inline double mittag_leffler_stretched_branch(const MittagLefflerParams &p,
                                              double tau) {
  return std::exp(-std::pow(tau / p.tau0, p.beta) / std::tgamma(1.0 + p.beta));
}

/// Large-time branch (tau/tau0)^-beta / Gamma(1 - beta); zero for beta = 1.
inline double mittag_leffler_power_branch(const MittagLefflerParams &p,
                                          double tau) {
  return std::pow(tau / p.tau0, -p.beta) * detail::reciprocal_gamma(1.0 - p.beta);
}

} // namespace durascale
