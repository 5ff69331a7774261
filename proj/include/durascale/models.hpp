#pragma once

// Closed-form duration laws over normalized durations g.
//
//   Weibull        rho_w(g) = alpha beta g^(beta-1) exp(-alpha g^beta)
//                  C_w(g)   = exp(-alpha g^beta)
//   q-exponential  rho_q(g) = mu [1 + (q-1) mu g]^(q/(1-q))
//                  C_q(g)   = [1 + (q-1) mu g]^(1/(1-q))
//
// alpha is a rate-like parameter; the conventional Weibull scale lambda is
// related by alpha = lambda^(-beta). The (alpha, beta) form is canonical here.

#include <cmath>
#include <string>

#include "durascale/errors.hpp"

namespace durascale {

struct WeibullParams {
  double alpha;
  double beta;

  WeibullParams(double alpha_, double beta_) : alpha(alpha_), beta(beta_) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) ||
        !std::isfinite(beta))
      throw ParamError("Weibull parameters require alpha > 0 and beta > 0");
  }

  static WeibullParams from_scale(double lambda, double beta) {
    if (!(lambda > 0.0))
      throw ParamError("Weibull scale must be positive");
    return {std::pow(lambda, -beta), beta};
  }

  double scale() const { return std::pow(alpha, -1.0 / beta); }
};

/// q-exponential restricted to the heavy-tailed regime q > 1.
struct QExpParams {
  double mu;
  double q;

  QExpParams(double mu_, double q_) : mu(mu_), q(q_) {
    if (!(mu > 0.0) || !std::isfinite(mu))
      throw ParamError("q-exponential requires mu > 0");
    if (!(q > 1.0) || !std::isfinite(q))
      throw ParamError("q-exponential is supported only for q > 1");
  }

  /// Generalized Pareto form: shape xi = q - 1, scale s = 1/mu, with density
  /// (1/s)(1 + xi x/s)^(-1/xi - 1).
  double gpd_shape() const { return q - 1.0; }
  double gpd_scale() const { return 1.0 / mu; }
};

inline double tail_exponent(double q) {
  if (!(q > 1.0))
    throw ParamError("tail exponent 1/(q-1) needs q > 1");
  return 1.0 / (q - 1.0);
}

/// Power-law exponent of C_q(g) ~ g^(-1/(q-1)).
inline double tail_exponent(const QExpParams &p) { return tail_exponent(p.q); }

inline double weibull_pdf(const WeibullParams &p, double g) {
  if (!(g >= 0.0))
    throw DomainError("Weibull density needs g >= 0");
  if (g == 0.0) {
    if (p.beta < 1.0)
      throw DomainError("Weibull density diverges at g = 0 for beta < 1");
    return p.beta == 1.0 ? p.alpha : 0.0;
  }
  const double gb = std::pow(g, p.beta);
  return p.alpha * p.beta * gb / g * std::exp(-p.alpha * gb);
}

inline double weibull_log_pdf(const WeibullParams &p, double g) {
  if (!(g > 0.0))
    throw DomainError("Weibull log-density needs g > 0");
  const double lg = std::log(g);
  return std::log(p.alpha * p.beta) + (p.beta - 1.0) * lg -
         p.alpha * std::exp(p.beta * lg);
}

inline double weibull_ccdf(const WeibullParams &p, double g) {
  if (!(g >= 0.0))
    throw DomainError("Weibull CCDF needs g >= 0");
  return std::exp(-p.alpha * std::pow(g, p.beta));
}

namespace detail {
// ln[1 + (q-1) mu g], accurate as q -> 1.
inline double qexp_log_base(const QExpParams &p, double g) {
  return std::log1p((p.q - 1.0) * p.mu * g);
}
} // namespace detail

inline double qexp_log_pdf(const QExpParams &p, double g) {
  if (!(g >= 0.0))
    throw DomainError("q-exponential density needs g >= 0");
  return std::log(p.mu) - p.q / (p.q - 1.0) * detail::qexp_log_base(p, g);
}

inline double qexp_pdf(const QExpParams &p, double g) {
  return std::exp(qexp_log_pdf(p, g));
}

inline double qexp_ccdf(const QExpParams &p, double g) {
  if (!(g >= 0.0))
    throw DomainError("q-exponential CCDF needs g >= 0");
  return std::exp(-detail::qexp_log_base(p, g) / (p.q - 1.0));
}

/// Inverse CCDFs: the g with C(g) = u for u in (0, 1].
inline double weibull_inverse_ccdf(const WeibullParams &p, double u) {
  if (!(u > 0.0 && u <= 1.0))
    throw DomainError("inverse CCDF needs u in (0, 1]");
  return std::pow(-std::log(u) / p.alpha, 1.0 / p.beta);
}

inline double qexp_inverse_ccdf(const QExpParams &p, double u) {
  if (!(u > 0.0 && u <= 1.0))
    throw DomainError("inverse CCDF needs u in (0, 1]");
  const double k = p.q - 1.0;
  return std::expm1(-k * std::log(u)) / (k * p.mu);
}

} // namespace durascale
