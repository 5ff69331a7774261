#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <vector>

#include "durascale/models.hpp"

using namespace durascale;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {

// Central difference of a CCDF, Richardson-extrapolated.
template <class C> double minus_derivative(C ccdf, double g) {
  auto d = [&](double h) { return (ccdf(g - h) - ccdf(g + h)) / (2.0 * h); };
  const double h = 1e-4 * g;
  return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

const std::vector<double> kGrid = {1e-3, 0.01, 0.05, 0.1, 0.3, 0.7, 1.0, 2.0, 5.0, 10.0, 30.0};

} // namespace

TEST_CASE("Weibull density is minus the CCDF derivative", "[models]") {
  for (auto p : {WeibullParams(1.85, 0.68), WeibullParams(2.24, 0.46), WeibullParams(0.7, 1.6)})
    for (double g : kGrid) {
      const double fd = minus_derivative([&](double x) { return weibull_ccdf(p, x); }, g);
      if (weibull_ccdf(p, g) < 1e-200)
        continue;
      CHECK_THAT(weibull_pdf(p, g), WithinRel(fd, 1e-6));
    }
}

TEST_CASE("q-exponential density is minus the CCDF derivative", "[models]") {
  for (auto p : {QExpParams(4.17, 1.65), QExpParams(1.99, 1.25), QExpParams(0.5, 2.5)})
    for (double g : kGrid) {
      const double fd = minus_derivative([&](double x) { return qexp_ccdf(p, x); }, g);
      CHECK_THAT(qexp_pdf(p, g), WithinRel(fd, 1e-6));
    }
}

TEST_CASE("closed forms match direct evaluation", "[models]") {
  const WeibullParams w(1.85, 0.68);
  const double g = 0.37;
  CHECK_THAT(weibull_pdf(w, g),
             WithinRel(1.85 * 0.68 * std::pow(g, -0.32) * std::exp(-1.85 * std::pow(g, 0.68)), 1e-14));
  CHECK_THAT(weibull_log_pdf(w, g), WithinRel(std::log(weibull_pdf(w, g)), 1e-13));
  const QExpParams q(4.17, 1.65);
  CHECK_THAT(qexp_pdf(q, g),
             WithinRel(4.17 * std::pow(1.0 + 0.65 * 4.17 * g, 1.65 / (1.0 - 1.65)), 1e-13));
  CHECK_THAT(qexp_ccdf(q, g), WithinRel(std::pow(1.0 + 0.65 * 4.17 * g, 1.0 / (1.0 - 1.65)), 1e-13));
}

TEST_CASE("densities integrate to one and Weibull moments match", "[models]") {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (auto p : {WeibullParams(1.85, 0.68), WeibullParams(2.24, 0.46)}) {
    const double mass = integrator.integrate([&](double g) { return weibull_pdf(p, g); });
    CHECK_THAT(mass, WithinRel(1.0, 1e-9));
    const double mean = integrator.integrate([&](double g) { return g * weibull_pdf(p, g); });
    const double expected = std::pow(p.alpha, -1.0 / p.beta) * boost::math::tgamma(1.0 + 1.0 / p.beta);
    CHECK_THAT(mean, WithinRel(expected, 1e-8));
  }
  for (auto p : {QExpParams(4.17, 1.65), QExpParams(1.99, 1.25)}) {
    const double mass = integrator.integrate([&](double g) { return qexp_pdf(p, g); });
    CHECK_THAT(mass, WithinRel(1.0, 1e-8));
  }
  // mean of the GPD form: s / (1 - xi) for xi < 1
  const QExpParams q(1.99, 1.25);
  const double mean = integrator.integrate([&](double g) { return g * qexp_pdf(q, g); });
  CHECK_THAT(mean, WithinRel(q.gpd_scale() / (1.0 - q.gpd_shape()), 1e-7));
}

TEST_CASE("beta = 1 Weibull is the exponential law", "[models]") {
  const WeibullParams p(1.7, 1.0);
  for (double g : kGrid) {
    CHECK_THAT(weibull_pdf(p, g), WithinRel(1.7 * std::exp(-1.7 * g), 1e-12));
    CHECK_THAT(weibull_ccdf(p, g), WithinRel(std::exp(-1.7 * g), 1e-12));
  }
  CHECK(weibull_pdf(p, 0.0) == 1.7);
}

TEST_CASE("q -> 1+ recovers the exponential law", "[models]") {
  const double mu = 2.3;
  for (double q : {1.0 + 1e-8, 1.0 + 1e-10}) {
    const QExpParams p(mu, q);
    for (double g : {0.0, 0.01, 0.1, 1.0, 3.0}) {
      CHECK_THAT(qexp_pdf(p, g), WithinRel(mu * std::exp(-mu * g), 1e-6));
      CHECK_THAT(qexp_ccdf(p, g), WithinRel(std::exp(-mu * g), 1e-6));
    }
  }
}

TEST_CASE("inverse CCDFs", "[models]") {
  CHECK_THAT(weibull_inverse_ccdf(WeibullParams(1.0, 1.0), 0.5), WithinRel(std::log(2.0), 1e-15));
  CHECK_THAT(qexp_inverse_ccdf(QExpParams(1.0, 1.5), 0.5), WithinRel(2.0 * (std::sqrt(2.0) - 1.0), 1e-14));
  CHECK(weibull_inverse_ccdf(WeibullParams(1.85, 0.68), 1.0) == 0.0);
  CHECK(qexp_inverse_ccdf(QExpParams(4.17, 1.65), 1.0) == 0.0);
  for (double u : {1e-12, 1e-6, 0.01, 0.3, 0.9, 0.999999}) {
    const WeibullParams w(1.85, 0.68);
    CHECK_THAT(weibull_ccdf(w, weibull_inverse_ccdf(w, u)), WithinRel(u, 1e-12));
    const QExpParams q(4.17, 1.65);
    CHECK_THAT(qexp_ccdf(q, qexp_inverse_ccdf(q, u)), WithinRel(u, 1e-11));
  }
  CHECK_THROWS_AS(weibull_inverse_ccdf(WeibullParams(1, 1), 0.0), DomainError);
  CHECK_THROWS_AS(qexp_inverse_ccdf(QExpParams(1, 1.5), 1.5), DomainError);
}

TEST_CASE("power-law tail exponent", "[models]") {
  CHECK_THAT(tail_exponent(1.25), WithinRel(4.0, 1e-15));
  // log-log slope of the CCDF far in the tail
  const QExpParams p(1.99, 1.25);
  const double g1 = 1e6, g2 = 1e7;
  const double slope = std::log(qexp_ccdf(p, g2) / qexp_ccdf(p, g1)) / std::log(g2 / g1);
  CHECK_THAT(-slope, WithinAbs(4.0, 1e-4));
  CHECK_THROWS_AS(tail_exponent(1.0), ParamError);
}

TEST_CASE("parameter and domain validation", "[models]") {
  CHECK_THROWS_AS(WeibullParams(0.0, 1.0), ParamError);
  CHECK_THROWS_AS(WeibullParams(1.0, -1.0), ParamError);
  CHECK_THROWS_AS(WeibullParams(std::nan(""), 1.0), ParamError);
  CHECK_THROWS_AS(QExpParams(1.0, 1.0), ParamError);
  CHECK_THROWS_AS(QExpParams(1.0, 0.8), ParamError);
  CHECK_THROWS_AS(QExpParams(-1.0, 1.5), ParamError);
  CHECK_THROWS_AS(weibull_pdf(WeibullParams(1, 1), -1.0), DomainError);
  CHECK_THROWS_AS(weibull_pdf(WeibullParams(1, 0.5), 0.0), DomainError);
  CHECK_THROWS_AS(qexp_ccdf(QExpParams(1, 1.5), -0.1), DomainError);
  CHECK(weibull_pdf(WeibullParams(1, 2), 0.0) == 0.0);
}

TEST_CASE("scale parameterization", "[models]") {
  const auto p = WeibullParams::from_scale(2.0, 0.5);
  CHECK_THAT(p.alpha, WithinRel(std::pow(2.0, -0.5), 1e-15));
  CHECK_THAT(p.scale(), WithinRel(2.0, 1e-14));
}
