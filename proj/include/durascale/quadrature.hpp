#pragma once

// Globally adaptive 15-point Gauss-Kronrod quadrature on a finite interval.
// Boost's recursive gauss_kronrod (1.74) reports errors in the unscaled
// [-1, 1] frame, which the regime selection in mittag_leffler.hpp cannot use.

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

namespace durascale {

struct QuadratureResult {
  double value;
  double error;
  bool converged;
};

namespace detail {

struct GkPiece {
  double a, b, value, error;
  bool operator<(const GkPiece &o) const { return error < o.error; }
};

template <class F> GkPiece gk15(F &f, double a, double b) {
  static constexpr double xk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr double wk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = wk[7] * fc;
  double gauss = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double v = f(c - h * xk[j]) + f(c + h * xk[j]);
    kron += wk[j] * v;
    if (j % 2 == 1)
      gauss += wg[j / 2] * v;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

} // namespace detail

/// Integrates f over consecutive segments [cuts[i], cuts[i+1]], bisecting the
/// piece with the largest error estimate until the summed estimate drops
/// below max(abs_tol, rel_tol |value|).
template <class F>
QuadratureResult integrate_adaptive(F f, std::span<const double> cuts,
                                    double rel_tol, double abs_tol = 0.0,
                                    int max_pieces = 4000) {
  std::priority_queue<detail::GkPiece> heap;
  double value = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i])
      continue;
    auto p = detail::gk15(f, cuts[i], cuts[i + 1]);
    value += p.value;
    error += p.error;
    heap.push(p);
  }
  while (!heap.empty() && error > std::max(abs_tol, rel_tol * std::abs(value)) &&
         static_cast<int>(heap.size()) < max_pieces) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const auto left = detail::gk15(f, worst.a, mid);
    const auto right = detail::gk15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // re-sum to shed the drift of the running totals
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {value, error, error <= std::max(abs_tol, rel_tol * std::abs(value))};
}

} // namespace durascale
