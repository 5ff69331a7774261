#pragma once

// Small dense minimizers for the calibration code: a Nelder-Mead simplex and
// a Levenberg-Marquardt (damped Gauss-Newton) least-squares polish.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace durascale {

template <std::size_t N> using Point = std::array<double, N>;

template <std::size_t N> struct MinimizeResult {
  Point<N> x{};
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double x_rel_tol = 1e-9;
  double f_tol = 1e-12;
  int max_iterations = 10000;
  double initial_step = 0.1;
};

/// Nelder-Mead with standard coefficients (1, 2, 0.5, 0.5). Converged when the
/// simplex diameter falls below x_rel_tol (relative) or the spread of vertex
/// values below f_tol.
template <std::size_t N, class F>
MinimizeResult<N> nelder_mead(F &&f, const Point<N> &start,
                              const SimplexOptions &opt = {}) {
  std::array<Point<N>, N + 1> s;
  std::array<double, N + 1> fv;
  s[0] = start;
  for (std::size_t i = 0; i < N; ++i) {
    s[i + 1] = start;
    const double h = start[i] != 0.0 ? opt.initial_step * std::abs(start[i])
                                     : opt.initial_step;
    s[i + 1][i] += h;
  }
  for (std::size_t i = 0; i <= N; ++i)
    fv[i] = f(s[i]);

  auto eval = [&](const Point<N> &p) {
    const double v = f(p);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  MinimizeResult<N> res;
  std::array<std::size_t, N + 1> order;
  for (int it = 0; it < opt.max_iterations; ++it) {
    for (std::size_t i = 0; i <= N; ++i)
      order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0], worst = order[N], second = order[N - 1];

    double diam = 0.0, scale = 0.0;
    for (std::size_t i = 0; i <= N; ++i)
      for (std::size_t k = 0; k < N; ++k) {
        diam = std::max(diam, std::abs(s[i][k] - s[best][k]));
        scale = std::max(scale, std::abs(s[best][k]));
      }
    res.iterations = it;
    if (diam <= opt.x_rel_tol * std::max(scale, 1e-12) ||
        std::abs(fv[worst] - fv[best]) <= opt.f_tol) {
      res.converged = true;
      break;
    }

    Point<N> centroid{};
    for (std::size_t i = 0; i <= N; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < N; ++k)
          centroid[k] += s[i][k] / static_cast<double>(N);
    auto along = [&](double t) {
      Point<N> p;
      for (std::size_t k = 0; k < N; ++k)
        p[k] = centroid[k] + t * (s[worst][k] - centroid[k]);
      return p;
    };

    const auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        s[worst] = xe;
        fv[worst] = fe;
      } else {
        s[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      s[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      s[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= N; ++i) {
      if (i == best)
        continue;
      for (std::size_t k = 0; k < N; ++k)
        s[i][k] = s[best][k] + 0.5 * (s[i][k] - s[best][k]);
      fv[i] = eval(s[i]);
    }
  }
  const auto bi = static_cast<std::size_t>(
      std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = s[bi];
  res.value = fv[bi];
  return res;
}

/// Residuals and their Jacobian rows at a point.
template <std::size_t N> struct ResidualBlock {
  std::vector<double> r;
  std::vector<Point<N>> jac;
};

struct LevenbergOptions {
  double step_rel_tol = 1e-12;
  double cost_rel_tol = 1e-15;
  int max_iterations = 200;
};

/// Minimizes 0.5 * sum r_i^2 from `start`. `model(x)` returns the residual
/// block; an empty or non-finite block marks an infeasible point.
template <std::size_t N, class F>
MinimizeResult<N> levenberg_marquardt(F &&model, const Point<N> &start,
                                      const LevenbergOptions &opt = {}) {
  auto cost_of = [](const ResidualBlock<N> &b) {
    double c = 0.0;
    for (double v : b.r)
      c += v * v;
    return std::isfinite(c) && !b.r.empty() ? c
                                            : std::numeric_limits<double>::infinity();
  };
  MinimizeResult<N> res;
  res.x = start;
  auto blk = model(res.x);
  res.value = cost_of(blk);
  if (!std::isfinite(res.value))
    return res;
  double lambda = 1e-3;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    // normal equations
    std::array<std::array<double, N>, N> jtj{};
    Point<N> jtr{};
    for (std::size_t i = 0; i < blk.r.size(); ++i)
      for (std::size_t a = 0; a < N; ++a) {
        jtr[a] += blk.jac[i][a] * blk.r[i];
        for (std::size_t b = 0; b < N; ++b)
          jtj[a][b] += blk.jac[i][a] * blk.jac[i][b];
      }
    bool stepped = false;
    for (int tries = 0; tries < 30; ++tries) {
      auto m = jtj;
      for (std::size_t a = 0; a < N; ++a)
        m[a][a] *= 1.0 + lambda;
      // Gaussian elimination with partial pivoting
      Point<N> rhs;
      for (std::size_t a = 0; a < N; ++a)
        rhs[a] = -jtr[a];
      bool singular = false;
      for (std::size_t c = 0; c < N && !singular; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < N; ++r)
          if (std::abs(m[r][c]) > std::abs(m[piv][c]))
            piv = r;
        if (m[piv][c] == 0.0) {
          singular = true;
          break;
        }
        std::swap(m[c], m[piv]);
        std::swap(rhs[c], rhs[piv]);
        for (std::size_t r = c + 1; r < N; ++r) {
          const double f = m[r][c] / m[c][c];
          for (std::size_t k = c; k < N; ++k)
            m[r][k] -= f * m[c][k];
          rhs[r] -= f * rhs[c];
        }
      }
      if (singular) {
        lambda *= 10.0;
        continue;
      }
      Point<N> delta;
      for (std::size_t c = N; c-- > 0;) {
        double v = rhs[c];
        for (std::size_t k = c + 1; k < N; ++k)
          v -= m[c][k] * delta[k];
        delta[c] = v / m[c][c];
      }
      Point<N> trial;
      double step = 0.0, scale = 0.0;
      for (std::size_t a = 0; a < N; ++a) {
        trial[a] = res.x[a] + delta[a];
        step = std::max(step, std::abs(delta[a]));
        scale = std::max(scale, std::abs(res.x[a]));
      }
      auto tb = model(trial);
      const double tc = cost_of(tb);
      if (tc <= res.value) {
        const double improvement = res.value - tc;
        res.x = trial;
        blk = std::move(tb);
        const double old = res.value;
        res.value = tc;
        lambda = std::max(lambda / 10.0, 1e-12);
        stepped = true;
        if (step <= opt.step_rel_tol * std::max(scale, 1e-12) ||
            improvement <= opt.cost_rel_tol * old || tc == 0.0) {
          res.converged = true;
          return res;
        }
        break;
      }
      lambda *= 10.0;
      if (step <= opt.step_rel_tol * std::max(scale, 1e-12)) {
        // no further descent is resolvable at this precision
        res.converged = true;
        return res;
      }
    }
    if (!stepped) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

} // namespace durascale
