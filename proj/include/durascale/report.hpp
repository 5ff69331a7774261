#pragma once

// Table-shaped summaries of fit sets: per estimator, an ensemble row, the
// mean and standard deviation of per-stock parameters, and the count of
// stocks preferring each model.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "durascale/fitters.hpp"
#include "durascale/format.hpp"

namespace durascale {

inline constexpr std::string_view kEnsembleLabel = "ensemble";

struct LabeledFit {
  std::string stock;
  FitResult fit;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

/// Mean and sample (n-1) standard deviation; std is 0 for a single value.
inline MeanStd mean_std(const std::vector<double> &v) {
  MeanStd m;
  m.n = v.size();
  if (v.empty())
    return m;
  m.mean = sample_mean(v);
  m.std = sample_std(v);
  return m;
}

struct ReportTable {
  Estimator estimator = Estimator::MLE;
  std::optional<FitResult> ensemble_weibull;
  std::optional<FitResult> ensemble_qexp;
  std::optional<ComparisonVerdict> ensemble_verdict;
  MeanStd alpha, beta, chi_w, mu, q, chi_q;
  /// 1 / (mean q - 1).
  std::optional<double> tail_exponent_of_mean_q;
  PreferenceTally tally;
  std::size_t stocks = 0;
};

/// Groups fits by estimator. Fits labelled "ensemble" fill the ensemble row;
/// all others are per-stock. Only stocks with both models converged enter the
/// preference tally.
inline std::vector<ReportTable> build_report(const std::vector<LabeledFit> &fits) {
  std::vector<ReportTable> out;
  for (Estimator e : {Estimator::MLE, Estimator::NLSE}) {
    ReportTable t;
    t.estimator = e;
    std::vector<double> a, b, cw, m, q, cq;
    std::vector<std::string> stocks;
    bool any = false;
    for (const auto &lf : fits) {
      if (lf.fit.estimator != e)
        continue;
      any = true;
      const bool ens = lf.stock == kEnsembleLabel;
      if (lf.fit.model == Model::Weibull) {
        if (ens)
          t.ensemble_weibull = lf.fit;
        else if (lf.fit.converged) {
          a.push_back(lf.fit.weibull().alpha);
          b.push_back(lf.fit.weibull().beta);
          cw.push_back(lf.fit.chi);
        }
      } else {
        if (ens)
          t.ensemble_qexp = lf.fit;
        else if (lf.fit.converged) {
          m.push_back(lf.fit.qexp().mu);
          q.push_back(lf.fit.qexp().q);
          cq.push_back(lf.fit.chi);
        }
      }
      if (!ens && std::find(stocks.begin(), stocks.end(), lf.stock) == stocks.end())
        stocks.push_back(lf.stock);
    }
    if (!any)
      continue;
    t.stocks = stocks.size();
    t.alpha = mean_std(a);
    t.beta = mean_std(b);
    t.chi_w = mean_std(cw);
    t.mu = mean_std(m);
    t.q = mean_std(q);
    t.chi_q = mean_std(cq);
    if (t.q.n > 0 && t.q.mean > 1.0)
      t.tail_exponent_of_mean_q = tail_exponent(t.q.mean);
    if (t.ensemble_weibull && t.ensemble_qexp && t.ensemble_weibull->converged &&
        t.ensemble_qexp->converged)
      t.ensemble_verdict = compare_models(*t.ensemble_weibull, *t.ensemble_qexp);

    std::vector<ComparisonVerdict> verdicts;
    for (const auto &s : stocks) {
      const FitResult *w = nullptr, *qf = nullptr;
      for (const auto &lf : fits)
        if (lf.stock == s && lf.fit.estimator == e && lf.fit.converged)
          (lf.fit.model == Model::Weibull ? w : qf) = &lf.fit;
      if (w && qf)
        verdicts.push_back(compare_models(*w, *qf));
    }
    t.tally = tally(verdicts);
    out.push_back(std::move(t));
  }
  return out;
}

namespace detail {
inline std::string cell(std::optional<double> v) { return v ? shortest(*v) : ""; }

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
} // namespace detail

/// Long CSV: one line per (estimator, row) with row in {ensemble, mean, std}.
inline void write_report_csv(std::ostream &out, const std::vector<ReportTable> &tables) {
  out << "estimator,row,alpha,beta,chi_w,mu,q,tail_exponent,chi_q,"
         "n_stocks,prefer_weibull,prefer_qexp,ties\n";
  using detail::cell;
  for (const auto &t : tables) {
    const std::string est(to_string(t.estimator));
    if (t.ensemble_weibull || t.ensemble_qexp) {
      std::optional<double> a, b, cw, m, q, te, cq;
      if (t.ensemble_weibull) {
        a = t.ensemble_weibull->weibull().alpha;
        b = t.ensemble_weibull->weibull().beta;
        cw = t.ensemble_weibull->chi;
      }
      if (t.ensemble_qexp) {
        m = t.ensemble_qexp->qexp().mu;
        q = t.ensemble_qexp->qexp().q;
        te = tail_exponent(t.ensemble_qexp->qexp());
        cq = t.ensemble_qexp->chi;
      }
      out << est << ",ensemble," << cell(a) << ',' << cell(b) << ',' << cell(cw) << ','
          << cell(m) << ',' << cell(q) << ',' << cell(te) << ',' << cell(cq) << ",,,,\n";
    }
    auto pick = [](const MeanStd &s, bool mean) -> std::optional<double> {
      if (s.n == 0)
        return std::nullopt;
      return mean ? s.mean : s.std;
    };
    for (bool mean : {true, false}) {
      out << est << ',' << (mean ? "mean" : "std") << ',' << cell(pick(t.alpha, mean))
          << ',' << cell(pick(t.beta, mean)) << ',' << cell(pick(t.chi_w, mean)) << ','
          << cell(pick(t.mu, mean)) << ',' << cell(pick(t.q, mean)) << ','
          << (mean ? cell(t.tail_exponent_of_mean_q) : "") << ','
          << cell(pick(t.chi_q, mean)) << ',';
      if (mean)
        out << t.stocks << ',' << t.tally.weibull << ',' << t.tally.qexp << ','
            << t.tally.ties;
      else
        out << ",,,";
      out << '\n';
    }
  }
}

/// Human-readable layout with display rounding.
inline void write_report_text(std::ostream &out, const std::vector<ReportTable> &tables) {
  using detail::fixed;
  auto pm = [](const MeanStd &s) {
    return s.n ? fixed(s.mean) + " +/- " + fixed(s.std) : std::string("-");
  };
  for (const auto &t : tables) {
    out << (t.estimator == Estimator::MLE ? "MLE" : "NLSE") << " (chi: "
        << (t.estimator == Estimator::MLE ? kMleResidualDefinition : kNlseResidualDefinition)
        << ")\n";
    if (t.ensemble_weibull)
      out << "  ensemble  Weibull        alpha " << fixed(t.ensemble_weibull->weibull().alpha)
          << "  beta " << fixed(t.ensemble_weibull->weibull().beta) << "  chi_w "
          << fixed(t.ensemble_weibull->chi) << '\n';
    if (t.ensemble_qexp)
      out << "  ensemble  q-exponential  mu " << fixed(t.ensemble_qexp->qexp().mu) << "  q "
          << fixed(t.ensemble_qexp->qexp().q) << "  1/(q-1) "
          << fixed(tail_exponent(t.ensemble_qexp->qexp()), 2) << "  chi_q "
          << fixed(t.ensemble_qexp->chi) << '\n';
    if (t.ensemble_verdict)
      out << "  ensemble  preferred      " << to_string(t.ensemble_verdict->preferred) << '\n';
    if (t.stocks > 0) {
      out << "  per stock Weibull        alpha " << pm(t.alpha) << "  beta " << pm(t.beta)
          << "  chi_w " << pm(t.chi_w) << "  (" << t.tally.weibull << '/' << t.stocks
          << ")\n";
      out << "  per stock q-exponential  mu " << pm(t.mu) << "  q " << pm(t.q);
      if (t.tail_exponent_of_mean_q)
        out << "  1/(q-1) " << fixed(*t.tail_exponent_of_mean_q, 2);
      out << "  chi_q " << pm(t.chi_q) << "  (" << t.tally.qexp << '/' << t.stocks
          << ")\n";
      if (t.tally.ties)
        out << "  ties " << t.tally.ties << '\n';
    }
    out << '\n';
  }
}

} // namespace durascale
