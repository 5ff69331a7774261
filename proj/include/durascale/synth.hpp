#pragma once

// Seeded generators used as verification oracles: i.i.d. Weibull and
// q-exponential samples by CCDF inversion, ACD(1,1) dependent durations, and
// fabrication of trade tapes whose extraction returns a given series.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "durascale/errors.hpp"
#include "durascale/fitters.hpp"
#include "durascale/models.hpp"
#include "durascale/tape.hpp"

namespace durascale {

/// Identifier written to output metadata.
inline constexpr std::string_view kRngAlgorithm =
    "mt19937_64; u = ((x >> 11) + 0.5) * 2^-53";

/// 64-bit Mersenne Twister with an explicit uniform mapping, so samples are
/// identical across standard libraries (std::uniform_real_distribution is not
/// specified bit-for-bit).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

/// Independent stream seed for stream `index` under a master seed (splitmix64
/// finalizer over the pair).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::vector<double> sample_weibull(const WeibullParams &p, std::size_t n,
                                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto &g : out)
    g = weibull_inverse_ccdf(p, rng.uniform());
  return out;
}

inline std::vector<double> sample_qexp(const QExpParams &p, std::size_t n,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto &g : out)
    g = qexp_inverse_ccdf(p, rng.uniform());
  return out;
}

enum class GeneratorModel { Weibull, QExponential, ACD };
enum class Innovation { Exponential, Weibull };

inline std::string_view to_string(GeneratorModel m) {
  switch (m) {
  case GeneratorModel::Weibull:
    return "weibull";
  case GeneratorModel::QExponential:
    return "qexp";
  case GeneratorModel::ACD:
    return "acd";
  }
  return "?";
}

/// psi_i = omega + a tau_(i-1) + b psi_(i-1), tau_i = psi_i eps_i.
struct AcdSpec {
  double omega = 1.0;
  double a = 0.0;
  double b = 0.0;
  Innovation innovation = Innovation::Exponential;
  /// Shape of unit-mean Weibull innovations.
  double innovation_shape = 1.0;

  void validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega))
      throw ParamError("ACD omega must be positive");
    if (!(a >= 0.0) || !(b >= 0.0))
      throw ParamError("ACD coefficients must be non-negative");
    if (!(a + b < 1.0))
      throw ParamError("ACD recursion is nonstationary (a + b >= 1)");
    if (innovation == Innovation::Weibull && !(innovation_shape > 0.0))
      throw ParamError("Weibull innovation shape must be positive");
  }

  double stationary_mean() const { return omega / (1.0 - a - b); }
};

inline constexpr std::size_t kAcdBurnIn = 1000;

struct GeneratorConfig {
  GeneratorModel model = GeneratorModel::Weibull;
  /// Used by the i.i.d. models.
  std::optional<ModelParams> params;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<AcdSpec> acd;

  void validate() const {
    if (n < 1)
      throw ParamError("generator needs n >= 1");
    switch (model) {
    case GeneratorModel::Weibull:
      if (!params || !std::holds_alternative<WeibullParams>(*params))
        throw ParamError("Weibull generator needs Weibull parameters");
      break;
    case GeneratorModel::QExponential:
      if (!params || !std::holds_alternative<QExpParams>(*params))
        throw ParamError("q-exponential generator needs q-exponential parameters");
      break;
    case GeneratorModel::ACD:
      if (!acd)
        throw ParamError("ACD generator needs omega, a, b");
      acd->validate();
      break;
    }
  }
};

inline std::vector<double> sample_acd(const GeneratorConfig &cfg) {
  cfg.validate();
  if (cfg.model != GeneratorModel::ACD)
    throw ParamError("sample_acd needs an ACD configuration");
  const AcdSpec &s = *cfg.acd;
  Rng rng(cfg.seed);
  const double k = s.innovation_shape;
  const double w_scale =
      s.innovation == Innovation::Weibull ? 1.0 / std::tgamma(1.0 + 1.0 / k) : 1.0;
  auto innovation = [&] {
    const double e = -std::log(rng.uniform());
    return s.innovation == Innovation::Exponential ? e : w_scale * std::pow(e, 1.0 / k);
  };
  double psi = s.stationary_mean();
  double tau = psi;
  std::vector<double> out(cfg.n);
  for (std::size_t i = 0; i < kAcdBurnIn + cfg.n; ++i) {
    psi = s.omega + s.a * tau + s.b * psi;
    tau = psi * innovation();
    if (i >= kAcdBurnIn)
      out[i - kAcdBurnIn] = tau;
  }
  return out;
}

/// Dispatches on cfg.model.
inline std::vector<double> generate(const GeneratorConfig &cfg) {
  cfg.validate();
  switch (cfg.model) {
  case GeneratorModel::Weibull:
    return sample_weibull(std::get<WeibullParams>(*cfg.params), cfg.n, cfg.seed);
  case GeneratorModel::QExponential:
    return sample_qexp(std::get<QExpParams>(*cfg.params), cfg.n, cfg.seed);
  case GeneratorModel::ACD:
    return sample_acd(cfg);
  }
  return {};
}

/// Rounds durations in seconds to whole centiseconds (half away from zero).
inline std::vector<Centis> to_centis(std::span<const double> seconds) {
  std::vector<Centis> out(seconds.size());
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    if (!(seconds[i] >= 0.0) || !std::isfinite(seconds[i]))
      throw DomainError("durations must be finite and non-negative");
    out[i] = static_cast<Centis>(std::llround(seconds[i] * 100.0));
  }
  return out;
}

/// A single-run series wrapping raw durations.
inline DurationSeries make_series(std::string stock, std::vector<Centis> durations,
                                  ClassFilter cls = ClassFilter::All) {
  DurationSeries s;
  s.stock_code = std::move(stock);
  s.trade_class_filter = cls;
  s.zero_count = static_cast<std::size_t>(
      std::count(durations.begin(), durations.end(), Centis{0}));
  s.durations = std::move(durations);
  if (!s.durations.empty())
    s.session_starts = {0};
  s.n_trades = s.durations.size() + (s.durations.empty() ? 0 : 1);
  return s;
}

/// Lays each series out as trades on consecutive days from `first_day`.
/// Every session run of the series opens a fresh session with an anchor trade
/// at the opening time; a duration that would cross the close moves to the
/// next session (or day) behind a new anchor. Extracting the tape with the
/// same calendar returns the duration values in order. Trades carry class P
/// for a partially-filled series and F otherwise.
inline TradeTape fabricate_tape(std::span<const DurationSeries> series,
                                const SessionCalendar &calendar = {},
                                std::chrono::year_month_day first_day =
                                    std::chrono::year{2003} / 1 / 2) {
  using std::chrono::days;
  using std::chrono::sys_days;
  const auto &sessions = calendar.sessions();
  TradeTape tape;
  for (const auto &s : series) {
    const TradeClass cls = s.trade_class_filter == ClassFilter::PartiallyFilled
                               ? TradeClass::PartiallyFilled
                               : TradeClass::Filled;
    long day = 0;
    std::size_t sess = 0;
    bool started = false;
    Centis t = 0;
    auto emit = [&](Centis ts) {
      tape.records.push_back(
          {s.stock_code, std::chrono::year_month_day{sys_days(first_day) + days(day)},
           ts, cls});
    };
    auto open_next = [&] {
      if (started && ++sess == sessions.size()) {
        sess = 0;
        ++day;
      }
      started = true;
      t = sessions[sess].open;
      emit(t);
    };

    std::vector<std::size_t> starts = s.session_starts;
    if (starts.empty() || starts.front() != 0)
      starts.insert(starts.begin(), 0);
    std::size_t run = 0;
    for (std::size_t i = 0; i < s.durations.size(); ++i) {
      const Centis tau = s.durations[i];
      if (tau < 0)
        throw DomainError("negative duration in series " + s.stock_code);
      if (tau > calendar.longest_session())
        throw DomainError("duration longer than any session in series " + s.stock_code);
      if (run < starts.size() && starts[run] == i) {
        open_next();
        ++run;
      }
      while (t + tau > sessions[sess].close)
        open_next();
      t += tau;
      emit(t);
    }
  }
  return tape;
}

} // namespace durascale
