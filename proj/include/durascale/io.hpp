#pragma once

// Persistence: duration-series CSV, density/CCDF CSV, JSON for fits and
// reports, run manifests with input digests, and atomic file writes.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "durascale/conditional.hpp"
#include "durascale/densities.hpp"
#include "durascale/errors.hpp"
#include "durascale/fitters.hpp"
#include "durascale/format.hpp"
#include "durascale/tape.hpp"

namespace durascale {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "durascale 0.1.0";

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary sibling and renames it over `path`, so readers
/// never observe a partial file.
inline void atomic_write(const std::filesystem::path &path, std::string_view content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
      throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// Digests

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4)
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

struct InputDigest {
  std::string name;
  std::string digest;
};

/// Lineage id over a set of inputs: digest of the sorted (name, digest) list.
inline std::string lineage_of(std::vector<InputDigest> inputs) {
  std::sort(inputs.begin(), inputs.end(),
            [](const auto &a, const auto &b) { return a.name < b.name; });
  std::uint64_t h = kFnvOffset;
  for (const auto &d : inputs) {
    h = fnv1a64(d.name, h);
    h = fnv1a64(std::string_view("\0", 1), h);
    h = fnv1a64(d.digest, h);
    h = fnv1a64(std::string_view("\n", 1), h);
  }
  return hex64(h);
}

// ---------------------------------------------------------------------------
// Duration series CSV: stock,class,session,tau

/// Durations of one (stock, class) as read back from a series file.
struct SeriesData {
  std::string stock_code;
  ClassFilter trade_class_filter = ClassFilter::All;
  std::vector<double> tau;
  std::vector<std::size_t> session_starts;
};

inline constexpr std::string_view kSeriesHeader = "stock,class,session,tau";

/// Centisecond durations written exactly as seconds with two decimals.
inline void write_series_csv(std::ostream &out, const DurationSeries &s) {
  out << kSeriesHeader << '\n';
  for (std::size_t k = 0; k < s.session_starts.size(); ++k) {
    const auto [b, e] = s.session_range(k);
    for (std::size_t i = b; i < e; ++i) {
      const Centis c = s.durations[i];
      char frac[4];
      std::snprintf(frac, sizeof frac, "%02lld", static_cast<long long>(c % 100));
      out << s.stock_code << ',' << to_string(s.trade_class_filter) << ',' << k << ','
          << c / 100 << '.' << frac << '\n';
    }
  }
}

inline void write_series_csv(std::ostream &out, const SeriesData &s) {
  out << kSeriesHeader << '\n';
  std::size_t run = 0;
  for (std::size_t i = 0; i < s.tau.size(); ++i) {
    while (run + 1 < s.session_starts.size() && s.session_starts[run + 1] <= i)
      ++run;
    out << s.stock_code << ',' << to_string(s.trade_class_filter) << ',' << run << ','
        << shortest(s.tau[i]) << '\n';
  }
}

/// Reads one or more (stock, class) blocks. Rows of a block must be
/// contiguous; a change of the session column starts a new session run.
inline std::vector<SeriesData> read_series_csv(std::istream &in) {
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line))
    throw EmptyInput("series file is empty");
  ++row;
  if (detail::trim(line) != kSeriesHeader)
    throw MalformedRow(row, "expected header '" + std::string(kSeriesHeader) + "'");
  std::vector<SeriesData> out;
  std::string last_session;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty())
      continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 4)
      throw MalformedRow(row, "expected 4 fields");
    const auto stock = detail::trim(f[0]);
    const auto cls = parse_class_filter(detail::trim(f[1]));
    if (stock.empty() || !cls)
      throw MalformedRow(row, "bad stock or class");
    const auto sess = std::string(detail::trim(f[2]));
    const auto tv = std::string(detail::trim(f[3]));
    double tau = 0.0;
    const auto res = std::from_chars(tv.data(), tv.data() + tv.size(), tau);
    if (res.ec != std::errc() || res.ptr != tv.data() + tv.size() || !(tau >= 0.0) ||
        !std::isfinite(tau))
      throw MalformedRow(row, "bad duration '" + tv + "'");
    if (out.empty() || out.back().stock_code != stock ||
        out.back().trade_class_filter != *cls) {
      out.push_back({std::string(stock), *cls, {}, {}});
      last_session.clear();
    }
    auto &s = out.back();
    if (s.tau.empty() || sess != last_session)
      s.session_starts.push_back(s.tau.size());
    last_session = sess;
    s.tau.push_back(tau);
  }
  if (out.empty())
    throw EmptyInput("series file has no rows");
  return out;
}

inline std::string series_file_name(std::string_view stock, ClassFilter f) {
  return std::string(stock) + "_" + std::string(to_string(f)) + ".csv";
}

// ---------------------------------------------------------------------------
// Density and CCDF CSV

inline void write_density_csv(std::ostream &out, const EmpiricalDensity &d) {
  out << "bin_center,density,count\n";
  for (std::size_t i = 0; i < d.size(); ++i)
    out << shortest(d.centers[i]) << ',' << shortest(d.density[i]) << ','
        << d.counts[i] << '\n';
}

inline void write_ccdf_csv(std::ostream &out, const EmpiricalCcdf &c) {
  out << "x,ccdf\n";
  for (const auto &[x, v] : c.steps())
    out << shortest(x) << ',' << shortest(v) << '\n';
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const ModelParams &p) {
  if (const auto *w = std::get_if<WeibullParams>(&p))
    return {{"alpha", w->alpha}, {"beta", w->beta}};
  const auto &q = std::get<QExpParams>(p);
  return {{"mu", q.mu}, {"q", q.q}, {"tail_exponent", tail_exponent(q)}};
}

inline json to_json(const FitResult &r) {
  json j;
  j["model"] = to_string(r.model);
  j["estimator"] = to_string(r.estimator);
  j["params"] = to_json(r.params);
  j["chi"] = r.chi;
  j["n_samples"] = r.n_samples;
  j["bins_used"] = r.bins_used;
  j["bins_skipped"] = r.bins_skipped;
  j["bins_per_decade"] = r.bins_per_decade;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  if (r.log_likelihood)
    j["log_likelihood"] = *r.log_likelihood;
  j["residual_definition"] = r.residual_definition();
  return j;
}

inline FitResult fit_from_json(const json &j) {
  try {
    const auto model = j.at("model").get<std::string>();
    const auto est = j.at("estimator").get<std::string>();
    if (model != "weibull" && model != "qexp")
      throw DataError("unknown model '" + model + "'");
    if (est != "mle" && est != "nlse")
      throw DataError("unknown estimator '" + est + "'");
    const auto &p = j.at("params");
    FitResult r{.model = model == "weibull" ? Model::Weibull : Model::QExponential,
                .estimator = est == "mle" ? Estimator::MLE : Estimator::NLSE,
                .params = model == "weibull"
                              ? ModelParams(WeibullParams(p.at("alpha").get<double>(),
                                                          p.at("beta").get<double>()))
                              : ModelParams(QExpParams(p.at("mu").get<double>(),
                                                       p.at("q").get<double>()))};
    r.chi = j.at("chi").get<double>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.bins_used = j.value("bins_used", std::size_t{0});
    r.bins_skipped = j.value("bins_skipped", std::size_t{0});
    r.bins_per_decade = j.value("bins_per_decade", 0);
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.value("iterations", 0);
    if (j.contains("log_likelihood"))
      r.log_likelihood = j["log_likelihood"].get<double>();
    return r;
  } catch (const json::exception &e) {
    throw DataError(std::string("malformed fit record: ") + e.what());
  }
}

inline json to_json(const CollapseReport &r) {
  json j;
  j["labels"] = r.labels;
  j["sizes"] = r.sizes;
  j["max_ks"] = r.max_ks;
  j["max_pair"] = {r.labels.at(r.max_pair.first), r.labels.at(r.max_pair.second)};
  j["alpha"] = r.alpha;
  j["pair_alpha"] = r.pair_alpha;
  j["max_ks_critical"] = r.max_ks_critical;
  j["worst_ratio"] = r.worst_ratio;
  j["collapses"] = r.collapses();
  j["pooled_deviation"] = r.pooled_deviation;
  j["pairwise_ks"] = r.pairwise_ks;
  return j;
}

// ---------------------------------------------------------------------------
// Manifest

struct RunManifest {
  std::vector<std::string> command_line;
  json config = json::object();
  std::vector<InputDigest> inputs;
  std::vector<std::uint64_t> seeds;
  json definitions = json::object();

  std::string lineage() const { return lineage_of(inputs); }

  json to_json() const {
    json j;
    j["tool_version"] = kToolVersion;
    j["command_line"] = command_line;
    j["config"] = config;
    json in = json::array();
    for (const auto &d : inputs)
      in.push_back({{"name", d.name}, {"fnv1a64", d.digest}});
    j["inputs"] = in;
    j["lineage"] = lineage();
    j["seeds"] = seeds;
    j["definitions"] = definitions;
    return j;
  }
};

} // namespace durascale
