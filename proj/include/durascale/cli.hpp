#pragma once

// Command-line front end. `run` parses argv-style arguments, executes one
// subcommand and returns the process exit status:
//   0 success, 1 usage error, 2 data error, 3 non-convergence.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "durascale/conditional.hpp"
#include "durascale/densities.hpp"
#include "durascale/errors.hpp"
#include "durascale/fitters.hpp"
#include "durascale/io.hpp"
#include "durascale/parallel.hpp"
#include "durascale/report.hpp"
#include "durascale/synth.hpp"
#include "durascale/tape.hpp"

namespace durascale::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNonConvergence = 3 };

class UsageError : public Error {
public:
  using Error::Error;
};

struct SeriesInputs {
  std::vector<SeriesData> series;
  std::vector<InputDigest> digests;
};

/// A directory contributes every `*_<class>.csv` file in name order; a file
/// contributes all of its blocks.
inline SeriesInputs load_series(const fs::path &path, ClassFilter cls) {
  SeriesInputs in;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    const std::string suffix = "_" + std::string(to_string(cls)) + ".csv";
    for (const auto &e : fs::directory_iterator(path)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && name.size() > suffix.size() &&
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw EmptyInput("no *" + suffix + " series files in " + path.string());
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw DataError("series input not found: " + path.string());
  }
  for (const auto &f : files) {
    const auto text = read_file(f);
    in.digests.push_back({f.filename().string(), hex64(fnv1a64(text))});
    std::istringstream ss(text);
    auto blocks = read_series_csv(ss);
    for (auto &b : blocks)
      in.series.push_back(std::move(b));
  }
  return in;
}

inline json definitions(int bins_per_decade) {
  json d;
  d["normalization"] = "g = tau / sample standard deviation (n-1) of the nonzero durations "
                       "of each stock and class; zero durations dropped";
  d["binning"] = "log lattice edges 10^(k/" + std::to_string(bins_per_decade) +
                 ") spanning the data range, geometric bin centers, bins [e_k, e_k+1)";
  d["mle_chi"] = kMleResidualDefinition;
  d["nlse_chi"] = kNlseResidualDefinition;
  return d;
}

inline std::string dump(const json &j) { return j.dump(2) + "\n"; }

inline ClassFilter class_option(const std::string &s) {
  const auto c = parse_class_filter(s);
  if (!c)
    throw UsageError("unknown class '" + s + "' (all, filled, partial)");
  return *c;
}

inline SessionCalendar load_calendar(const std::string &spec) {
  if (spec == "default")
    return SessionCalendar{};
  std::istringstream ss(read_file(spec));
  return parse_calendar(ss);
}

// ---------------------------------------------------------------------------
// ingest / summarize

inline TradeTape load_tape(const std::string &path, std::vector<InputDigest> &digests) {
  const auto text = read_file(path);
  digests.push_back({fs::path(path).filename().string(), hex64(fnv1a64(text))});
  std::istringstream ss(text);
  return parse_tape(ss);
}

inline std::vector<DurationSeries> extract_all_classes(const TradeTape &tape,
                                                       const SessionCalendar &cal) {
  std::vector<DurationSeries> all;
  for (auto f : {ClassFilter::All, ClassFilter::Filled, ClassFilter::PartiallyFilled})
    for (auto &s : extract_durations(tape, f, cal))
      all.push_back(std::move(s));
  return all;
}

inline int cmd_ingest(const std::string &tape_path, const std::string &calendar,
                      const fs::path &out, RunManifest m) {
  const auto tape = load_tape(tape_path, m.inputs);
  const auto cal = load_calendar(calendar);
  if (calendar != "default")
    m.inputs.push_back({fs::path(calendar).filename().string(),
                        hex64(fnv1a64(read_file(calendar)))});
  const auto series = extract_all_classes(tape, cal);
  fs::create_directories(out);
  json files = json::array();
  for (const auto &s : series) {
    if (s.durations.empty())
      continue;
    std::ostringstream ss;
    write_series_csv(ss, s);
    const auto name = series_file_name(s.stock_code, s.trade_class_filter);
    atomic_write(out / name, ss.str());
    files.push_back(name);
  }
  std::ostringstream sum;
  write_summary_csv(sum, summarize(series));
  atomic_write(out / "summary.csv", sum.str());
  m.config["outputs"] = files;
  atomic_write(out / "manifest.json", dump(m.to_json()));
  return kOk;
}

inline int cmd_summarize(const std::string &tape_path, const std::string &calendar,
                         const fs::path &out, RunManifest m) {
  const auto tape = load_tape(tape_path, m.inputs);
  const auto series = extract_all_classes(tape, load_calendar(calendar));
  std::ostringstream sum;
  write_summary_csv(sum, summarize(series));
  atomic_write(out, sum.str());
  auto side = out;
  side += ".manifest.json";
  atomic_write(side, dump(m.to_json()));
  return kOk;
}

// ---------------------------------------------------------------------------
// collapse

inline int cmd_collapse(const fs::path &series_path, ClassFilter cls, int bpd, double alpha,
                        const fs::path &out, const std::optional<fs::path> &export_dir,
                        RunManifest m) {
  auto in = load_series(series_path, cls);
  m.inputs = in.digests;
  std::vector<NormalizedSeries> norm;
  std::vector<std::vector<double>> raw;
  std::vector<std::string> labels;
  for (const auto &s : in.series) {
    norm.push_back(normalize(s.tau, s.stock_code, s.trade_class_filter));
    std::vector<double> pos;
    for (double v : s.tau)
      if (v > 0.0)
        pos.push_back(v);
    raw.push_back(std::move(pos));
    labels.push_back(s.stock_code);
  }
  const auto rep = collapse_report(norm, alpha);
  const auto raw_rep = collapse_statistics(raw, labels, alpha);
  json j;
  j["manifest"] = m.to_json();
  j["normalized"] = to_json(rep);
  j["unnormalized"] = to_json(raw_rep);
  j["sigma"] = json::object();
  for (const auto &n : norm)
    j["sigma"][n.stock_code] = *n.sigma;
  atomic_write(out, dump(j));
  if (export_dir) {
    const auto pooled = pool(norm);
    std::ostringstream d, c;
    write_density_csv(d, estimate_density(pooled.values, bpd));
    write_ccdf_csv(c, estimate_ccdf(pooled.values));
    atomic_write(*export_dir / "density.csv", d.str());
    atomic_write(*export_dir / "ccdf.csv", c.str());
    for (const auto &n : norm) {
      std::ostringstream ds;
      write_density_csv(ds, estimate_density(n.values, bpd));
      atomic_write(*export_dir / ("density_" + n.stock_code + ".csv"), ds.str());
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  bool weibull = true;
  bool qexp = true;
  bool mle = true;
  bool nlse = true;
  int bins_per_decade = kDefaultBinsPerDecade;
  bool normalize = true;
  int max_iterations = 10000;
  std::size_t nlse_min_count = 1;
  std::size_t min_samples = 100;
};

struct DatasetOutcome {
  std::vector<json> entries;
  bool nonconvergence = false;
  bool data_error = false;
};

inline json fit_entry(const std::string &label, ClassFilter cls, const FitResult &r,
                      std::string_view status) {
  json j;
  j["stock"] = label;
  j["class"] = to_string(cls);
  j["status"] = status;
  const auto body = to_json(r);
  for (const auto &[k, v] : body.items())
    j[k] = v;
  return j;
}

inline DatasetOutcome fit_dataset(const std::string &label, ClassFilter cls,
                                  const std::vector<double> &values, const FitOptions &o) {
  DatasetOutcome out;
  MleOptions mo;
  mo.bins_per_decade = o.bins_per_decade;
  mo.min_samples = o.min_samples;
  std::optional<FitResult> mle_w, mle_q;
  std::optional<double> exp_mu;

  auto record = [&](const FitResult &r, bool ok) {
    out.entries.push_back(fit_entry(label, cls, r, ok ? "ok" : "nonconvergence"));
    out.nonconvergence = out.nonconvergence || !ok;
  };
  try {
    if (o.weibull) {
      try {
        mle_w = fit_weibull_mle(values, mo);
        if (o.mle)
          record(*mle_w, true);
      } catch (const NonConvergence &e) {
        mle_w = e.partial();
        if (o.mle)
          record(e.partial(), false);
      }
    }
    if (o.qexp) {
      try {
        mle_q = fit_qexp_mle(values, mo);
        if (o.mle)
          record(*mle_q, true);
      } catch (const NonConvergence &e) {
        mle_q = e.partial();
        if (o.mle)
          record(e.partial(), false);
      } catch (const TailTooLight &e) {
        exp_mu = e.fallback_mu();
        if (o.mle) {
          json j;
          j["stock"] = label;
          j["class"] = to_string(cls);
          j["status"] = "tail_too_light";
          j["model"] = "qexp";
          j["estimator"] = "mle";
          j["converged"] = false;
          j["lr_statistic"] = e.lr_statistic();
          j["fallback"] = {{"model", "exponential"},
                           {"mu", e.fallback_mu()},
                           {"log_likelihood", e.fallback_log_likelihood()}};
          out.entries.push_back(j);
        }
      }
    }
    if (o.nlse) {
      const auto density = estimate_density(values, o.bins_per_decade);
      NlseOptions no;
      no.max_iterations = o.max_iterations;
      no.min_count = o.nlse_min_count;
      auto run_nlse = [&](Model model, const ModelParams &init) {
        try {
          record(fit_nlse(density, model, init, no), true);
        } catch (const NonConvergence &e) {
          record(e.partial(), false);
        }
      };
      if (o.weibull)
        run_nlse(Model::Weibull, mle_w ? mle_w->params : ModelParams(WeibullParams(1.0, 1.0)));
      if (o.qexp)
        run_nlse(Model::QExponential,
                 mle_q ? mle_q->params
                       : ModelParams(QExpParams(exp_mu.value_or(1.0 / sample_mean(values)), 1.1)));
    }
  } catch (const DataError &e) {
    json j;
    j["stock"] = label;
    j["class"] = to_string(cls);
    j["status"] = "data_error";
    j["message"] = e.what();
    out.entries.push_back(j);
    out.data_error = true;
  }
  return out;
}

inline int cmd_fit(const fs::path &series_path, ClassFilter cls, const FitOptions &o,
                   const fs::path &out, std::ostream &err, RunManifest m) {
  auto in = load_series(series_path, cls);
  m.inputs = in.digests;
  std::vector<std::vector<double>> values(in.series.size());
  for (std::size_t i = 0; i < in.series.size(); ++i) {
    const auto &s = in.series[i];
    if (o.normalize) {
      values[i] = normalize(s.tau, s.stock_code, s.trade_class_filter).values;
    } else {
      for (double v : s.tau)
        if (v > 0.0)
          values[i].push_back(v);
    }
  }
  std::vector<std::string> labels;
  for (const auto &s : in.series)
    labels.push_back(s.stock_code);
  if (in.series.size() > 1) {
    std::vector<double> pooled;
    for (const auto &v : values)
      pooled.insert(pooled.end(), v.begin(), v.end());
    values.push_back(std::move(pooled));
    labels.emplace_back(kEnsembleLabel);
  }
  std::vector<DatasetOutcome> outcomes(values.size());
  parallel_for(values.size(), [&](std::size_t i) {
    const ClassFilter c = i < in.series.size() ? in.series[i].trade_class_filter : cls;
    outcomes[i] = fit_dataset(labels[i], c, values[i], o);
  });

  json j;
  j["manifest"] = m.to_json();
  j["fits"] = json::array();
  bool nonconv = false, data_err = false;
  for (const auto &oc : outcomes) {
    for (const auto &e : oc.entries)
      j["fits"].push_back(e);
    nonconv = nonconv || oc.nonconvergence;
    data_err = data_err || oc.data_error;
  }
  atomic_write(out, dump(j));
  for (const auto &oc : outcomes)
    for (const auto &e : oc.entries)
      if (e["status"] != "ok")
        err << "fit " << e["stock"].get<std::string>() << ' '
            << e.value("model", std::string("-")) << ' '
            << e.value("estimator", std::string("-")) << ": "
            << e["status"].get<std::string>() << '\n';
  if (data_err)
    return kData;
  return nonconv ? kNonConvergence : kOk;
}

// ---------------------------------------------------------------------------
// conditional

inline int cmd_conditional(const fs::path &series_path, ClassFilter cls,
                           const ConditionalOptions &co, const fs::path &out, RunManifest m) {
  auto in = load_series(series_path, cls);
  m.inputs = in.digests;
  std::vector<DurationPair> pairs;
  for (const auto &s : in.series) {
    const double sigma = *normalize(s.tau).sigma;
    std::vector<double> g(s.tau.size());
    std::transform(s.tau.begin(), s.tau.end(), g.begin(),
                   [sigma](double v) { return v / sigma; });
    const auto p = successive_pairs(g, s.session_starts);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  const auto prof = conditional_profile(pairs, co);
  fs::create_directories(out);

  json j;
  j["n_pairs"] = pairs.size();
  j["quintile_edges"] = prof.quintile_edges;
  j["group_sizes"] = prof.group_sizes;
  j["grand_mean"] = prof.grand_mean;
  j["median_g"] = prof.median_g;
  j["tail_fraction_above_median"] = prof.tail_fraction;
  std::optional<TrendTest> trend;
  try {
    trend = mean_conditional_trend(prof.mean_conditional);
  } catch (const TooFewSamples &) {
  }
  if (trend)
    j["trend"] = {{"spearman_rho", trend->rho},
                  {"t", trend->t_statistic},
                  {"p_increasing", trend->p_increasing},
                  {"n_bins", trend->n}};
  j["bins_per_decade"] = co.bins_per_decade;
  j["g0_bins"] = co.g0_bins;
  atomic_write(out / "profile.json", dump(j));

  for (std::size_t i = 0; i < 5; ++i) {
    std::ostringstream ss;
    write_density_csv(ss, prof.conditional_densities[i]);
    atomic_write(out / ("density_Q" + std::to_string(i + 1) + ".csv"), ss.str());
  }
  for (std::size_t i = 0; i < 4; ++i) {
    std::ostringstream ss;
    ss << "g,z,count_q5,count_qi\n";
    const auto &z = prof.z_curves[i];
    for (std::size_t k = 0; k < z.z.size(); ++k)
      ss << shortest(z.centers[k]) << ',' << shortest(z.z[k]) << ',' << z.count_q5[k] << ','
         << z.count_qi[k] << '\n';
    atomic_write(out / ("z_" + std::to_string(i + 1) + ".csv"), ss.str());
  }
  std::ostringstream mc;
  mc << "g0_lo,g0_hi,g0_center,mean_g,std_error,count,low_confidence\n";
  for (const auto &b : prof.mean_conditional.bins)
    mc << shortest(b.g0_lo) << ',' << shortest(b.g0_hi) << ',' << shortest(b.g0_center) << ','
       << shortest(b.mean) << ',' << shortest(b.std_error) << ',' << b.count << ','
       << (b.low_confidence ? 1 : 0) << '\n';
  atomic_write(out / "mean_conditional.csv", mc.str());
  atomic_write(out / "manifest.json", dump(m.to_json()));
  return kOk;
}

// ---------------------------------------------------------------------------
// synth

inline std::map<std::string, std::string> parse_kv(const std::string &s) {
  std::map<std::string, std::string> kv;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(',', start), s.size());
    const auto item = s.substr(start, end - start);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw UsageError("parameter '" + item + "' is not key=value");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    start = end + 1;
  }
  return kv;
}

inline double kv_number(const std::map<std::string, std::string> &kv, const std::string &k,
                        std::optional<double> fallback = std::nullopt) {
  const auto it = kv.find(k);
  if (it == kv.end()) {
    if (fallback)
      return *fallback;
    throw UsageError("missing parameter '" + k + "'");
  }
  double v = 0.0;
  const auto &t = it->second;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw UsageError("parameter '" + k + "' is not a number");
  return v;
}

inline GeneratorConfig generator_config(const std::string &model, const std::string &params,
                                        std::size_t n, std::uint64_t seed) {
  const auto kv = parse_kv(params);
  GeneratorConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  try {
    if (model == "weibull") {
      cfg.model = GeneratorModel::Weibull;
      cfg.params = WeibullParams(kv_number(kv, "alpha"), kv_number(kv, "beta"));
    } else if (model == "qexp") {
      cfg.model = GeneratorModel::QExponential;
      cfg.params = QExpParams(kv_number(kv, "mu"), kv_number(kv, "q"));
    } else {
      cfg.model = GeneratorModel::ACD;
      AcdSpec a;
      a.omega = kv_number(kv, "omega", 1.0);
      a.a = kv_number(kv, "a");
      a.b = kv_number(kv, "b");
      const auto inn = kv.count("innovation") ? kv.at("innovation") : "exponential";
      if (inn == "weibull") {
        a.innovation = Innovation::Weibull;
        a.innovation_shape = kv_number(kv, "shape");
      } else if (inn != "exponential") {
        throw UsageError("innovation must be exponential or weibull");
      }
      cfg.acd = a;
    }
    cfg.validate();
  } catch (const ParamError &e) {
    throw UsageError(e.what());
  }
  return cfg;
}

inline int cmd_synth(const std::string &model, const std::string &params, std::size_t n,
                     std::uint64_t seed, std::size_t stocks, double scale_lo, double scale_hi,
                     bool as_tape, const fs::path &out, RunManifest m) {
  if (stocks < 1)
    throw UsageError("--stocks must be >= 1");
  if (!(scale_lo > 0.0) || !(scale_hi > 0.0))
    throw UsageError("scales must be positive");
  std::vector<std::vector<double>> samples(stocks);
  parallel_for(stocks, [&](std::size_t i) {
    const auto cfg = generator_config(model, params, n,
                                      stocks == 1 ? seed : derive_seed(seed, i));
    samples[i] = generate(cfg);
    const double scale =
        stocks == 1 ? scale_lo
                    : scale_lo * std::pow(scale_hi / scale_lo,
                                          static_cast<double>(i) /
                                              static_cast<double>(stocks - 1));
    for (double &v : samples[i])
      v *= scale;
  });
  auto code = [stocks](std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", i + 1);
    return stocks == 1 ? std::string("000001") : std::string(buf);
  };
  for (std::size_t i = 0; i < stocks; ++i)
    m.seeds.push_back(stocks == 1 ? seed : derive_seed(seed, i));
  m.config["rng"] = kRngAlgorithm;

  std::ostringstream ss;
  if (as_tape) {
    std::vector<DurationSeries> series;
    for (std::size_t i = 0; i < stocks; ++i)
      series.push_back(make_series(code(i), to_centis(samples[i])));
    write_tape(ss, fabricate_tape(series));
  } else {
    for (std::size_t i = 0; i < stocks; ++i) {
      SeriesData sd{code(i), ClassFilter::All, std::move(samples[i]), {0}};
      std::ostringstream block;
      write_series_csv(block, sd);
      auto text = block.str();
      if (i > 0)
        text.erase(0, text.find('\n') + 1); // one header per file
      ss << text;
    }
  }
  atomic_write(out, ss.str());
  auto side = out;
  side += ".manifest.json";
  atomic_write(side, dump(m.to_json()));
  return kOk;
}

// ---------------------------------------------------------------------------
// report

inline std::string lineage_in(const json &j, const std::string &what) {
  if (!j.contains("lineage"))
    throw DataError(what + " has no lineage id");
  return j["lineage"].get<std::string>();
}

inline json load_json(const fs::path &p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception &e) {
    throw DataError("cannot parse " + p.string() + ": " + e.what());
  }
}

inline int cmd_report(const fs::path &fits_path, const std::optional<fs::path> &collapse_path,
                      const std::optional<fs::path> &conditional_dir, const fs::path &out,
                      RunManifest m) {
  const auto fits_json = load_json(fits_path);
  if (!fits_json.contains("manifest") || !fits_json.contains("fits"))
    throw DataError(fits_path.string() + " is not a fit artifact");
  const auto lineage = lineage_in(fits_json["manifest"], fits_path.string());
  m.inputs = {{fits_path.filename().string(), hex64(fnv1a64(read_file(fits_path)))}};

  std::optional<json> collapse_json, profile_json;
  if (collapse_path) {
    collapse_json = load_json(*collapse_path);
    if (!collapse_json->contains("manifest") ||
        lineage_in((*collapse_json)["manifest"], collapse_path->string()) != lineage)
      throw LineageMismatch("collapse report does not come from the fitted inputs");
    m.inputs.push_back(
        {collapse_path->filename().string(), hex64(fnv1a64(read_file(*collapse_path)))});
  }
  if (conditional_dir) {
    const auto man = load_json(*conditional_dir / "manifest.json");
    if (lineage_in(man, conditional_dir->string()) != lineage)
      throw LineageMismatch("conditional profile does not come from the fitted inputs");
    profile_json = load_json(*conditional_dir / "profile.json");
    m.inputs.push_back({"profile.json",
                        hex64(fnv1a64(read_file(*conditional_dir / "profile.json")))});
  }

  std::vector<LabeledFit> fits;
  for (const auto &e : fits_json["fits"]) {
    const auto status = e.value("status", std::string("ok"));
    if (status != "ok" && status != "nonconvergence")
      continue;
    fits.push_back({e.at("stock").get<std::string>(), fit_from_json(e)});
  }
  const auto tables = build_report(fits);

  std::ostringstream csv, txt;
  write_report_csv(csv, tables);
  write_report_text(txt, tables);
  if (collapse_json) {
    const auto &c = (*collapse_json)["normalized"];
    txt << "Collapse: max pairwise KS " << detail::fixed(c["max_ks"].get<double>(), 5)
        << " (critical " << detail::fixed(c["max_ks_critical"].get<double>(), 5)
        << ", family-wise alpha " << shortest(c["alpha"].get<double>()) << "), "
        << (c["collapses"].get<bool>() ? "collapses" : "does not collapse") << '\n';
  }
  if (profile_json && profile_json->contains("trend")) {
    const auto &t = (*profile_json)["trend"];
    txt << "Conditional: Spearman rho of <g|g0> vs g0 "
        << detail::fixed(t["spearman_rho"].get<double>(), 3) << ", one-sided p "
        << shortest(t["p_increasing"].get<double>()) << '\n';
  }
  fs::create_directories(out);
  atomic_write(out / "report.csv", csv.str());
  atomic_write(out / "report.txt", txt.str());
  m.config["lineage_checked"] = lineage;
  atomic_write(out / "manifest.json", dump(m.to_json()));
  return kOk;
}

// ---------------------------------------------------------------------------
// entry point

inline int run(const std::vector<std::string> &args, std::ostream &out = std::cout,
               std::ostream &err = std::cerr) {
  CLI::App app{"Intertrade duration analysis: extraction, scaling collapse, Weibull and "
               "q-exponential calibration, conditional profiles."};
  app.name("durascale");
  app.require_subcommand(1);

  RunManifest manifest;
  manifest.command_line = args;
  manifest.command_line.insert(manifest.command_line.begin(), "durascale");

  std::string tape, calendar = "default", series, cls_s = "all", model_s = "both",
                    est_s = "both", params, synth_model, fits_path;
  fs::path out_path;
  std::optional<std::string> export_dir, collapse_path, conditional_dir;
  int bpd = kDefaultBinsPerDecade, max_iter = 10000, g0_bins = 20;
  std::size_t nlse_min_count = 1, n = 0, stocks = 1, min_pairs = 1000, min_samples = 100;
  std::optional<std::uint64_t> seed;
  double alpha = 0.01, scale_lo = 1.0, scale_hi = 1.0;
  bool no_normalize = false, as_tape = false;
  std::vector<double> scale_range;

  auto *ingest = app.add_subcommand("ingest", "Extract duration series from a trade tape");
  ingest->add_option("--tape", tape, "Tape CSV (stock,date,time,class)")->required();
  ingest->add_option("--calendar", calendar, "'default' or a CSV of open,close sessions");
  ingest->add_option("--out", out_path, "Output directory")->required();

  auto *summ = app.add_subcommand("summarize", "Per-stock trade and duration counts");
  summ->add_option("--tape", tape, "Tape CSV")->required();
  summ->add_option("--calendar", calendar, "'default' or a session CSV");
  summ->add_option("--out", out_path, "Summary CSV")->required();

  auto *coll = app.add_subcommand("collapse", "Pairwise KS collapse test of normalized series");
  coll->add_option("--series", series, "Series directory or file")->required();
  coll->add_option("--class", cls_s, "all, filled or partial");
  coll->add_option("--bins-per-decade", bpd)->check(CLI::PositiveNumber);
  coll->add_option("--alpha", alpha, "Family-wise significance level")
      ->check(CLI::Range(1e-12, 0.5));
  coll->add_option("--export", export_dir, "Directory for density and CCDF CSVs");
  coll->add_option("--out", out_path, "Report JSON")->required();

  auto *fit = app.add_subcommand("fit", "Calibrate Weibull and q-exponential laws");
  fit->add_option("--series", series, "Series file or directory")->required();
  fit->add_option("--class", cls_s, "all, filled or partial (directory input)");
  fit->add_option("--model", model_s)->check(CLI::IsMember({"weibull", "qexp", "both"}));
  fit->add_option("--estimator", est_s)->check(CLI::IsMember({"mle", "nlse", "both"}));
  fit->add_option("--bins-per-decade", bpd)->check(CLI::PositiveNumber);
  fit->add_flag("--no-normalize", no_normalize, "Fit raw durations instead of tau/sigma");
  fit->add_option("--max-iter", max_iter, "NLSE iteration cap")->check(CLI::PositiveNumber);
  fit->add_option("--nlse-min-count", nlse_min_count, "Skip NLSE bins with fewer counts");
  fit->add_option("--min-samples", min_samples, "Minimum positive samples per MLE fit");
  fit->add_option("--out", out_path, "Fit JSON")->required();

  auto *cond = app.add_subcommand("conditional", "Conditional profile on the preceding duration");
  cond->add_option("--series", series, "Series directory or file")->required();
  cond->add_option("--class", cls_s, "all, filled or partial");
  cond->add_option("--bins-per-decade", bpd)->check(CLI::PositiveNumber);
  cond->add_option("--g0-bins", g0_bins)->check(CLI::Range(5, 1000));
  cond->add_option("--min-pairs", min_pairs, "Minimum pairs for the quintile split");
  cond->add_option("--out", out_path, "Output directory")->required();

  auto *syn = app.add_subcommand("synth", "Seeded synthetic durations or tapes");
  syn->add_option("--model", synth_model)
      ->required()
      ->check(CLI::IsMember({"weibull", "qexp", "acd"}));
  syn->add_option("--params", params,
                  "alpha=,beta= | mu=,q= | omega=,a=,b=[,innovation=weibull,shape=]")
      ->required();
  syn->add_option("--n", n, "Samples per stock")->required()->check(CLI::PositiveNumber);
  syn->add_option("--seed", seed, "64-bit seed")->required();
  syn->add_option("--stocks", stocks, "Number of stocks")->check(CLI::PositiveNumber);
  syn->add_option("--scale-range", scale_range, "LO HI per-stock duration scales")
      ->expected(2);
  syn->add_flag("--as-tape", as_tape, "Emit a fabricated trade tape");
  syn->add_option("--out", out_path, "Output file")->required();

  auto *rep = app.add_subcommand("report", "Table-shaped summary of a fit set");
  rep->add_option("--fits", fits_path, "Fit JSON")->required();
  rep->add_option("--collapse", collapse_path, "Collapse report JSON");
  rep->add_option("--conditional", conditional_dir, "Conditional output directory");
  rep->add_option("--out", out_path, "Output directory")->required();

  std::vector<std::string> argv_s{"durascale"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto &a : argv_s)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    json cfg;
    if (ingest->parsed()) {
      manifest.config = {{"command", "ingest"}, {"tape", tape}, {"calendar", calendar}};
      return cmd_ingest(tape, calendar, out_path, manifest);
    }
    if (summ->parsed()) {
      manifest.config = {{"command", "summarize"}, {"tape", tape}, {"calendar", calendar}};
      return cmd_summarize(tape, calendar, out_path, manifest);
    }
    if (coll->parsed()) {
      const auto cls = class_option(cls_s);
      manifest.config = {{"command", "collapse"}, {"class", cls_s},
                         {"bins_per_decade", bpd}, {"alpha", alpha}};
      manifest.definitions = definitions(bpd);
      return cmd_collapse(series, cls, bpd, alpha, out_path,
                          export_dir ? std::optional<fs::path>(*export_dir) : std::nullopt,
                          manifest);
    }
    if (fit->parsed()) {
      const auto cls = class_option(cls_s);
      FitOptions o;
      o.weibull = model_s != "qexp";
      o.qexp = model_s != "weibull";
      o.mle = est_s != "nlse";
      o.nlse = est_s != "mle";
      o.bins_per_decade = bpd;
      o.normalize = !no_normalize;
      o.max_iterations = max_iter;
      o.nlse_min_count = nlse_min_count;
      o.min_samples = min_samples;
      manifest.config = {{"command", "fit"},      {"class", cls_s},
                         {"model", model_s},      {"estimator", est_s},
                         {"bins_per_decade", bpd}, {"normalize", o.normalize},
                         {"max_iterations", max_iter}, {"nlse_min_count", nlse_min_count},
                         {"min_samples", min_samples}};
      manifest.definitions = definitions(bpd);
      return cmd_fit(series, cls, o, out_path, err, manifest);
    }
    if (cond->parsed()) {
      const auto cls = class_option(cls_s);
      ConditionalOptions co;
      co.bins_per_decade = bpd;
      co.g0_bins = g0_bins;
      co.min_samples = min_pairs;
      manifest.config = {{"command", "conditional"}, {"class", cls_s},
                         {"bins_per_decade", bpd},   {"g0_bins", g0_bins},
                         {"min_pairs", min_pairs}};
      manifest.definitions = definitions(bpd);
      manifest.definitions["pairs"] =
          "successive nonzero normalized durations within one session of one stock";
      return cmd_conditional(series, cls, co, out_path, manifest);
    }
    if (syn->parsed()) {
      if (scale_range.size() == 2) {
        scale_lo = scale_range[0];
        scale_hi = scale_range[1];
      }
      manifest.config = {{"command", "synth"}, {"model", synth_model}, {"params", params},
                         {"n", n},             {"stocks", stocks},    {"as_tape", as_tape},
                         {"scale_range", {scale_lo, scale_hi}}};
      return cmd_synth(synth_model, params, n, *seed, stocks, scale_lo, scale_hi, as_tape,
                       out_path, manifest);
    }
    if (rep->parsed()) {
      manifest.config = {{"command", "report"}};
      return cmd_report(fits_path, collapse_path ? std::optional<fs::path>(*collapse_path)
                                                 : std::nullopt,
                        conditional_dir ? std::optional<fs::path>(*conditional_dir)
                                        : std::nullopt,
                        out_path, manifest);
    }
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConvergenceError &e) {
    err << "non-convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

} // namespace durascale::cli
