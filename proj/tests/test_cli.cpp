#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "durascale/cli.hpp"

using namespace durascale;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string &name) {
  const auto p = fs::path(DURASCALE_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST_CASE("usage errors exit 1", "[cli]") {
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"bogus"}).code == cli::kUsage);
  CHECK(invoke({"synth", "--model", "weibull", "--params", "alpha=1,beta=1", "--n", "10", "--out", "x"}).code ==
        cli::kUsage); // no seed
  CHECK(invoke({"synth", "--model", "weibull", "--params", "alpha=1,beta=-1", "--n", "10", "--seed", "1", "--out",
             (fresh("usage") / "x.csv").string()})
            .code == cli::kUsage);
  CHECK(invoke({"synth", "--model", "acd", "--params", "a=0.5,b=0.6", "--n", "10", "--seed", "1", "--out",
             (fresh("usage") / "x.csv").string()})
            .code == cli::kUsage);
  CHECK(invoke({"fit", "--series", "x", "--model", "gamma", "--out", "y"}).code == cli::kUsage);
  CHECK(invoke({"--help"}).code == cli::kOk);
}

TEST_CASE("data errors exit 2", "[cli]") {
  const auto d = fresh("data");
  CHECK(invoke({"ingest", "--tape", (d / "missing.csv").string(), "--out", (d / "o").string()}).code == cli::kData);
  std::ofstream(d / "bad.csv") << "stock,date,time,class\n000001,2003-01-02,09:30:00,Q\n";
  const auto r = invoke({"ingest", "--tape", (d / "bad.csv").string(), "--out", (d / "o").string()});
  CHECK(r.code == cli::kData);
  CHECK(r.err.find("row 2") != std::string::npos);
}

TEST_CASE("pipeline from synthetic tape to report", "[cli]") {
  const auto d = fresh("pipeline");
  const auto tape = (d / "tape.csv").string();
  REQUIRE(invoke({"synth", "--model", "weibull", "--params", "alpha=1.85,beta=0.68", "--n", "5000", "--seed", "11",
               "--stocks", "3", "--scale-range", "20", "60", "--as-tape", "--out", tape})
              .code == 0);
  CHECK(fs::exists(tape + ".manifest.json"));
  const auto series = (d / "series").string();
  REQUIRE(invoke({"ingest", "--tape", tape, "--out", series}).code == 0);
  CHECK(fs::exists(d / "series" / "000001_all.csv"));
  CHECK(fs::exists(d / "series" / "000003_filled.csv"));
  CHECK_FALSE(fs::exists(d / "series" / "000001_partial.csv"));
  CHECK(fs::exists(d / "series" / "summary.csv"));

  REQUIRE(invoke({"summarize", "--tape", tape, "--out", (d / "summary.csv").string()}).code == 0);
  CHECK(read_file(d / "summary.csv") == read_file(d / "series" / "summary.csv"));

  const auto fits = (d / "fits.json").string();
  REQUIRE(invoke({"fit", "--series", series, "--out", fits}).code == 0);
  const auto j = json::parse(read_file(fits));
  CHECK(j["fits"].size() == 16); // 3 stocks + ensemble, 2 models, 2 estimators
  CHECK(j["manifest"]["definitions"].contains("nlse_chi"));

  // identical invocations give identical bytes
  const auto fits2 = (d / "fits2.json").string();
  REQUIRE(invoke({"fit", "--series", series, "--out", fits2}).code == 0);
  auto a = json::parse(read_file(fits)), b = json::parse(read_file(fits2));
  a["manifest"].erase("command_line");
  b["manifest"].erase("command_line");
  CHECK(a.dump() == b.dump());

  const auto coll = (d / "collapse.json").string();
  REQUIRE(invoke({"collapse", "--series", series, "--out", coll, "--export", (d / "plots").string()}).code == 0);
  CHECK(fs::exists(d / "plots" / "ccdf.csv"));
  const auto cond = (d / "cond").string();
  REQUIRE(invoke({"conditional", "--series", series, "--out", cond}).code == 0);
  CHECK(fs::exists(d / "cond" / "z_4.csv"));

  const auto rep = (d / "report").string();
  REQUIRE(invoke({"report", "--fits", fits, "--collapse", coll, "--conditional", cond, "--out", rep}).code == 0);
  const auto txt = read_file(d / "report" / "report.txt");
  CHECK(txt.find("NLSE") != std::string::npos);
  CHECK(txt.find("Collapse") != std::string::npos);

  // artifacts built from other inputs are rejected
  const auto other = (d / "other").string();
  REQUIRE(invoke({"synth", "--model", "qexp", "--params", "mu=4.17,q=1.65", "--n", "3000", "--seed", "12",
               "--out", (d / "other" / "000009_all.csv").string()})
              .code == 0);
  REQUIRE(invoke({"fit", "--series", other, "--out", (d / "other_fits.json").string()}).code == 0);
  const auto mismatch = invoke({"report", "--fits", (d / "other_fits.json").string(), "--collapse", coll, "--out", rep});
  CHECK(mismatch.code == cli::kData);
  CHECK(mismatch.err.find("does not come from") != std::string::npos);
}

TEST_CASE("light-tailed data reports tail_too_light", "[cli]") {
  const auto d = fresh("light");
  REQUIRE(invoke({"synth", "--model", "weibull", "--params", "alpha=1,beta=1", "--n", "5000", "--seed", "3", "--out",
               (d / "s" / "000001_all.csv").string()})
              .code == 0);
  const auto r = invoke({"fit", "--series", (d / "s").string(), "--model", "qexp", "--estimator", "mle", "--out",
                      (d / "f.json").string()});
  CHECK(r.code == 0);
  const auto j = json::parse(read_file(d / "f.json"));
  REQUIRE(j["fits"].size() == 1);
  CHECK(j["fits"][0]["status"] == "tail_too_light");
  CHECK(j["fits"][0]["fallback"]["model"] == "exponential");
}

TEST_CASE("NLSE iteration cap exits 3 and still writes fits", "[cli]") {
  const auto d = fresh("cap");
  REQUIRE(invoke({"synth", "--model", "qexp", "--params", "mu=4.17,q=1.65", "--n", "5000", "--seed", "3", "--out",
               (d / "s" / "000001_all.csv").string()})
              .code == 0);
  const auto r = invoke({"fit", "--series", (d / "s").string(), "--estimator", "nlse", "--max-iter", "1", "--out",
                      (d / "f.json").string()});
  CHECK(r.code == cli::kNonConvergence);
  const auto j = json::parse(read_file(d / "f.json"));
  REQUIRE(j["fits"].size() == 2);
  CHECK(j["fits"][0]["status"] == "nonconvergence");
  CHECK(j["fits"][0]["converged"] == false);
}

TEST_CASE("ACD synth with seeds in the manifest", "[cli]") {
  const auto d = fresh("acd");
  const auto out = (d / "acd.csv").string();
  REQUIRE(invoke({"synth", "--model", "acd", "--params", "omega=1,a=0.2,b=0.7", "--n", "2000", "--seed", "5", "--stocks",
               "2", "--out", out})
              .code == 0);
  const auto m = json::parse(read_file(out + ".manifest.json"));
  CHECK(m["seeds"].size() == 2);
  CHECK(m["seeds"][0].get<std::uint64_t>() == derive_seed(5, 0));
  std::istringstream in(read_file(out));
  const auto blocks = read_series_csv(in);
  CHECK(blocks.size() == 2);
  CHECK(blocks[1].tau.size() == 2000);
}
