#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "searchsig/cli.hpp"
#include "searchsig/io.hpp"
#include "searchsig/text.hpp"
#include "support.hpp"

using namespace searchsig;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> synth_args(const fs::path& out) {
  return {"synth",   "--out",       out.string(), "--seed",        "7",     "--states",
          "6",       "--counties",  "40",         "--zips",        "300",   "--queries",
          "200",     "--vocab-size", "25",        "--top-k",       "80",    "--label",
          "lin:linear_in_signature:r2=0.9"};
}

// One synthetic world plus every derived artifact, built once.
struct Pipeline {
  testing::TempDir dir{"cli_pipeline"};
  fs::path world = dir / "world";
  fs::path vocab = dir / "vocab";
  fs::path sigs = dir / "sigs";
  fs::path split = dir / "split";

  Pipeline() {
    REQUIRE(run(synth_args(world)).code == 0);
    REQUIRE(run({"build-vocab", "--out", vocab.string(), "--log", (world / "query_log.csv").string(), "--vocab-size",
                 "25", "--top-k", "80"})
                .code == 0);
    REQUIRE(run({"vectorize", "--out", sigs.string(), "--log", (world / "query_log.csv").string(), "--vocab",
                 (vocab / "vocab.csv").string(), "--geography", (world / "geography.csv").string(), "--overlaps",
                 (world / "overlaps.csv").string()})
                .code == 0);
    REQUIRE(run({"split", "--out", split.string(), "--geography", (world / "geography.csv").string(), "--overlaps",
                 (world / "overlaps.csv").string(), "--seed", "7", "--holdout-frac", "0.2", "--folds", "5"})
                .code == 0);
  }

  std::vector<std::string> states() const {
    return load_hierarchy(world / "geography.csv", world / "overlaps.csv").states();
  }

  std::vector<std::string> task(const std::string& sub, const fs::path& out) const {
    return {sub,
            "--out",
            out.string(),
            "--geography",
            (world / "geography.csv").string(),
            "--overlaps",
            (world / "overlaps.csv").string(),
            "--signatures",
            (sigs / "signatures.csv").string(),
            "--labels",
            (world / "labels_lin.csv").string()};
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  testing::TempDir dir("cli_usage");
  const auto missing = run({"impute", "--out", dir.path().string(), "--geography", "g.csv", "--signatures", "s.csv"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("UsageError") != std::string::npos);
  CHECK(missing.err.find("--labels") != std::string::npos);

  CHECK(run({"split", "--out", dir.path().string(), "--geography", "g.csv", "--bogus", "1"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"split", "--out", dir.path().string(), "--geography", "g.csv", "--jobs", "0"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"impute", "--help"}).code == 0);
}

TEST_CASE("validation and runtime errors map to exit codes 1 and 2") {
  testing::TempDir dir("cli_errors");
  const auto missing_file = run({"split", "--out", dir.path().string(), "--geography", (dir / "none.csv").string()});
  CHECK(missing_file.code == 1);
  CHECK(missing_file.err.find("MissingFile") != std::string::npos);

  const Pipeline& p = pipeline();
  const auto all_states = run(p.task("extrapolate", dir / "x") +
                              std::vector<std::string>{"--mode", "pair", "--source-states", join(p.states(), ",")});
  CHECK(all_states.code == 2);
  CHECK(all_states.err.find("EmptyTestSet") != std::string::npos);

  const auto bad_model = run(p.task("impute", dir / "y") + std::vector<std::string>{"--models", "lasso"});
  CHECK(bad_model.code == 1);
}

TEST_CASE("split command holds out 20% of counties") {
  const Pipeline& p = pipeline();
  const RegionHierarchy h = load_hierarchy(p.world / "geography.csv", p.world / "overlaps.csv");
  const SplitSpec s = load_split(p.split / "split.csv", p.split / "split_meta.csv", &h);
  CHECK(s.holdout_counties.size() == h.counties().size() / 5);
  CHECK(s.k_folds == 5);
  CHECK(s.seed == 7);
  CHECK(fs::exists(p.split / "config_split.json"));
  const std::string config = testing::read_file(p.split / "config_split.json");
  CHECK(config.find("\"seed\"") != std::string::npos);
  CHECK(config.find("\"holdout-frac\"") != std::string::npos);
}

TEST_CASE("synth is deterministic and echoes its config") {
  testing::TempDir a("cli_synth_a"), b("cli_synth_b");
  const auto first = run(synth_args(a.path()));
  REQUIRE(first.code == 0);
  CHECK(first.out.find("\"subcommand\": \"synth\"") != std::string::npos);
  REQUIRE(run(synth_args(b.path())).code == 0);
  CHECK(testing::snapshot(a.path()) == testing::snapshot(b.path()));
}

TEST_CASE("every task subcommand is byte-deterministic and leaves inputs untouched") {
  const Pipeline& p = pipeline();
  const auto inputs_before = testing::snapshot(p.dir.path());
  const std::vector<std::string> quick = {"--lambda-grid", "0.01,1,100"};
  const std::vector<std::vector<std::string>> commands = {
      p.task("impute", "OUT") + quick + std::vector<std::string>{"--split", (p.split / "split.csv").string()},
      p.task("impute", "OUT") + quick + std::vector<std::string>{"--pop-filter", "--jobs", "3"},
      p.task("extrapolate", "OUT") + quick + std::vector<std::string>{"--state-folds", "3"},
      p.task("extrapolate", "OUT") + quick + std::vector<std::string>{"--mode", "pair", "--source-states", p.states()[0] + "," + p.states()[1]},
      p.task("superres", "OUT") + quick +
          std::vector<std::string>{"--county-labels", (p.world / "county_labels_lin.csv").string()},
      p.task("ablate", "OUT") + quick +
          std::vector<std::string>{"--train-fractions", "0.5,1", "--dims", "5,25", "--ablation-seeds", "2"},
  };
  testing::TempDir scratch("cli_det");
  int index = 0;
  for (auto cmd : commands) {
    std::map<std::string, std::string> trees[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = scratch / ("run" + std::to_string(index) + "_" + std::to_string(rep));
      std::replace(cmd.begin(), cmd.end(), std::string(rep == 0 ? "OUT" : (scratch / ("run" + std::to_string(index) + "_0")).string()),
                   out.string());
      const auto r = run(cmd);
      INFO(cmd[0] << ": " << r.err);
      REQUIRE(r.code == 0);
      trees[rep] = testing::snapshot(out);
    }
    CHECK(trees[0] == trees[1]);
    CHECK(trees[0].size() > 1);
    ++index;
  }

  // report over the imputation outputs
  const fs::path reports = scratch / "run0_0";
  std::map<std::string, std::string> summaries[2];
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path out = scratch / ("report" + std::to_string(rep));
    REQUIRE(run({"report", "--out", out.string(), "--reports", reports.string()}).code == 0);
    summaries[rep] = testing::snapshot(out);
  }
  CHECK(summaries[0] == summaries[1]);
  CHECK(summaries[0].contains("summary.json"));
  CHECK(summaries[0].at("summary.csv").starts_with("task,model,filter,"));
  CHECK(testing::snapshot(p.dir.path()).size() >= inputs_before.size());
  for (const auto& [path, bytes] : inputs_before) CHECK(testing::snapshot(p.dir.path()).at(path) == bytes);
}

TEST_CASE("imputation outputs follow the naming scheme") {
  const Pipeline& p = pipeline();
  testing::TempDir out("cli_names");
  REQUIRE(run(p.task("impute", out.path()) + std::vector<std::string>{"--lambda-grid", "1"}).code == 0);
  const auto files = testing::snapshot(out.path());
  for (const char* model : {"topsearch_ridge", "idw", "hier_median"}) {
    for (const char* kind : {"report", "scatter", "choropleth", "model"}) {
      const std::string ext = std::string(kind) == "report" || std::string(kind) == "model" ? ".json" : ".csv";
      CHECK(files.contains(std::string(kind) + "_imputation_lin_" + model + ext));
    }
  }
  const EvalReport r = load_report(out / "report_imputation_lin_topsearch_ridge.json");
  CHECK(r.per_fold_r2.size() == 5);
  CHECK(r.lambda == 1.0);
  CHECK_FALSE(r.runtime_s.has_value());
}
