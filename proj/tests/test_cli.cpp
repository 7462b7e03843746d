#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "opdiff/cli.hpp"
#include "opdiff/error.hpp"
#include "opdiff/experiments.hpp"

using namespace opdiff;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config(const std::string& command) {
  return {{"schema_version", 1}, {"command", command}, {"function", "sin"}, {"n", 1}, {"dim", 4}, {"seed", 1}};
}

json experiment_config(const std::string& id, json params = json::object()) {
  json j = {{"schema_version", 1}, {"command", "experiment"}, {"experiment", id}, {"params", std::move(params)}};
  if (id != "commutative_counterexample") j["function"] = "sin";
  return j;
}

// Returns "kind: detail" of the thrown error, or "" when parsing succeeds.
std::string parse_error(const json& j) {
  try {
    (void)cli::parse_config(j);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("opdiff_cli_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "config.json") {
  const auto path = dir / name;
  std::ofstream(path) << j.dump(2);
  return path;
}

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "opdiff");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

}  // namespace

TEST(ParseConfig, ErrorsCarryLocators) {
  auto unknown = base_config("derive");
  unknown["bogus"] = 1;
  EXPECT_EQ(parse_error(unknown), "schema-violation: /bogus: unknown field");

  auto missing = base_config("derive");
  missing.erase("schema_version");
  EXPECT_EQ(parse_error(missing), "schema-violation: /schema_version: missing");

  auto version = base_config("derive");
  version["schema_version"] = 2;
  EXPECT_EQ(parse_error(version).rfind("schema-violation: /schema_version", 0), 0u);

  auto command = base_config("integrate");
  EXPECT_EQ(parse_error(command).rfind("schema-violation: /command", 0), 0u);

  auto fn = base_config("derive");
  fn["function"] = "unknown_name";
  EXPECT_EQ(parse_error(fn).rfind("unknown-function: /function", 0), 0u);

  auto order = base_config("derive");
  order["n"] = 0;
  EXPECT_EQ(parse_error(order).rfind("schema-violation: /n", 0), 0u);

  auto dim = base_config("derive");
  dim["dim"] = 0;
  EXPECT_EQ(parse_error(dim).rfind("schema-violation: /dim", 0), 0u);

  auto params = base_config("taylor");
  params["params"] = {{"trials", 2}, {"scal", 0.1}};
  EXPECT_EQ(parse_error(params), "schema-violation: /params/scal: unknown field");

  auto param_type = base_config("taylor");
  param_type["params"] = {{"trials", "two"}};
  EXPECT_EQ(parse_error(param_type).rfind("schema-violation: /params/trials", 0), 0u);

  auto output = base_config("derive");
  output["output"] = {{"dir", "x"}, {"format", "xml"}};
  EXPECT_EQ(parse_error(output), "schema-violation: /output/format: unknown field");

  EXPECT_EQ(parse_error(experiment_config("no_such_probe")).rfind("schema-violation: /experiment", 0), 0u);
  EXPECT_EQ(parse_error(json::array()).rfind("schema-violation: /", 0), 0u);
}

TEST(ParseConfig, PRange) {
  for (const json& p : {json(0.5), json(1.0), json("inf")}) {
    auto j = base_config("derive");
    j["p"] = p;
    EXPECT_EQ(parse_error(j).rfind("invalid-p: /p", 0), 0u) << p;
  }
  for (const json& p : {json(1.0), json("inf")}) {
    auto j = base_config("derive");
    j["p"] = p;
    j["diagnostics_mode"] = true;
    EXPECT_EQ(parse_error(j), "") << p;
  }
  auto below_one = base_config("derive");
  below_one["p"] = 0.5;
  below_one["diagnostics_mode"] = true;
  EXPECT_EQ(parse_error(below_one).rfind("invalid-p", 0), 0u);
}

TEST(ParseConfig, NormalizedFormRoundTrips) {
  auto j = base_config("verify");
  j["p"] = 3.0;
  j["params"] = {{"directions", 2}};
  const auto config = cli::parse_config(j);
  const auto normalized = config.to_json();
  EXPECT_EQ(cli::parse_config(normalized).to_json(), normalized);
  EXPECT_EQ(normalized.at("params").at("directions"), 2);
  EXPECT_TRUE(normalized.at("params").contains("t_grid"));

  const auto experiment = cli::parse_config(experiment_config("commutative_counterexample")).to_json();
  EXPECT_EQ(cli::parse_config(experiment).to_json(), experiment);
}

TEST(Execute, TaylorSineExample) {
  auto j = base_config("taylor");
  j["n"] = 2;
  j["dim"] = 6;
  const auto reports = cli::execute(cli::parse_config(j));
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_LT(reports[0].scalar("max_identity_gap"), 1e-8);
  EXPECT_EQ(cli::exit_status(reports), 0);
}

TEST(Execute, ExitStatusFollowsVerdicts) {
  ExperimentReport passed, failed, info;
  passed.verdict = Verdict::pass;
  failed.verdict = Verdict::fail;
  info.verdict = Verdict::informational;
  EXPECT_EQ(cli::exit_status({passed, info}), 0);
  EXPECT_EQ(cli::exit_status({passed, failed}), 2);
}

TEST(Execute, EchoedConfigReproducesMeasurements) {
  const std::vector<json> configs = {
      [] {
        auto j = base_config("derive");
        j["n"] = 2;
        return j;
      }(),
      base_config("taylor"),
      [] {
        auto j = base_config("verify");
        j["function"] = "lorentzian";
        j["params"] = {{"directions", 2}};
        return j;
      }(),
      experiment_config("rank_one_check", {{"m", 2}, {"t", 0.25}}),
      experiment_config("necessity_probe", {{"lambda_grid", {{"lo", 0.0}, {"hi", 10.0}, {"step", 0.1}}}}),
      experiment_config("commutative_counterexample"),
      [] {
        auto j = experiment_config("norm_bound_probe", {{"trials", 2}});
        j["dim"] = 3;
        return j;
      }(),
  };
  for (const auto& j : configs) {
    const auto first = cli::execute(cli::parse_config(j));
    ASSERT_FALSE(first.empty());
    for (const auto& r : first) {
      const auto report_json = r.to_json();
      EXPECT_FALSE(validate_report(report_json).has_value()) << *validate_report(report_json);
      ASSERT_TRUE(report_json.at("config").contains("run_config")) << j;
      const auto again = cli::execute(cli::parse_config(report_json.at("config").at("run_config")));
      ASSERT_EQ(again.size(), first.size());
      json a = json::array(), b = json::array();
      for (const auto& m : r.measurements) a.push_back(m.value);
      for (const auto& m : again.front().measurements) b.push_back(m.value);
      EXPECT_EQ(a, b) << j;
    }
  }
}

TEST(WriteReport, FilesValidateAndNameEmbedsSeed) {
  TempDir dir("write");
  const auto reports = cli::execute(cli::parse_config(experiment_config("commutative_counterexample")));
  const auto files = cli::write_report(reports.front(), dir.path(), 7, true);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "commutative_counterexample_seed7.json");
  EXPECT_EQ(files[1].filename(), "commutative_counterexample_seed7.csv");
  const auto j = json::parse(slurp(files[0]));
  EXPECT_FALSE(validate_report(j).has_value());
  EXPECT_EQ(slurp(files[1]), reports.front().to_csv());
  for (const auto& entry : fs::directory_iterator(dir.path())) {
    EXPECT_TRUE(entry.path().extension() == ".json" || entry.path().extension() == ".csv") << entry.path();
  }
  EXPECT_EQ(cli::write_report(reports.front(), dir.path(), 7, false).size(), 1u);
}

TEST(RunMain, ExitCodeContract) {
  TempDir dir("exit");
  auto taylor = base_config("taylor");
  taylor["n"] = 2;
  taylor["dim"] = 6;
  auto r = run({"--config", write_config(dir.path(), taylor).string(), "--out", dir.path().string()});
  EXPECT_EQ(r.status, 0) << r.err;
  const auto report = json::parse(slurp(dir.path() / "taylor_seed1.json"));
  EXPECT_FALSE(validate_report(report).has_value());

  auto unknown = base_config("derive");
  unknown["function"] = "unknown_name";
  r = run({"--config", write_config(dir.path(), unknown).string(), "--out", dir.path().string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("unknown-function"), std::string::npos) << r.err;

  auto bad_p = experiment_config("commutative_counterexample");
  bad_p["p"] = 0.5;
  r = run({"--config", write_config(dir.path(), bad_p).string(), "--out", dir.path().string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("invalid-p"), std::string::npos) << r.err;

  // Fresnel necessity on a coarse window still fails its verdict.
  auto violated = experiment_config("necessity_probe",
      {{"lambda_grid", {{"lo", 0.0}, {"hi", 1000.0}, {"step", 0.05}}}, {"t_grid", {1e-1, 1e-2}}});
  violated["function"] = "fresnel";
  r = run({"--config", write_config(dir.path(), violated).string(), "--out", dir.path().string()});
  EXPECT_EQ(r.status, 2) << r.err;

  std::ofstream(dir.path() / "broken.json") << "{\"schema_version\": 1,";
  r = run({"--config", (dir.path() / "broken.json").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("schema-violation"), std::string::npos);

  r = run({});
  EXPECT_EQ(r.status, 1);
  r = run({"--no-such-flag"});
  EXPECT_EQ(r.status, 1);
}

TEST(RunMain, FlagsOverrideConfig) {
  TempDir dir("flags");
  auto j = base_config("derive");
  j["p"] = "inf";
  const auto path = write_config(dir.path(), j).string();
  EXPECT_EQ(run({"--config", path, "--out", dir.path().string()}).status, 1);
  const auto r = run({"--config", path, "--out", dir.path().string(), "--diagnostics-mode", "--seed", "42"});
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "derive_seed42.json"));
  const auto report = json::parse(slurp(dir.path() / "derive_seed42.json"));
  EXPECT_EQ(report.at("config").at("run_config").at("seed"), 42);
}

TEST(RunMain, ListExperimentsIsStable) {
  const auto a = run({"list-experiments"});
  const auto b = run({"list-experiments"});
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("rank_one_check — Eq. derivative_at_Q_k\n"), std::string::npos);
  EXPECT_NE(a.out.find("commutative_counterexample — Comment 2\n"), std::string::npos);
}

TEST(RunMain, RerunsAreByteIdentical) {
  TempDir first("rerun_a"), second("rerun_b");
  auto j = experiment_config("norm_bound_probe", {{"trials", 3}});
  j["dim"] = 4;
  j["seed"] = 5;
  const auto path = write_config(first.path(), j, "in.json").string();
  ASSERT_EQ(run({"--config", path, "--out", first.path().string()}).status, 0);
  ASSERT_EQ(run({"--config", path, "--out", second.path().string()}).status, 0);
  for (const char* name : {"norm_bound_probe_seed5.json", "norm_bound_probe_seed5.csv"}) {
    EXPECT_EQ(slurp(first.path() / name), slurp(second.path() / name)) << name;
  }
}

TEST(Binary, RunsFromTheCommandLine) {
  const char* bin = std::getenv("OPDIFF_BIN");
  if (bin == nullptr) GTEST_SKIP() << "OPDIFF_BIN not set";
  TempDir dir("binary");
  const auto listing = dir.path() / "list.txt";
  const std::string list_cmd = std::string(bin) + " list-experiments > " + listing.string();
  EXPECT_EQ(std::system(list_cmd.c_str()), 0);
  EXPECT_NE(slurp(listing).find("commutative_counterexample — Comment 2"), std::string::npos);

  auto bad = experiment_config("commutative_counterexample");
  bad["p"] = 0.5;
  const auto path = write_config(dir.path(), bad);
  const std::string cmd = std::string(bin) + " --config " + path.string() + " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 1);
}
