#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "fblab/cli/config.hpp"
#include "fblab/cli/run.hpp"
#include "fblab/cli/toml.hpp"
#include "fblab/error.hpp"

using namespace fblab;
using namespace fblab::cli;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fblab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

const Artifact& find(const RunResult& r, const std::string& path) {
  for (const auto& a : r.artifacts)
    if (a.path == path) return a;
  throw std::runtime_error("missing artifact " + path);
}

}  // namespace

TEST(Toml, TablesArraysAndInlineTables) {
  const json j = parse_toml_string(R"(# experiment
scenario = "pme_preserve"  # trailing comment
m = 2
T = 5e-1
alpha = [0.0,
         0.25, 1_000]
grid.cells = 64
[concavity]
c_tol = 10.0
sharp_index = "0:1:12"
[G]
kind = "fisher_kpp"
point = { u_M = 1.0, flag = true }
)");
  EXPECT_EQ(j["scenario"], "pme_preserve");
  EXPECT_TRUE(j["m"].is_number_integer());
  EXPECT_DOUBLE_EQ(j["T"].get<double>(), 0.5);
  EXPECT_EQ(j["alpha"].size(), 3u);
  EXPECT_EQ(j["alpha"][2].get<int>(), 1000);
  EXPECT_EQ(j["grid"]["cells"], 64);
  EXPECT_EQ(j["concavity"]["sharp_index"], "0:1:12");
  EXPECT_EQ(j["G"]["point"]["flag"], true);
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    (void)parse_toml_string("a = 1\nb = \n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { (void)parse_toml_string("a = 1\na = 2\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { (void)parse_toml_string("[[runs]]\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { (void)parse_toml_string("a = 'literal'\n"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { (void)parse_toml_file("/nonexistent/fblab.toml"); }), ErrorCode::ConfigError);
}

TEST(Config, ScenarioNames) {
  EXPECT_EQ(scenario_from_string("hs_evolve"), Scenario::HsEvolve);
  EXPECT_EQ(scenario_from_string("counterexample"), Scenario::PmeCounterexample);
  EXPECT_EQ(to_string(Scenario::IncompressibleLimit), "incompressible_limit");
  EXPECT_EQ(code_of([] { (void)scenario_from_string("nope"); }), ErrorCode::ConfigError);
}

TEST(Config, ReactionAndSharpIndexStrings) {
  EXPECT_EQ(parse_reaction("tumor:2").parameter(), 2.0);
  EXPECT_EQ(parse_reaction("fisher:1,3").m(), 3.0);
  EXPECT_EQ(parse_reaction("constant:0.5").kind(), ReactionKind::Constant);
  EXPECT_EQ(code_of([] { (void)parse_reaction("tumor:-1"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { (void)parse_reaction("logistic:1"); }), ErrorCode::ConfigError);
  const auto r = parse_sharp_index("0.1:0.9:10");
  EXPECT_DOUBLE_EQ(r.lo, 0.1);
  EXPECT_DOUBLE_EQ(r.hi, 0.9);
  EXPECT_EQ(r.iters, 10);
  EXPECT_EQ(code_of([] { (void)parse_sharp_index("0:1"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { (void)parse_sharp_index("1:0:5"); }), ErrorCode::ConfigError);
}

TEST(Config, DefaultsPerScenario) {
  const auto pre = load_config(Scenario::PmePreserve, json::object());
  EXPECT_EQ(pre.grid.cells, 256);
  EXPECT_DOUBLE_EQ(pre.grid.extent, 2.6);
  EXPECT_EQ(pre.erode_cells(), 3);
  const auto lim = load_config(Scenario::IncompressibleLimit, json::object());
  EXPECT_EQ(lim.m_list, (std::vector<double>{10, 40, 160}));
  EXPECT_EQ(lim.G.kind(), ReactionKind::Constant);
  const auto cex = load_config(Scenario::PmeCounterexample, json::object());
  EXPECT_EQ(cex.alphas, (std::vector<double>{0.0, 0.25, 0.75, 1.0}));
}

TEST(Config, FailFastValidation) {
  auto bad = [](Scenario s, const char* toml) {
    return code_of([&] { (void)load_config(s, parse_toml_string(toml)); });
  };
  EXPECT_EQ(bad(Scenario::PmePreserve, "typo = 1\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::PmePreserve, "m = \"two\"\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::PmePreserve, "m = 1.0\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::PmePreserve, "[grid]\ncells = 4\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::PmePreserve, "[estimates]\nK = 2.0\nL = 1.0\nc_lower = 1.0\nC_upper = 1.0\n"),
            ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::PmeCounterexample, "alpha = [0.25, 0.5]\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::HsEvolve, "G = \"constant:0\"\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::HsInitialSharpness, "[probe]\na = 0.5\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::IncompressibleLimit, "m_list = [10]\n"), ErrorCode::ConfigError);
  EXPECT_EQ(bad(Scenario::ConditionsCheck, "scenario = \"hs_evolve\"\n"), ErrorCode::ConfigError);
}

TEST(Manifest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, EmptyAndTwoFiles) {
  const json empty = json::parse(build_manifest(json::object(), {}, 0.0).dump());
  EXPECT_TRUE(empty["files"].is_array());
  EXPECT_TRUE(empty["files"].empty());
  EXPECT_FALSE(empty["version"].get<std::string>().empty());

  const std::vector<Artifact> two{{"a.csv", "x,y\n1,2\n"}, {"b.csv", "t\n0\n"}};
  const auto dir = scratch("manifest");
  RunResult r;
  r.artifacts = two;
  const std::string path = write_outputs(dir.string(), r, json{{"seed", 1}}, 0.5);
  std::ifstream is(path);
  const json m = json::parse(is);
  ASSERT_EQ(m["files"].size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    std::ifstream f(dir / two[k].path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    EXPECT_EQ(m["files"][k]["sha256"], sha256_hex(bytes));
    EXPECT_EQ(m["files"][k]["bytes"], bytes.size());
  }
  EXPECT_EQ(m["config"]["seed"], 1);
  std::filesystem::remove_all(dir);
}

TEST(Run, ConditionsOnTumorAllSatisfied) {
  const auto r = run(load_config(Scenario::ConditionsCheck, parse_toml_string("G = \"tumor:1\"\n")));
  EXPECT_TRUE(r.violations.empty());
  const std::string csv = find(r, "conditions.csv").content;
  for (const char* name : {"concavityc,1", "g0b,1", "abc,1", "abc1,1", "hsc,1"})
    EXPECT_NE(csv.find(name), std::string::npos) << name;
}

TEST(Run, DeterministicOutputs) {
  const char* toml = "T = 0.1\nsnapshot_dt = 0.05\nseed = 42\n[grid]\ncells = 64\n";
  const auto c = load_config(Scenario::PmePreserve, parse_toml_string(toml));
  const auto a = run(c);
  const auto b = run(c);
  ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
  for (std::size_t k = 0; k < a.artifacts.size(); ++k) {
    EXPECT_EQ(a.artifacts[k].path, b.artifacts[k].path);
    EXPECT_EQ(sha256_hex(a.artifacts[k].content), sha256_hex(b.artifacts[k].content)) << a.artifacts[k].path;
  }
}

TEST(Run, DumpFieldsWritesSnapshotIndex) {
  const char* toml = "T = 0.1\nsnapshot_dt = 0.05\ndump_fields = true\n[grid]\ncells = 64\n";
  const auto r = run(load_config(Scenario::PmePreserve, parse_toml_string(toml)));
  EXPECT_NE(find(r, "trajectory.csv").content.find("pressure_0002.csv"), std::string::npos);
  EXPECT_EQ(find(r, "pressure_0000.csv").content.rfind("# dim,cells,extent,h,threshold", 0), 0u);
}

TEST(Executable, ExitCodesAndNoPartialOutput) {
  const auto dir = scratch("exe");
  const auto cfg = dir.string() + ".toml";
  {
    std::ofstream os(cfg);
    os << "[grid]\ncells = 4\n";
  }
  const std::string exe = FBLAB_EXE;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(status(exe + " pme_preserve -q --config " + cfg + " --out " + dir.string()), 2);
  EXPECT_FALSE(std::filesystem::exists(dir));
  EXPECT_EQ(status(exe + " pme_counterexample -q --alpha 0.5 --out " + dir.string()), 2);
  EXPECT_FALSE(std::filesystem::exists(dir));
  EXPECT_EQ(status(exe + " conditions_check -q --G fisher:1,10 --assert --out " + dir.string()), 4);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_EQ(status(exe + " conditions_check -q --G tumor:1 --assert --out " + dir.string()), 0);
  std::filesystem::remove_all(dir);
  std::filesystem::remove(cfg);
}
