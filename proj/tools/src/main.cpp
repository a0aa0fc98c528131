#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "fblab/cli/config.hpp"
#include "fblab/cli/run.hpp"
#include "fblab/cli/toml.hpp"
#include "fblab/error.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kNumerical = 3;
constexpr int kViolation = 4;

int exit_code(fblab::ErrorCode code) {
  using fblab::ErrorCode;
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::IoError:
    case ErrorCode::PreconditionViolated:
    case ErrorCode::ParamsInconsistent:
    case ErrorCode::DomainError:
    case ErrorCode::PointOutsideDomain:
      return kConfig;
    default:
      return kNumerical;
  }
}

nlohmann::json read_document(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream is(path);
    if (!is) fblab::fail(fblab::ErrorCode::IoError, "cannot open config " + path);
    try {
      return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      fblab::fail(fblab::ErrorCode::ConfigError, std::string("config: ") + e.what());
    }
  }
  return fblab::cli::parse_toml_file(path);
}

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      fblab::fail(fblab::ErrorCode::ConfigError, "cannot read number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-concavity experiments for porous-medium and Hele-Shaw free boundary problems"};
  std::string scenario_name, config_path, alpha_list, sharp, reaction;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> alpha, m;
  bool assert_mode = false, quiet = false;

  app.add_option("scenario", scenario_name,
                 "pme_preserve | pme_counterexample | hs_initial_sharpness | hs_evolve | estimates_suite | "
                 "incompressible_limit | conditions_check")
      ->required();
  app.add_option("--config", config_path, "TOML (or .json) experiment file; scenario defaults when omitted");
  app.add_option("--seed", seed, "Seed for every sampled check");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--assert", assert_mode, "Exit with status 4 when a scenario check fails");
  app.add_option("--alpha-list", alpha_list, "Comma-separated alpha values");
  app.add_option("--alpha", alpha, "Single alpha value");
  app.add_option("--sharp-index", sharp, "Bisection range lo:hi:iters");
  app.add_option("--m", m, "PME exponent");
  app.add_option("--G", reaction, "Growth law: tumor:P_M, fisher:u_M,m or constant:g0");
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  const auto started = std::chrono::steady_clock::now();
  try {
    const fblab::cli::Scenario scenario = fblab::cli::scenario_from_string(scenario_name);
    nlohmann::json doc = read_document(config_path);
    if (seed) doc["seed"] = *seed;
    if (out_dir) doc["output_dir"] = *out_dir;
    if (m) doc["m"] = *m;
    if (alpha) doc["alpha"] = nlohmann::json::array({*alpha});
    if (!alpha_list.empty()) doc["alpha"] = split_numbers(alpha_list);
    if (!reaction.empty()) doc["G"] = reaction;
    if (!sharp.empty()) {
      if (doc.contains("concavity") && !doc["concavity"].is_object())
        fblab::fail(fblab::ErrorCode::ConfigError, "[concavity] must be a table");
      doc["concavity"]["sharp_index"] = sharp;
    }

    const fblab::cli::ExperimentConfig config = fblab::cli::load_config(scenario, doc);
    spdlog::info("{} -> {}", fblab::cli::to_string(scenario), config.output_dir);
    const fblab::cli::RunResult result = fblab::cli::run(config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string manifest = fblab::cli::write_outputs(config.output_dir, result, config.echo, wall);
    spdlog::info("wrote {} files, manifest {}", result.artifacts.size(), manifest);

    for (const std::string& v : result.violations) spdlog::warn("check failed: {}", v);
    if (assert_mode && !result.violations.empty()) return kViolation;
    return kOk;
  } catch (const fblab::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kNumerical;
  }
}
