#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fblab/estimates.hpp"
#include "fblab/grid.hpp"
#include "fblab/reaction.hpp"

namespace fblab::cli {

enum class Scenario {
  PmePreserve,
  PmeCounterexample,
  HsInitialSharpness,
  HsEvolve,
  EstimatesSuite,
  IncompressibleLimit,
  ConditionsCheck
};

std::string_view to_string(Scenario s) noexcept;
/// Accepts the canonical names plus the short aliases `counterexample` and `conditions`.
Scenario scenario_from_string(std::string_view name);

struct InitialData {
  /// cap: height (1 - |x|^2/R^2)_+ ; ball and ellipse: Hele-Shaw domains;
  /// barenblatt: the m-PME source profile at time t0 (G must vanish).
  std::string kind = "cap";
  double radius = 1.0;
  double height = 1.0;
  double ax = 0.6;
  double by = 0.4;
  double t0 = 1.0;
};

struct ConcavitySettings {
  double c_tol = 10.0;
  /// 0 picks ceil(0.06 / h): a fixed physical band that keeps the smeared PME front out.
  int erode = 0;
  int pair_samples = 1000;
};

struct SharpIndexRange {
  double lo = 0.0;
  double hi = 1.0;
  int iters = 12;
};

/// "lo:hi:iters", e.g. "0:1:12".
SharpIndexRange parse_sharp_index(std::string_view text);

/// "tumor:1", "fisher:u_M,m", "constant:g0".
ReactionTerm parse_reaction(std::string_view text);

struct ExperimentConfig {
  Scenario scenario = Scenario::ConditionsCheck;
  /// Everything read from the file plus command-line overrides, echoed into the manifest.
  nlohmann::json echo;

  Grid grid{};
  ReactionTerm G = ReactionTerm::tumor(1.0);
  double m = 2.0;
  std::vector<double> m_list;
  std::vector<double> alphas;
  double T = 0.5;
  double cfl = 0.9;
  double snapshot_dt = 0.05;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool dump_fields = false;

  InitialData initial;
  ConcavitySettings concavity;
  std::optional<EstimateConfig> estimates;
  double estimate_slack = 0.05;
  std::optional<SharpIndexRange> sharp;

  double probe_a = 1.0;
  std::vector<int> probe_k{4, 16, 64};
  std::vector<double> probe_t;
  double solve_tol = 1e-10;

  int cex_cells = 512;
  bool cex_control = true;

  int condition_samples = 256;
  double appendix_p = 0.5;

  [[nodiscard]] int erode_cells() const;
};

/// Scenario defaults reproduce the reference experiments; every key in the
/// document is checked and every module precondition validated here, so a
/// bad config fails before any compute or output.
ExperimentConfig load_config(Scenario scenario, const nlohmann::json& doc);

}  // namespace fblab::cli
