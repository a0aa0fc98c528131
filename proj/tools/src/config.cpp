#include "fblab/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "fblab/error.hpp"

namespace fblab::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::ConfigError, msg); }

void only_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) bad("unknown key '" + k + "' in " + where);
}

double num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

long long integer(const json& obj, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(std::string("'") + key + "' must be an integer");
  return v.get<long long>();
}

std::string str(const json& obj, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) bad(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

bool boolean(const json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) bad(std::string("'") + key + "' must be true or false");
  return v.get<bool>();
}

std::vector<double> num_list(const json& obj, const char* key, std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) bad(std::string("'") + key + "' must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) bad(std::string("'") + key + "' must hold numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

json table(const json& doc, const char* key) {
  if (!doc.contains(key)) return json::object();
  if (!doc.at(key).is_object()) bad(std::string("[") + key + "] must be a table");
  return doc.at(key);
}

double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad("cannot read " + what + " from '" + std::string(s) + "'");
  return v;
}

ReactionTerm reaction_from_table(const json& t) {
  const std::string kind = str(t, "kind", "tumor");
  try {
    if (kind == "tumor") {
      only_keys(t, "[G]", {"kind", "P_M", "P_H"});
      return ReactionTerm::tumor(num(t, "P_M", 1.0), num(t, "P_H", 0.0));
    }
    if (kind == "fisher_kpp" || kind == "fisher") {
      only_keys(t, "[G]", {"kind", "u_M", "m", "P_H"});
      return ReactionTerm::fisher_kpp(num(t, "u_M", 1.0), num(t, "m", 2.0), num(t, "P_H", 0.0));
    }
    if (kind == "constant") {
      only_keys(t, "[G]", {"kind", "g0", "P_H"});
      return ReactionTerm::constant(num(t, "g0", 1.0), num(t, "P_H", 1.0));
    }
    if (kind == "custom") {
      only_keys(t, "[G]", {"kind", "P", "G", "dG", "d2G"});
      return ReactionTerm::custom(num_list(t, "P", {}), num_list(t, "G", {}), num_list(t, "dG", {}),
                                  num_list(t, "d2G", {}));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    bad(std::string("[G]: ") + e.what());
  }
  bad("unknown reaction kind '" + kind + "'");
}

std::vector<double> default_alphas(Scenario s) {
  switch (s) {
    case Scenario::PmeCounterexample: return {0.0, 0.25, 0.75, 1.0};
    case Scenario::HsInitialSharpness: return {0.75};
    case Scenario::HsEvolve: return {0.0, 0.25, 0.5};
    default: return {0.5};
  }
}

struct Defaults {
  double extent, T, snapshot_dt;
  int cells;
  const char* G;
};

Defaults defaults_for(Scenario s) {
  switch (s) {
    case Scenario::PmePreserve:
    case Scenario::EstimatesSuite: return {2.6, 0.5, 0.05, 256, "tumor:1"};
    case Scenario::PmeCounterexample: return {1.25, 0.05, 0.0, 256, "tumor:1"};
    case Scenario::HsInitialSharpness: return {1.1, 0.0, 0.0, 256, "constant:1"};
    case Scenario::HsEvolve: return {1.2, 0.3, 0.05, 256, "tumor:1"};
    case Scenario::IncompressibleLimit: return {1.0, 0.2, 0.2, 128, "constant:1"};
    case Scenario::ConditionsCheck: return {1.0, 0.0, 0.0, 64, "tumor:1"};
  }
  return {1.0, 0.5, 0.05, 128, "tumor:1"};
}

}  // namespace

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::PmePreserve: return "pme_preserve";
    case Scenario::PmeCounterexample: return "pme_counterexample";
    case Scenario::HsInitialSharpness: return "hs_initial_sharpness";
    case Scenario::HsEvolve: return "hs_evolve";
    case Scenario::EstimatesSuite: return "estimates_suite";
    case Scenario::IncompressibleLimit: return "incompressible_limit";
    case Scenario::ConditionsCheck: return "conditions_check";
  }
  return "conditions_check";
}

Scenario scenario_from_string(std::string_view name) {
  for (Scenario s : {Scenario::PmePreserve, Scenario::PmeCounterexample, Scenario::HsInitialSharpness,
                     Scenario::HsEvolve, Scenario::EstimatesSuite, Scenario::IncompressibleLimit,
                     Scenario::ConditionsCheck})
    if (name == to_string(s)) return s;
  if (name == "counterexample") return Scenario::PmeCounterexample;
  if (name == "conditions") return Scenario::ConditionsCheck;
  bad("unknown scenario '" + std::string(name) + "'");
}

SharpIndexRange parse_sharp_index(std::string_view text) {
  const auto a = text.find(':');
  const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
  if (b == std::string_view::npos) bad("sharp index range must read lo:hi:iters");
  SharpIndexRange r;
  r.lo = parse_double(text.substr(0, a), "sharp index lo");
  r.hi = parse_double(text.substr(a + 1, b - a - 1), "sharp index hi");
  const double it = parse_double(text.substr(b + 1), "sharp index iters");
  r.iters = static_cast<int>(it);
  if (r.iters != it || r.iters < 1 || r.iters > 60) bad("sharp index iters must be an integer in [1, 60]");
  if (!(r.lo >= 0.0 && r.lo < r.hi && r.hi <= 1.0)) bad("sharp index range needs 0 <= lo < hi <= 1");
  return r;
}

ReactionTerm parse_reaction(std::string_view text) {
  const auto colon = text.find(':');
  const std::string kind(text.substr(0, colon));
  std::vector<double> args;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      args.push_back(parse_double(rest.substr(0, comma), "reaction parameter"));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };
  try {
    if (kind == "tumor" && args.size() <= 2) return ReactionTerm::tumor(arg(0, 1.0), arg(1, 0.0));
    if ((kind == "fisher" || kind == "fisher_kpp") && args.size() <= 3)
      return ReactionTerm::fisher_kpp(arg(0, 1.0), arg(1, 2.0), arg(2, 0.0));
    if (kind == "constant" && args.size() <= 2) return ReactionTerm::constant(arg(0, 1.0), arg(1, 1.0));
  } catch (const Error& e) {
    bad("reaction '" + std::string(text) + "': " + e.what());
  }
  bad("cannot read reaction '" + std::string(text) + "' (use tumor:P_M, fisher:u_M,m or constant:g0)");
}

int ExperimentConfig::erode_cells() const {
  if (concavity.erode > 0) return concavity.erode;
  return std::max(1, static_cast<int>(std::ceil(0.06 / grid.h() - 1e-9)));
}

ExperimentConfig load_config(Scenario scenario, const json& doc) {
  if (!doc.is_object()) bad("config must be a table");
  only_keys(doc, "the config", {"scenario", "seed", "output_dir", "T", "cfl", "snapshot_dt", "m", "m_list", "alpha",
                                "dump_fields", "grid", "G", "initial", "concavity", "estimates", "probe",
                                "counterexample", "conditions"});
  if (doc.contains("scenario") && scenario_from_string(str(doc, "scenario", "")) != scenario)
    bad("config scenario '" + str(doc, "scenario", "") + "' does not match the requested '" +
        std::string(to_string(scenario)) + "'");

  ExperimentConfig c;
  c.scenario = scenario;
  c.echo = doc;
  c.echo["scenario"] = std::string(to_string(scenario));
  const Defaults d = defaults_for(scenario);

  const long long seed = integer(doc, "seed", 1);
  if (seed < 0) bad("seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.output_dir = str(doc, "output_dir", "out/" + std::string(to_string(scenario)));
  c.T = num(doc, "T", d.T);
  c.cfl = num(doc, "cfl", 0.9);
  c.snapshot_dt = num(doc, "snapshot_dt", d.snapshot_dt);
  c.m = num(doc, "m", 2.0);
  c.m_list = num_list(doc, "m_list", scenario == Scenario::IncompressibleLimit ? std::vector<double>{10, 40, 160}
                                                                              : std::vector<double>{});
  c.alphas = num_list(doc, "alpha", default_alphas(scenario));
  c.dump_fields = boolean(doc, "dump_fields", false);

  const json grid = table(doc, "grid");
  only_keys(grid, "[grid]", {"dim", "extent", "cells"});
  try {
    c.grid = Grid::make(static_cast<int>(integer(grid, "dim", 2)), num(grid, "extent", d.extent),
                        static_cast<int>(integer(grid, "cells", d.cells)));
  } catch (const Error& e) {
    bad(std::string("[grid]: ") + e.what());
  }

  if (doc.contains("G") && doc.at("G").is_string())
    c.G = parse_reaction(doc.at("G").get<std::string>());
  else
    c.G = doc.contains("G") ? reaction_from_table(table(doc, "G")) : parse_reaction(d.G);

  const json init = table(doc, "initial");
  only_keys(init, "[initial]", {"kind", "radius", "height", "ax", "by", "t0"});
  c.initial.kind = str(init, "kind", scenario == Scenario::HsEvolve ? "ellipse" : "cap");
  c.initial.radius = num(init, "radius", scenario == Scenario::IncompressibleLimit ? 0.5 : 1.0);
  c.initial.height = num(init, "height", 1.0);
  c.initial.ax = num(init, "ax", 0.6);
  c.initial.by = num(init, "by", 0.4);
  c.initial.t0 = num(init, "t0", 1.0);

  const json conc = table(doc, "concavity");
  only_keys(conc, "[concavity]", {"c_tol", "erode", "pair_samples", "sharp_index"});
  c.concavity.c_tol = num(conc, "c_tol", 10.0);
  c.concavity.erode = static_cast<int>(integer(conc, "erode", 0));
  c.concavity.pair_samples = static_cast<int>(integer(conc, "pair_samples", 1000));
  if (conc.contains("sharp_index")) c.sharp = parse_sharp_index(str(conc, "sharp_index", ""));
  if (!c.sharp && scenario == Scenario::HsInitialSharpness) c.sharp = SharpIndexRange{};

  const json est = table(doc, "estimates");
  only_keys(est, "[estimates]", {"K", "L", "c_lower", "C_upper", "slack"});
  c.estimate_slack = num(est, "slack", 0.05);
  if (est.contains("K") || est.contains("L") || est.contains("c_lower") || est.contains("C_upper")) {
    for (const char* k : {"K", "L", "c_lower", "C_upper"})
      if (!est.contains(k)) bad(std::string("[estimates] sets some constants but not '") + k + "'");
    EstimateConfig e;
    e.K = num(est, "K", 0.0);
    e.L = num(est, "L", 0.0);
    e.c_lower = num(est, "c_lower", 0.0);
    e.C_upper = num(est, "C_upper", 0.0);
    e.r = c.m - 1.0;
    try {
      e.validate();
    } catch (const Error& err) {
      bad(std::string("[estimates]: ") + err.what());
    }
    c.estimates = e;
  }

  const json probe = table(doc, "probe");
  only_keys(probe, "[probe]", {"a", "k", "t", "solve_tol"});
  c.probe_a = num(probe, "a", 1.0);
  c.solve_tol = num(probe, "solve_tol", scenario == Scenario::HsEvolve ? 1e-9 : 1e-10);
  {
    std::vector<double> ks = num_list(probe, "k", {4, 16, 64});
    c.probe_k.clear();
    for (double k : ks) {
      if (k != std::floor(k) || k < 1) bad("[probe] k values must be positive integers");
      c.probe_k.push_back(static_cast<int>(k));
    }
    std::vector<double> ts;
    for (int i = 1; i <= 10; ++i) ts.push_back(0.01 * i);
    ts.push_back(0.5);
    ts.push_back(1.0);
    c.probe_t = num_list(probe, "t", ts);
  }

  const json cex = table(doc, "counterexample");
  only_keys(cex, "[counterexample]", {"cells", "control"});
  c.cex_cells = static_cast<int>(integer(cex, "cells", 512));
  c.cex_control = boolean(cex, "control", true);

  const json cond = table(doc, "conditions");
  only_keys(cond, "[conditions]", {"samples", "appendix_p"});
  c.condition_samples = static_cast<int>(integer(cond, "samples", 256));
  c.appendix_p = num(cond, "appendix_p", 0.5);

  // Cross-field preconditions, checked before anything runs.
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) bad(msg);
  };
  const bool pme = scenario == Scenario::PmePreserve || scenario == Scenario::EstimatesSuite ||
                   scenario == Scenario::PmeCounterexample || scenario == Scenario::IncompressibleLimit;
  const bool hs = scenario == Scenario::HsInitialSharpness || scenario == Scenario::HsEvolve ||
                  scenario == Scenario::IncompressibleLimit;
  need(c.m > 1.0, "m must exceed 1");
  need(c.cfl > 0.0 && c.cfl <= 1.0, "cfl must lie in (0, 1]");
  for (double a : c.alphas) need(a >= 0.0 && a <= 1.0, "alpha values must lie in [0, 1]");
  need(!c.alphas.empty(), "alpha list is empty");
  need(c.concavity.c_tol > 0.0, "[concavity] c_tol must be positive");
  need(c.concavity.erode >= 0, "[concavity] erode must be non-negative");
  need(c.concavity.pair_samples >= 100, "[concavity] pair_samples must be at least 100");
  if (pme || scenario == Scenario::HsEvolve) {
    need(c.T > 0.0, "T must be positive");
  }
  if (scenario == Scenario::PmePreserve || scenario == Scenario::EstimatesSuite || scenario == Scenario::HsEvolve)
    need(c.snapshot_dt > 0.0, "snapshot_dt must be positive");
  if (hs) {
    need(c.grid.dim == 2, "Hele-Shaw scenarios need a two-dimensional grid");
    need(c.G.G0() > 0.0, "Hele-Shaw scenarios need G(0) > 0");
    need(c.solve_tol > 0.0, "[probe] solve_tol must be positive");
  }
  if (scenario == Scenario::PmeCounterexample) {
    for (double a : c.alphas)
      need(a != 0.5, "alpha = 1/2 has no counterexample: 1/2-concavity is preserved (drop it from the alpha list)");
    need(c.cex_cells >= 64, "[counterexample] cells must be at least 64");
  }
  if (scenario == Scenario::HsInitialSharpness) {
    const double amin = std::sqrt((2.0 + c.G.G0()) / (2.0 * c.grid.dim));
    std::ostringstream os;
    os << "[probe] a must be at least sqrt((2 + G(0)) / 2N) = " << amin;
    need(c.probe_a >= amin, os.str());
    for (double a : c.alphas) need(a > 0.0, "probe alpha values must lie in (0, 1]");
    for (double t : c.probe_t) need(t > 0.0 && t <= 1.0, "[probe] t values must lie in (0, 1]");
    need(c.grid.extent > 1.0, "the cone domain needs a grid extent above 1");
  }
  if (scenario == Scenario::IncompressibleLimit) {
    need(c.m_list.size() >= 2, "m_list needs at least two exponents");
    for (double m : c.m_list) need(m > 1.0, "m_list values must exceed 1");
    need(c.initial.kind == "cap", "incompressible_limit starts from the matched cap");
    need(c.G.kind() == ReactionKind::Constant, "incompressible_limit needs a constant G");
  }
  if (scenario == Scenario::PmePreserve || scenario == Scenario::EstimatesSuite ||
      scenario == Scenario::IncompressibleLimit || scenario == Scenario::HsEvolve) {
    const std::string& k = c.initial.kind;
    need(k == "cap" || k == "ball" || k == "ellipse" || k == "barenblatt",
         "[initial] kind must be cap, ball, ellipse or barenblatt");
    need(c.initial.radius > 0.0 && c.initial.height > 0.0 && c.initial.ax > 0.0 && c.initial.by > 0.0,
         "[initial] sizes must be positive");
    const double reach = k == "ellipse" ? std::max(c.initial.ax, c.initial.by) : c.initial.radius;
    need(k == "barenblatt" || reach < c.grid.extent, "[initial] data must fit inside the grid");
    if (k == "barenblatt") {
      need(c.G.kind() == ReactionKind::Constant && c.G.G0() == 0.0, "barenblatt data needs G = constant:0");
      need(c.initial.t0 > 0.0 && c.T > c.initial.t0, "[initial] t0 must be positive and below T");
    }
    if (scenario == Scenario::HsEvolve) need(k == "ball" || k == "ellipse", "hs_evolve starts from a ball or ellipse");
  }
  if (scenario == Scenario::ConditionsCheck) {
    need(c.condition_samples >= 64, "[conditions] samples must be at least 64");
    need(c.appendix_p >= 0.0 && c.appendix_p <= 1.0, "[conditions] appendix_p must lie in [0, 1]");
  }
  need(!c.output_dir.empty(), "output_dir is empty");
  return c;
}

}  // namespace fblab::cli
