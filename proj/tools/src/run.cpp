#include "fblab/cli/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "fblab/concavity.hpp"
#include "fblab/counterexamples.hpp"
#include "fblab/error.hpp"
#include "fblab/estimates.hpp"
#include "fblab/heleshaw.hpp"
#include "fblab/pme.hpp"

namespace fblab::cli {

using nlohmann::json;

namespace {

/// Tidy CSV built in memory; reals carry 12 significant digits.
class Csv {
 public:
  explicit Csv(std::string header) { os_ << header << '\n'; os_ << std::setprecision(12); }

  template <typename... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }

  [[nodiscard]] std::string str() const { return os_.str(); }

 private:
  template <typename T>
  static const T& cell(const T& v) { return v; }
  static int cell(bool v) { return v ? 1 : 0; }
  static double cell(double v) { return v + 0.0; }  // prints -0 as 0
  static std::string_view cell(std::string_view v) { return v; }

  std::ostringstream os_;
};

/// Independent tasks run on a small pool when more than one core is
/// available; results come back in submission order either way.
template <typename T, typename F>
std::vector<T> map_tasks(std::size_t n, F&& f) {
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  std::vector<T> out;
  out.reserve(n);
  if (cores == 1 || n < 2) {
    for (std::size_t k = 0; k < n; ++k) out.push_back(f(k));
    return out;
  }
  std::vector<std::future<T>> pending;
  for (std::size_t k = 0; k < n; ++k) {
    if (pending.size() == cores) {
      out.push_back(pending.front().get());
      pending.erase(pending.begin());
    }
    pending.push_back(std::async(std::launch::async, [&f, k] { return f(k); }));
  }
  for (auto& p : pending) out.push_back(p.get());
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string field_csv(const ScalarField& f) {
  std::ostringstream os;
  write_field_csv(os, f);
  return os.str();
}

std::string snapshot_name(const std::string& stem, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.csv", stem.c_str(), k);
  return buf;
}

ConcavityOptions concavity_options(const ExperimentConfig& c, int erode) {
  ConcavityOptions o;
  o.c_tol = c.concavity.c_tol;
  o.erode = erode;
  o.seed = c.seed;
  return o;
}

/// The Hele-Shaw pressure vanishes linearly at a sharp interface, so one erosion suffices there.
int hs_erode(const ExperimentConfig& c) { return c.concavity.erode > 0 ? c.concavity.erode : 1; }

double barenblatt_density(double r2, double t, double C, double m, int N) {
  const double k = 1.0 / (m - 1.0 + 2.0 / N);
  const double kappa = k * (m - 1.0) / (2.0 * m * N);
  const double v = C - kappa * r2 * std::pow(t, -2.0 * k / N);
  return v > 0.0 ? std::pow(t, -k) * std::pow(v, 1.0 / (m - 1.0)) : 0.0;
}

ScalarField initial_pressure_field(const ExperimentConfig& c, double m) {
  const InitialData& d = c.initial;
  if (d.kind == "barenblatt") {
    const int N = c.grid.dim;
    return ScalarField::sample(c.grid, [&](double x, double y) {
      const double u = barenblatt_density(x * x + y * y, d.t0, d.height, m, N);
      return m / (m - 1.0) * std::pow(u, m - 1.0);
    });
  }
  if (d.kind == "ellipse")
    return ScalarField::sample(c.grid, [&](double x, double y) {
      return d.height * std::max(0.0, 1.0 - x * x / (d.ax * d.ax) - y * y / (d.by * d.by));
    });
  return ScalarField::sample(c.grid, [&](double x, double y) {
    return d.height * std::max(0.0, 1.0 - (x * x + y * y) / (d.radius * d.radius));
  });
}

HsDomain initial_domain(const ExperimentConfig& c) {
  if (c.initial.kind == "ellipse") return ellipse_domain(c.grid, c.initial.ax, c.initial.by);
  return ball_domain(c.grid, c.initial.radius);
}

constexpr const char* kConcavityHeader = "t,alpha,lambda1_max,argmax_i,argmax_j,midpoint_violations,verdict,tol";

void concavity_row(Csv& csv, double t, const ConcavityReport& r) {
  csv.row(t, r.alpha, r.lambda1_max, r.argmax.i, r.argmax.j, r.midpoint_violations, to_string(r.verdict),
          r.tol_used);
}

/// alpha-concavity for alpha <= 1/2 is the preserved range; larger alphas are reported only.
void expect_concave(RunResult& out, double t, const ConcavityReport& r) {
  if (r.alpha <= 0.5 && r.verdict != Verdict::Concave)
    out.violations.push_back("alpha = " + fmt(r.alpha) + " is " + std::string(to_string(r.verdict)) +
                             " at t = " + fmt(t));
}

// ---------------------------------------------------------------- PME runs

struct PmeRun {
  Trajectory traj;
  EstimateConfig cfg;
  double t0 = 0.0;
};

PmeRun simulate_pme(const ExperimentConfig& c) {
  PmeRun run;
  const ScalarField P0 = initial_pressure_field(c, c.m);
  const int erode = c.erode_cells();
  if (c.estimates) {
    run.cfg = *c.estimates;
    validate_initial(P0, c.G, run.cfg, 20.0 * c.grid.h(), erode);
  } else {
    run.cfg = fit_initial_config(P0, c.G, c.m - 1.0, c.estimate_slack, erode);
  }
  SimulateOptions opts;
  if (c.initial.kind == "barenblatt") opts.t0 = c.initial.t0;
  run.t0 = opts.t0;
  spdlog::info("simulating m = {} on {} cells to T = {}", c.m, c.grid.cells, c.T);
  run.traj = simulate(density_from_pressure(P0, c.m), c.m, c.G, c.T, c.cfl, c.snapshot_dt, opts);
  spdlog::info("{} snapshots, {} steps", run.traj.snapshots.size(), run.traj.dt_history.size());
  return run;
}

void dump_snapshots(RunResult& out, const std::string& stem, const std::vector<std::pair<double, const ScalarField*>>& fields) {
  Csv index("t,path");
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const std::string name = snapshot_name(stem, k);
    out.artifacts.push_back({name, field_csv(*fields[k].second)});
    index.row(fields[k].first, std::string_view(name));
  }
  out.artifacts.push_back({"trajectory.csv", index.str()});
}

void estimates_table(RunResult& out, const ExperimentConfig& c, const PmeRun& run) {
  const double floor = -20.0 * c.grid.h();
  const int erode = c.erode_cells();
  Csv csv("t,ab_margin,grad_margin,nondeg_margin");
  double worst = std::numeric_limits<double>::infinity();
  for (const Snapshot& s : run.traj.snapshots) {
    const EstimateReport e = evaluate_estimates(s.P, c.G, run.cfg, s.t - run.t0, erode);
    csv.row(s.t, e.ab_margin, e.grad_margin, e.nondeg_margin);
    const double w = std::min({e.ab_margin, e.grad_margin, e.nondeg_margin});
    worst = std::min(worst, w);
    if (w < floor) out.violations.push_back("estimate margin " + fmt(w) + " below -20h at t = " + fmt(s.t));
  }
  out.artifacts.push_back({"estimates.csv", csv.str()});
  out.summary["estimates"] = {{"K", run.cfg.K},           {"L", run.cfg.L},          {"c_lower", run.cfg.c_lower},
                              {"C_upper", run.cfg.C_upper}, {"worst_margin", worst}, {"floor", floor}};
}

void dump_pme(RunResult& out, const ExperimentConfig& c, const PmeRun& run) {
  out.summary["snapshots"] = run.traj.snapshots.size();
  out.summary["steps"] = run.traj.dt_history.size();
  out.summary["max_clip_ratio"] = run.traj.max_clip_ratio;
  if (!c.dump_fields) return;
  std::vector<std::pair<double, const ScalarField*>> fields;
  for (const Snapshot& s : run.traj.snapshots) fields.emplace_back(s.t, &s.P);
  dump_snapshots(out, "pressure", fields);
}

RunResult pme_preserve(const ExperimentConfig& c) {
  RunResult out;
  const PmeRun run = simulate_pme(c);
  const ConcavityOptions opts = concavity_options(c, c.erode_cells());
  Csv conc(kConcavityHeader);
  for (const Snapshot& s : run.traj.snapshots)
    for (double a : c.alphas) {
      const ConcavityReport r = assess(s.P, a, c.concavity.pair_samples, opts);
      concavity_row(conc, s.t, r);
      expect_concave(out, s.t, r);
    }
  out.artifacts.push_back({"concavity.csv", conc.str()});
  estimates_table(out, c, run);
  dump_pme(out, c, run);
  out.summary["erode"] = c.erode_cells();
  return out;
}

RunResult estimates_suite(const ExperimentConfig& c) {
  RunResult out;
  const PmeRun run = simulate_pme(c);
  estimates_table(out, c, run);
  Csv decay("t,beta");
  for (const Snapshot& s : run.traj.snapshots) {
    if (s.t <= run.t0) continue;
    decay.row(s.t, boundary_decay_exponent(s.P));
  }
  out.artifacts.push_back({"decay.csv", decay.str()});
  dump_pme(out, c, run);
  return out;
}

// ------------------------------------------------------ counterexample runs

struct CexOutcome {
  CexParams p;
  CexVerdict v;
};

RunResult pme_counterexample(const ExperimentConfig& c) {
  RunResult out;
  TrackOptions track;
  track.T = c.T;
  track.cfl = c.cfl;
  track.c_tol = c.concavity.c_tol;

  const auto outcomes = map_tasks<CexOutcome>(c.alphas.size(), [&](std::size_t k) {
    CexOutcome o;
    o.p = choose_params(c.alphas[k], c.m, c.G);
    spdlog::info("alpha = {}: {} with a/b = {}, c = {}", o.p.alpha, to_string(o.p.kase), o.p.a_or_b(), o.p.c);
    o.v = run_counterexample(o.p, c.G, track, c.cex_cells);
    return o;
  });

  Csv series("alpha,case,a_or_b,c,A_ext,t,lambda1");
  Csv detect("alpha,case,first_positive_t,detected,hit_boundary,radius");
  for (const CexOutcome& o : outcomes) {
    for (const auto& [t, l] : o.v.lambda1_series)
      series.row(o.p.alpha, to_string(o.p.kase), o.p.a_or_b(), o.p.c, o.p.A_ext, t, l);
    const bool hit = o.v.first_positive_t && *o.v.first_positive_t <= c.T;
    detect.row(o.p.alpha, to_string(o.p.kase), o.v.first_positive_t.value_or(-1.0), hit, o.v.hit_boundary,
               o.v.radius);
    if (!hit) out.violations.push_back("no loss of concavity detected for alpha = " + fmt(o.p.alpha));
  }

  if (c.cex_control) {
    // Quadratic cap: P^{1/2} stays concave, so the same tracker must stay silent.
    const ScalarField P0 = ScalarField::sample(c.grid, [](double x, double y) {
      return std::max(0.0, 1.0 - x * x - y * y);
    });
    spdlog::info("alpha = 1/2 control on {} cells", c.grid.cells);
    const CexVerdict v = track_concavity_loss(P0, 0.5, c.m, c.G, 0.25, track);
    for (const auto& [t, l] : v.lambda1_series) series.row(0.5, std::string_view("control"), 0.0, 0.0, 0.0, t, l);
    const bool hit = v.first_positive_t.has_value();
    detect.row(0.5, std::string_view("control"), v.first_positive_t.value_or(-1.0), hit, v.hit_boundary, v.radius);
    if (hit) out.violations.push_back("control run flagged a loss of 1/2-concavity at t = " + fmt(*v.first_positive_t));
  }
  out.artifacts.push_back({"counterexample.csv", series.str()});
  out.artifacts.push_back({"detection.csv", detect.str()});
  return out;
}

// ------------------------------------------------------------ Hele-Shaw runs

RunResult hs_initial_sharpness(const ExperimentConfig& c) {
  RunResult out;
  const SharpIndexRange range = c.sharp.value_or(SharpIndexRange{});
  const HsSolution ball = solve_pressure(ball_domain(c.grid, 1.0), c.G, c.solve_tol);
  const double idx = sharp_index(ball.P, range.lo, range.hi, range.iters, c.concavity.pair_samples,
                                 concavity_options(c, hs_erode(c)));
  spdlog::info("sharp index on the ball solution: {}", idx);
  Csv sharp("lo,hi,iters,sharp_index");
  sharp.row(range.lo, range.hi, range.iters, idx);
  out.artifacts.push_back({"sharp_index.csv", sharp.str()});
  out.summary["sharp_index"] = idx;
  const double resolution = (range.hi - range.lo) / std::ldexp(1.0, range.iters);
  if (range.lo <= 0.5 && idx < 0.5 - resolution)
    out.violations.push_back("ball solution is not 1/2-concave (sharp index " + fmt(idx) + ")");

  const std::size_t na = c.alphas.size();
  const auto probes = map_tasks<ProbeResult>(c.probe_k.size() * na, [&](std::size_t n) {
    const int k = c.probe_k[n / na];
    const double alpha = c.alphas[n % na];
    spdlog::info("cone probe k = {}, alpha = {}", k, alpha);
    return sharp_index_probe(c.grid, c.G, c.probe_a, k, alpha, c.probe_t, c.solve_tol);
  });
  Csv probe("alpha,k,t,lhs,rhs,violated");
  json per_probe = json::array();
  for (std::size_t n = 0; n < probes.size(); ++n) {
    const int k = c.probe_k[n / na];
    const double alpha = c.alphas[n % na];
    int violated = 0;
    for (const ProbeRow& r : probes[n].rows) {
      probe.row(alpha, k, r.t, r.lhs, r.rhs, r.violated);
      violated += r.violated;
    }
    per_probe.push_back({{"alpha", alpha}, {"k", k}, {"violations", violated},
                         {"barrier_violations", probes[n].barrier_violations}});
  }
  out.artifacts.push_back({"probe.csv", probe.str()});
  out.summary["probes"] = per_probe;

  // Nested domains give ordered pressures: P_{k'} <= P_k and Omega_{k'} inside Omega_k for k' > k.
  Csv mono("k_from,k_to,max_increase,nest_violations");
  const double slack = 100.0 * c.solve_tol;
  for (std::size_t q = 0; q + 1 < c.probe_k.size(); ++q) {
    const HsSolution& a = probes[q * na].solution;
    const HsSolution& b = probes[(q + 1) * na].solution;
    const Mask ma = domain_mask(a.domain);
    const Mask mb = domain_mask(b.domain);
    double rise = -std::numeric_limits<double>::infinity();
    std::size_t nest = 0;
    for (std::size_t n = 0; n < ma.size(); ++n) {
      rise = std::max(rise, b.P[n] - a.P[n]);
      if (mb[n] && !ma[n]) ++nest;
    }
    mono.row(c.probe_k[q], c.probe_k[q + 1], rise, static_cast<long>(nest));
    if (c.probe_k[q + 1] > c.probe_k[q] && (rise > slack || nest > 0))
      out.violations.push_back("pressure is not monotone from k = " + std::to_string(c.probe_k[q]) + " to " +
                               std::to_string(c.probe_k[q + 1]));
  }
  out.artifacts.push_back({"monotonicity.csv", mono.str()});
  if (c.dump_fields) out.artifacts.push_back({"ball_pressure.csv", field_csv(ball.P)});
  return out;
}

RunResult hs_evolve(const ExperimentConfig& c) {
  RunResult out;
  const ConcavityOptions opts = concavity_options(c, hs_erode(c));
  const int pairs = 20 * c.concavity.pair_samples;
  Csv conc(kConcavityHeader);
  Csv evo("t,cells_inside,convexity_defect,picard_iters");
  std::vector<ScalarField> fields;
  std::vector<double> times;

  EvolveOptions eo;
  eo.solve_tol = c.solve_tol;
  eo.observer = [&](const HsSolution& s) {
    const double t = s.domain.t;
    const double defect = convexity_defect(s.domain, pairs, c.seed);
    evo.row(t, static_cast<long>(count(domain_mask(s.domain))), defect, s.picard_iters);
    if (defect > 1e-3) out.violations.push_back("convexity defect " + fmt(defect) + " at t = " + fmt(t));
    for (double a : c.alphas) {
      const ConcavityReport r = assess(s.P, a, c.concavity.pair_samples, opts);
      concavity_row(conc, t, r);
      expect_concave(out, t, r);
    }
    spdlog::info("t = {:.3f}: defect {}", t, defect);
    if (c.dump_fields) {
      fields.push_back(s.P);
      times.push_back(t);
    }
    return true;
  };
  evolve(initial_domain(c), c.G, c.T, c.snapshot_dt, eo);

  out.artifacts.push_back({"concavity.csv", conc.str()});
  out.artifacts.push_back({"evolution.csv", evo.str()});
  if (c.dump_fields) {
    std::vector<std::pair<double, const ScalarField*>> refs;
    for (std::size_t k = 0; k < fields.size(); ++k) refs.emplace_back(times[k], &fields[k]);
    dump_snapshots(out, "pressure", refs);
  }
  return out;
}

RunResult incompressible_limit(const ExperimentConfig& c) {
  RunResult out;
  const double R0 = c.initial.radius;
  const double G0 = c.G.G0();
  const int N = c.grid.dim;
  // The Hele-Shaw pressure of the ball, G0 (R0^2 - |x|^2) / 2N, seeds every PME run.
  const ScalarField P0 = ScalarField::sample(c.grid, [&](double x, double y) {
    return std::max(0.0, G0 * (R0 * R0 - x * x - y * y) / (2.0 * N));
  });
  EvolveOptions eo;
  eo.solve_tol = c.solve_tol;
  spdlog::info("Hele-Shaw reference to T = {}", c.T);
  const std::vector<HsSolution> hs = evolve(ball_domain(c.grid, R0), c.G, c.T, c.T, eo);
  const ScalarField& Phs = hs.back().P;

  const auto runs = map_tasks<Trajectory>(c.m_list.size(), [&](std::size_t k) {
    spdlog::info("PME with m = {}", c.m_list[k]);
    return simulate(density_from_pressure(P0, c.m_list[k]), c.m_list[k], c.G, c.T, c.cfl, c.T);
  });
  Csv csv("m,t,gap,max_P");
  std::vector<double> gaps;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const Snapshot& s = runs[k].snapshots.back();
    double gap = 0.0;
    for (std::size_t n = 0; n < Phs.values().size(); ++n) gap = std::max(gap, std::abs(s.P[n] - Phs[n]));
    csv.row(c.m_list[k], s.t, gap, s.P.max());
    gaps.push_back(gap);
  }
  out.artifacts.push_back({"limit.csv", csv.str()});
  out.summary["gaps"] = gaps;
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k)
    if (c.m_list[k + 1] > c.m_list[k] && !(gaps[k + 1] < gaps[k]))
      out.violations.push_back("gap does not decrease from m = " + fmt(c.m_list[k]) + " to m = " +
                               fmt(c.m_list[k + 1]));
  if (c.dump_fields) out.artifacts.push_back({"hele_shaw_pressure.csv", field_csv(Phs)});
  return out;
}

RunResult conditions_check(const ExperimentConfig& c) {
  RunResult out;
  const ConditionReport rep = c.estimates
                                  ? check_conditions(c.G, c.condition_samples, c.estimates->K, c.estimates->L)
                                  : check_conditions(c.G, c.condition_samples);
  const ConditionResult app = check_appendix_g(c.G, c.appendix_p, c.condition_samples);
  Csv csv("condition,satisfied,worst_margin,worst_P");
  for (const ConditionResult& r : rep.conditions) {
    csv.row(std::string_view(r.name), r.satisfied, r.worst_margin, r.worst_P);
    if (!r.satisfied) out.violations.push_back("condition " + r.name + " fails for " + c.G.describe());
  }
  csv.row(std::string_view(app.name), app.satisfied, app.worst_margin, app.worst_P);
  if (!app.satisfied) out.violations.push_back("appendix_g fails for " + c.G.describe());
  out.artifacts.push_back({"conditions.csv", csv.str()});
  out.summary["G"] = c.G.describe();
  out.summary["fitted_A"] = rep.fitted_A;
  out.summary["fitted_gamma"] = rep.fitted_gamma;
  out.summary["abc1_sup"] = rep.abc1_sup;
  out.summary["skipped"] = rep.skipped;
  return out;
}

RunResult dispatch(const ExperimentConfig& c) {
  switch (c.scenario) {
    case Scenario::PmePreserve: return pme_preserve(c);
    case Scenario::PmeCounterexample: return pme_counterexample(c);
    case Scenario::HsInitialSharpness: return hs_initial_sharpness(c);
    case Scenario::HsEvolve: return hs_evolve(c);
    case Scenario::EstimatesSuite: return estimates_suite(c);
    case Scenario::IncompressibleLimit: return incompressible_limit(c);
    case Scenario::ConditionsCheck: return conditions_check(c);
  }
  fail(ErrorCode::ConfigError, "unhandled scenario");
}

}  // namespace

RunResult run(const ExperimentConfig& config) {
  try {
    RunResult out = dispatch(config);
    out.summary["scenario"] = std::string(to_string(config.scenario));
    out.summary["violations"] = out.violations;
    out.artifacts.push_back({"summary.json", out.summary.dump(2) + "\n"});
    return out;
  } catch (const Error& e) {
    throw Error(e.code(), std::string(to_string(config.scenario)) + ": " + e.what());
  }
}

}  // namespace fblab::cli
