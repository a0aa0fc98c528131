#include "fblab/pme.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fblab/error.hpp"

namespace fblab {

namespace {

inline double upow(double u, double e) {
  if (e == 1.0) return u;
  if (e == 2.0) return u * u;
  return u > 0.0 ? std::pow(u, e) : 0.0;
}

inline double pressure_value(double u, double m) { return m / (m - 1.0) * upow(u, m - 1.0); }

void require_m(double m) {
  if (!(m > 1.0) || !std::isfinite(m)) fail(ErrorCode::PreconditionViolated, "porous medium exponent needs m > 1");
}

bool touches_frame(const Grid& g, const std::vector<double>& u) {
  auto hot = [&](int i, int j) { return u[g.index(i, j)] > 0.0; };
  const int n = g.nx();
  if (g.dim == 1) return hot(1, 0) || hot(n - 2, 0);
  for (int k = 1; k < n - 1; ++k)
    if (hot(k, 1) || hot(k, n - 2) || hot(1, k) || hot(n - 2, k)) return true;
  return false;
}

}  // namespace

ScalarField pressure_of(const PmeState& state) {
  require_m(state.m);
  const auto& u = state.u;
  ScalarField P(u.grid(), 0.0, pressure_value(u.support_threshold(), state.m));
  for (std::size_t k = 0; k < P.values().size(); ++k) P[k] = pressure_value(std::max(u[k], 0.0), state.m);
  return P;
}

ScalarField density_from_pressure(const ScalarField& P, double m) {
  require_m(m);
  const double c = (m - 1.0) / m, e = 1.0 / (m - 1.0);
  ScalarField u(P.grid(), 0.0, 0.0);
  for (std::size_t k = 0; k < u.values().size(); ++k) u[k] = upow(std::max(c * P[k], 0.0), e);
  u.set_support_threshold(upow(c * P.support_threshold(), e));
  return u;
}

double stable_dt(const PmeState& state, const ReactionTerm& G, double cfl) {
  if (!(cfl > 0.0 && cfl <= 1.0)) fail(ErrorCode::PreconditionViolated, "cfl must lie in (0, 1]");
  require_m(state.m);
  const Grid& g = state.u.grid();
  const double h = g.h();
  double umax = 0.0, gmax = std::abs(G.eval_unbounded(0.0, 0));
  for (double v : state.u.values()) {
    if (v <= 0.0) continue;
    umax = std::max(umax, upow(v, state.m - 1.0));
    gmax = std::max(gmax, std::abs(G.eval_unbounded(pressure_value(v, state.m), 0)));
  }
  return cfl * h * h / (2.0 * g.dim * state.m * umax + h * h * gmax + 1e-300);
}

PmeState step(const PmeState& state, const ReactionTerm& G, double dt, StepStats* stats) {
  require_m(state.m);
  if (!(dt > 0.0)) fail(ErrorCode::PreconditionViolated, "time step must be positive");
  const Grid& g = state.u.grid();
  const double m = state.m;
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const auto& u = state.u.values();
  const std::size_t n = u.size();

  std::vector<double> um(n);
  for (std::size_t k = 0; k < n; ++k) um[k] = upow(std::max(u[k], 0.0), m);

  PmeState out{ScalarField(g, 0.0, state.u.support_threshold()), m, state.t + dt};
  auto& v = out.u.values();
  double clipped = 0.0, pmax = 0.0;
  const int nx = g.nx(), ny = g.ny();
  const int jlo = g.dim == 2 ? 1 : 0, jhi = g.dim == 2 ? ny - 2 : 0;
  for (int j = jlo; j <= jhi; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t c = g.index(i, j);
      double lap = um[c + 1] + um[c - 1] - 2.0 * um[c];
      if (g.dim == 2) lap += um[c + static_cast<std::size_t>(nx)] + um[c - static_cast<std::size_t>(nx)] - 2.0 * um[c];
      double react = 0.0;
      if (u[c] > 0.0) {
        const double P = pressure_value(u[c], m);
        pmax = std::max(pmax, P);
        react = u[c] * G.eval_unbounded(P, 0);
      }
      double nv = u[c] + dt * (lap * inv_h2 + react);
      if (nv < 0.0) {
        clipped -= nv;
        nv = 0.0;
      }
      v[c] = nv;
    }
  }
  for (double x : v)
    if (!std::isfinite(x)) fail(ErrorCode::UnstableStep, "non-finite density after step");
  if (touches_frame(g, v)) fail(ErrorCode::SupportHitBoundary, "support reached the grid frame");
  if (stats) {
    stats->clipped_mass = clipped * std::pow(g.h(), g.dim);
    stats->max_pressure = pmax;
  }
  return out;
}

Trajectory simulate(const ScalarField& u0, double m, const ReactionTerm& G, double T, double cfl,
                    double snapshot_dt, const SimulateOptions& opts) {
  require_m(m);
  if (!(T > opts.t0)) fail(ErrorCode::PreconditionViolated, "end time must exceed the start time");
  if (!(snapshot_dt > 0.0)) fail(ErrorCode::PreconditionViolated, "snapshot interval must be positive");
  if (u0.min() < 0.0) fail(ErrorCode::PreconditionViolated, "initial density must be non-negative");
  if (!u0.all_finite()) fail(ErrorCode::PreconditionViolated, "initial density must be finite");
  if (touches_frame(u0.grid(), u0.values()))
    fail(ErrorCode::SupportHitBoundary, "initial support reaches the grid frame");

  Trajectory traj;
  PmeState st{u0, m, opts.t0};
  for (int i = 0; i < st.u.grid().nx(); ++i)
    for (int j = 0; j < st.u.grid().ny(); ++j)
      if (st.u.grid().on_frame(i, j)) st.u(i, j) = 0.0;

  auto record = [&]() -> bool {
    Snapshot s{st.t, pressure_of(st), {}};
    if (opts.store_density) s.u = st.u;
    traj.max_pressure = std::max(traj.max_pressure, s.P.max());
    traj.snapshots.push_back(std::move(s));
    if (opts.observer && !opts.observer(st)) {
      traj.stopped_early = true;
      return false;
    }
    return true;
  };
  if (!record()) return traj;

  const double eps = 1e-12 * std::max(1.0, std::abs(T));
  long steps = 0;
  int snap_index = 1;
  double next_snap = std::min(opts.t0 + snapshot_dt, T);
  while (st.t < T - eps) {
    if (++steps > opts.max_steps) fail(ErrorCode::UnstableStep, "step budget exhausted");
    double dt = stable_dt(st, G, cfl);
    bool at_snap = false;
    if (st.t + dt >= next_snap - eps) {
      dt = next_snap - st.t;
      at_snap = true;
    }
    StepStats stats;
    st = step(st, G, dt, &stats);
    if (at_snap) st.t = next_snap;
    traj.dt_history.push_back(dt);
    traj.clipped_mass += stats.clipped_mass;
    const double mass = integral(st.u);
    if (mass > 0.0) traj.max_clip_ratio = std::max(traj.max_clip_ratio, stats.clipped_mass / mass);
    traj.max_pressure = std::max(traj.max_pressure, stats.max_pressure);
    if (at_snap) {
      if (!record()) return traj;
      ++snap_index;
      next_snap = std::min(opts.t0 + snap_index * snapshot_dt, T);
    }
  }
  return traj;
}

std::vector<std::string> write_trajectory(const std::string& dir, const std::string& stem, const Trajectory& traj) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir);
  std::vector<std::string> paths;
  const std::string index_path = (fs::path(dir) / (stem + "_trajectory.csv")).string();
  std::ofstream index(index_path);
  if (!index) fail(ErrorCode::IoError, "cannot open " + index_path);
  index << "t,path\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    std::ostringstream name;
    name << stem << "_P_" << std::setw(4) << std::setfill('0') << k << ".csv";
    const std::string p = (fs::path(dir) / name.str()).string();
    write_field_csv(p, traj.snapshots[k].P);
    index << traj.snapshots[k].t << ',' << name.str() << '\n';
    paths.push_back(p);
  }
  index.close();
  paths.push_back(index_path);
  return paths;
}

}  // namespace fblab
