#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fblab/grid.hpp"
#include "fblab/reaction.hpp"

namespace fblab {

/// Density u >= 0 of du/dt = Laplacian(u^m) + u G(P), exponent m > 1, time t.
struct PmeState {
  ScalarField u;
  double m = 2.0;
  double t = 0.0;
};

/// P = m/(m-1) u^{m-1}, with the support threshold mapped the same way.
ScalarField pressure_of(const PmeState& state);

/// Inverse map u = ((m-1)/m P)^{1/(m-1)} for initial data given as pressure.
ScalarField density_from_pressure(const ScalarField& P, double m);

/// cfl h^2 / (2N m max u^{m-1} + h^2 max|G(P)| + 1e-300).
double stable_dt(const PmeState& state, const ReactionTerm& G, double cfl);

struct StepStats {
  double clipped_mass = 0.0;
  double max_pressure = 0.0;
};

/// One forward-Euler step in divergence form with a homogeneous Dirichlet
/// frame. Throws SupportHitBoundary once mass reaches the layer next to the
/// frame and UnstableStep on non-finite output.
PmeState step(const PmeState& state, const ReactionTerm& G, double dt, StepStats* stats = nullptr);

struct Snapshot {
  double t = 0.0;
  ScalarField P;
  ScalarField u;  // empty unless densities are stored
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<double> dt_history;
  double clipped_mass = 0.0;
  /// Largest per-step ratio clipped mass / total mass.
  double max_clip_ratio = 0.0;
  double max_pressure = 0.0;
  bool stopped_early = false;
};

struct SimulateOptions {
  double t0 = 0.0;
  bool store_density = false;
  /// Called at every snapshot (including t0); returning false ends the run.
  std::function<bool(const PmeState&)> observer;
  long max_steps = 50'000'000;
};

/// Integrates from t0 to the absolute time T, taking dt = min(stable_dt,
/// time to the next snapshot) and storing pressure snapshots every snapshot_dt.
Trajectory simulate(const ScalarField& u0, double m, const ReactionTerm& G, double T, double cfl,
                    double snapshot_dt, const SimulateOptions& opts = {});

/// Writes one field CSV per snapshot into dir plus an index file
/// `trajectory.csv` with `t,path` rows. Returns the written paths.
std::vector<std::string> write_trajectory(const std::string& dir, const std::string& stem,
                                          const Trajectory& traj);

}  // namespace fblab
