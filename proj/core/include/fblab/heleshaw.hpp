#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "fblab/grid.hpp"
#include "fblab/reaction.hpp"

namespace fblab {

/// Level-set description of Omega = {phi < 0}; phi is close to a signed distance.
struct HsDomain {
  ScalarField phi;
  double t = 0.0;
  int steps_since_reinit = 0;
};

struct HsSolution {
  HsDomain domain;
  ScalarField P;
  int picard_iters = 0;
  double residual = 0.0;
  /// max |A P^k - G(P^k)| for k = 0, 1, ... (k = 0 is the zero start).
  std::vector<double> residual_history;
};

struct SolverOptions {
  int max_picard = 500;
  int max_sweeps = 200000;
  /// Linear solves stop once the max-norm residual drops below this fraction of tol.
  double linear_fraction = 1e-2;
  /// Over-relaxation factor; 0 picks the model-problem optimum for the grid.
  double omega = 0.0;
  /// Interface fractions below this are clamped (guards the 1/theta coefficients).
  double theta_min = 1e-8;
};

/// Picard iteration -Lap P^{k+1} = G(P^k) from P^0 = 0, each linear solve by
/// red-black SOR on the Shortley-Weller cut-cell operator. Stops when
/// successive iterates differ by less than tol in max norm.
HsSolution solve_pressure(const HsDomain& domain, const ReactionTerm& G, double tol,
                          const SolverOptions& opts = {});

struct FrontOptions {
  /// Largest allowed dt * max V in cells.
  double cfl = 1.0;
  int band_cells = 5;
  int reinit_every = 5;
};

/// Normal speed |grad P| at interior nodes, with one-sided Shortley-Weller
/// differences next to the interface; zero outside Omega.
ScalarField interior_speed(const HsSolution& sol);

/// Speed extended constantly along normals to every node within the band.
ScalarField extended_speed(const HsSolution& sol, int band_cells);

/// One first-order Godunov upwind step of phi_t + V |grad phi| = 0.
/// Throws FrontCfl when dt max V exceeds cfl * h and SupportHitBoundary
/// once Omega comes within two nodes of the frame.
HsDomain advance_front(const HsSolution& sol, double dt, const FrontOptions& opts = {});

/// Resets phi to the signed distance of its zero level set (marching squares
/// segments, exact point-segment distances). Sign is preserved.
void reinitialize(HsDomain& domain);

/// Zero level set as a list of segments (x0, y0, x1, y1). Two-dimensional only.
std::vector<std::array<double, 4>> interface_segments(const ScalarField& phi);

/// Domain from a signed-distance-like function of (x, y).
HsDomain domain_from_function(const Grid& grid, const std::function<double(double, double)>& phi);

HsDomain ball_domain(const Grid& grid, double radius, double cx = 0.0, double cy = 0.0);

/// Ellipse with semi-axes (ax, by), given as the exact signed distance after reinitialization.
HsDomain ellipse_domain(const Grid& grid, double ax, double by);

/// Smooth convex approximation of K n B_1 with K = {x_N > a |x'|}: the
/// cone is shifted by 1/k along e_N, thickened by 1/k (so 0 lies on the
/// boundary), intersected with B_1 and the rim rounded with radius 1/(4k).
HsDomain cone_domain(const Grid& grid, int k, double a);

/// Cone n ball mask predicate (the limiting set).
bool in_cone_ball(double x, double y, double a);

/// Cells with phi < 0.
Mask domain_mask(const HsDomain& domain);

/// Fraction of sampled interior-node pairs whose midpoint falls outside Omega.
double convexity_defect(const HsDomain& domain, int pairs, std::uint64_t seed);

struct ProbeRow {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool violated = false;
};

struct ProbeResult {
  std::vector<ProbeRow> rows;
  HsSolution solution;
  /// Cells where P exceeds the barrier x_N^2 - a^2 |x'|^2 on the cone n ball.
  std::size_t barrier_violations = 0;
  double barrier_max_excess = 0.0;
};

/// Ray test P^alpha(t z) >= t P^alpha(z) along z = e_N / 2 on cone_domain(k, a).
ProbeResult sharp_index_probe(const Grid& grid, const ReactionTerm& G, double a, int k, double alpha,
                              const std::vector<double>& ts, double solve_tol = 1e-10, double probe_tol = 1e-12);

/// Cellwise exponential update of the density outside Omega (u = 1 inside).
void update_outer_density(ScalarField& u, const HsDomain& domain, double G0, double dt);

struct EvolveOptions {
  double solve_tol = 1e-9;
  FrontOptions front{};
  SolverOptions solver{};
  /// Called with each snapshot solution; returning false stops the run.
  std::function<bool(const HsSolution&)> observer;
};

/// Alternates pressure solves and front steps from domain.t to T, emitting a
/// solution at every multiple of snapshot_dt. dt is the front CFL limit.
std::vector<HsSolution> evolve(const HsDomain& domain, const ReactionTerm& G, double T, double snapshot_dt,
                               const EvolveOptions& opts = {});

}  // namespace fblab
