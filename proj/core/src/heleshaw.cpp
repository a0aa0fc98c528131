#include "fblab/heleshaw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "fblab/error.hpp"

namespace fblab {

namespace {

constexpr std::int64_t kNone = -1;

void require_2d(const Grid& g) {
  if (g.dim != 2) fail(ErrorCode::PreconditionViolated, "the Hele-Shaw module works on two-dimensional grids");
}

// Shortley-Weller row for one interior node. Directions: +x, -x, +y, -y.
struct Row {
  std::size_t idx = 0;
  double diag = 0.0;
  std::array<std::int64_t, 4> nb{kNone, kNone, kNone, kNone};
  std::array<double, 4> c{};
  std::array<double, 4> dist{};  // distance to neighbour node or interface
};

struct Operator {
  std::vector<Row> red, black;
  double extent_in_omega = 0.0;
};

double interface_fraction(double phi_c, double phi_n, double theta_min) {
  const double th = phi_c / (phi_c - phi_n);
  return std::clamp(th, theta_min, 1.0);
}

Row make_row(const ScalarField& phi, int i, int j, double theta_min) {
  const Grid& g = phi.grid();
  const double h = g.h();
  Row r;
  r.idx = g.index(i, j);
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  const double pc = phi(i, j);
  for (int d = 0; d < 4; ++d) {
    const int ni = i + di[d], nj = j + dj[d];
    const double pn = phi(ni, nj);
    if (pn < 0.0) {
      r.nb[d] = static_cast<std::int64_t>(g.index(ni, nj));
      r.dist[d] = h;
    } else {
      r.dist[d] = interface_fraction(pc, pn, theta_min) * h;
    }
  }
  for (int axis = 0; axis < 2; ++axis) {
    const double hr = r.dist[2 * axis], hl = r.dist[2 * axis + 1];
    const double cr = 2.0 / (hr * (hl + hr)), cl = 2.0 / (hl * (hl + hr));
    r.diag += cr + cl;
    r.c[2 * axis] = r.nb[2 * axis] == kNone ? 0.0 : cr;
    r.c[2 * axis + 1] = r.nb[2 * axis + 1] == kNone ? 0.0 : cl;
  }
  return r;
}

Operator build_operator(const HsDomain& dom, double theta_min) {
  const ScalarField& phi = dom.phi;
  const Grid& g = phi.grid();
  Operator op;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (!(phi(i, j) < 0.0)) continue;
      if (g.on_frame(i, j)) fail(ErrorCode::SupportHitBoundary, "domain touches the grid frame");
      Row r = make_row(phi, i, j, theta_min);
      ((i + j) % 2 == 0 ? op.red : op.black).push_back(r);
      xmin = std::min(xmin, g.x(i));
      xmax = std::max(xmax, g.x(i));
      ymin = std::min(ymin, g.y(j));
      ymax = std::max(ymax, g.y(j));
    }
  }
  if (op.red.empty() && op.black.empty()) fail(ErrorCode::EmptyDomain, "no grid node lies inside the domain");
  op.extent_in_omega = std::max(xmax - xmin, ymax - ymin) + 2.0 * g.h();
  return op;
}

inline double apply_row(const Row& r, const std::vector<double>& u) {
  double s = r.diag * u[r.idx];
  for (int d = 0; d < 4; ++d)
    if (r.nb[d] != kNone) s -= r.c[d] * u[static_cast<std::size_t>(r.nb[d])];
  return s;
}

// Residual scaled by the diagonal, i.e. the size of a Jacobi correction, in pressure units.
double residual_norm(const Operator& op, const std::vector<double>& u, const std::vector<double>& f) {
  double res = 0.0;
  for (const auto* rows : {&op.red, &op.black})
    for (const Row& r : *rows) res = std::max(res, std::abs(f[r.idx] - apply_row(r, u)) / r.diag);
  return res;
}

void sor_solve(const Operator& op, std::vector<double>& u, const std::vector<double>& f, double omega,
               double target, int max_sweeps) {
  for (int sweep = 0; sweep < max_sweeps; sweep += 8) {
    if (residual_norm(op, u, f) < target) return;
    for (int inner = 0; inner < 8; ++inner) {
      for (const auto* rows : {&op.red, &op.black}) {
        for (const Row& r : *rows) {
          double s = f[r.idx];
          for (int d = 0; d < 4; ++d)
            if (r.nb[d] != kNone) s += r.c[d] * u[static_cast<std::size_t>(r.nb[d])];
          u[r.idx] += omega * (s / r.diag - u[r.idx]);
        }
      }
    }
  }
  std::ostringstream os;
  os << "linear solve stalled at residual " << residual_norm(op, u, f);
  fail(ErrorCode::NoConvergence, os.str());
}

double nonlinear_residual(const Operator& op, const std::vector<double>& P, const ReactionTerm& G) {
  double res = 0.0;
  for (const auto* rows : {&op.red, &op.black})
    for (const Row& r : *rows) res = std::max(res, std::abs(apply_row(r, P) - G.eval_unbounded(P[r.idx], 0)));
  return res;
}

bool near_frame(const Grid& g, const ScalarField& phi, int layers) {
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const bool edge = i < layers || j < layers || i >= g.nx() - layers || j >= g.ny() - layers;
      if (edge && phi(i, j) < 0.0) return true;
    }
  return false;
}

double seg_dist(double px, double py, const std::array<double, 4>& s) {
  const double dx = s[2] - s[0], dy = s[3] - s[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - s[0]) * dx + (py - s[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (s[0] + t * dx), py - (s[1] + t * dy));
}

}  // namespace

HsSolution solve_pressure(const HsDomain& domain, const ReactionTerm& G, double tol, const SolverOptions& opts) {
  require_2d(domain.phi.grid());
  if (!(tol > 0.0)) fail(ErrorCode::PreconditionViolated, "solver tolerance must be positive");
  const double G0 = G.eval_unbounded(0.0, 0);
  if (!(G0 > 0.0)) fail(ErrorCode::PreconditionViolated, "the Hele-Shaw pressure needs G(0) > 0");

  const Operator op = build_operator(domain, opts.theta_min);
  const Grid& g = domain.phi.grid();
  const double omega = opts.omega > 0.0
                           ? opts.omega
                           : 2.0 / (1.0 + std::sin(std::numbers::pi * g.h() / op.extent_in_omega));

  HsSolution sol;
  sol.domain = domain;
  std::vector<double> P(g.size(), 0.0), f(g.size(), 0.0);
  sol.residual_history.push_back(nonlinear_residual(op, P, G));
  const double target = opts.linear_fraction * tol;
  for (int k = 0; k < opts.max_picard; ++k) {
    for (const auto* rows : {&op.red, &op.black})
      for (const Row& r : *rows) f[r.idx] = G.eval_unbounded(P[r.idx], 0);
    std::vector<double> next = P;
    sor_solve(op, next, f, omega, target, opts.max_sweeps);
    double diff = 0.0;
    for (std::size_t n = 0; n < P.size(); ++n) diff = std::max(diff, std::abs(next[n] - P[n]));
    P.swap(next);
    sol.residual_history.push_back(nonlinear_residual(op, P, G));
    sol.picard_iters = k + 1;
    if (diff < tol) {
      sol.residual = sol.residual_history.back();
      sol.P = ScalarField(g, std::move(P), 0.0);
      sol.P.use_relative_threshold();
      return sol;
    }
  }
  std::ostringstream os;
  os << "Picard iteration hit the cap of " << opts.max_picard << " with residual " << sol.residual_history.back();
  fail(ErrorCode::NoConvergence, os.str());
}

ScalarField interior_speed(const HsSolution& sol) {
  const ScalarField& phi = sol.domain.phi;
  const ScalarField& P = sol.P;
  const Grid& g = phi.grid();
  const double h = g.h();
  ScalarField V(g, 0.0, 0.0);
  for (int j = 1; j < g.ny() - 1; ++j) {
    for (int i = 1; i < g.nx() - 1; ++i) {
      if (!(phi(i, j) < 0.0)) continue;
      const Row r = make_row(phi, i, j, 1e-8);
      double grad2 = 0.0;
      for (int axis = 0; axis < 2; ++axis) {
        const double hr = r.dist[2 * axis], hl = r.dist[2 * axis + 1];
        const double fr = r.nb[2 * axis] == kNone ? 0.0 : P[static_cast<std::size_t>(r.nb[2 * axis])];
        const double fl = r.nb[2 * axis + 1] == kNone ? 0.0 : P[static_cast<std::size_t>(r.nb[2 * axis + 1])];
        const double f0 = P(i, j);
        double d;
        if (hr == h && hl == h)
          d = (fr - fl) / (2.0 * h);
        else
          d = hl / (hr * (hl + hr)) * fr - hr / (hl * (hl + hr)) * fl + (hr - hl) / (hl * hr) * f0;
        grad2 += d * d;
      }
      V(i, j) = std::sqrt(grad2);
    }
  }
  return V;
}

ScalarField extended_speed(const HsSolution& sol, int band_cells) {
  const ScalarField& phi = sol.domain.phi;
  const Grid& g = phi.grid();
  const double h = g.h();
  const ScalarField Vi = interior_speed(sol);
  ScalarField V(g, 0.0, 0.0);
  const double band = band_cells * h;
  for (int j = 1; j < g.ny() - 1; ++j) {
    for (int i = 1; i < g.nx() - 1; ++i) {
      const double p = phi(i, j);
      if (std::abs(p) > band) continue;
      double nx = (phi(i + 1, j) - phi(i - 1, j)) / (2.0 * h);
      double ny = (phi(i, j + 1) - phi(i, j - 1)) / (2.0 * h);
      const double nn = std::hypot(nx, ny);
      if (nn > 0.0) {
        nx /= nn;
        ny /= nn;
      }
      // Closest interface point, then half a cell inside it.
      const double yx = g.x(i) - p * nx - 0.5 * h * nx;
      const double yy = g.y(j) - p * ny - 0.5 * h * ny;
      const int ci = static_cast<int>(std::lround((yx + g.extent) / h));
      const int cj = static_cast<int>(std::lround((yy + g.extent) / h));
      double best = std::numeric_limits<double>::infinity(), val = 0.0;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ii = ci + di, jj = cj + dj;
          if (ii < 1 || jj < 1 || ii > g.nx() - 2 || jj > g.ny() - 2) continue;
          if (!(phi(ii, jj) < 0.0)) continue;
          const double d2 = std::pow(g.x(ii) - yx, 2) + std::pow(g.y(jj) - yy, 2);
          if (d2 < best) {
            best = d2;
            val = Vi(ii, jj);
          }
        }
      V(i, j) = val;
    }
  }
  return V;
}

HsDomain advance_front(const HsSolution& sol, double dt, const FrontOptions& opts) {
  const ScalarField& phi = sol.domain.phi;
  const Grid& g = phi.grid();
  require_2d(g);
  if (!(dt >= 0.0)) fail(ErrorCode::PreconditionViolated, "front step must be non-negative");
  const double h = g.h();
  const ScalarField V = extended_speed(sol, opts.band_cells);
  const double vmax = V.max();
  if (dt * vmax > opts.cfl * h) {
    std::ostringstream os;
    os << "front CFL violated: dt * max V = " << dt * vmax << " > " << opts.cfl * h;
    fail(ErrorCode::FrontCfl, os.str());
  }
  HsDomain out = sol.domain;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double v = V(i, j);
      if (v == 0.0) continue;
      const double c = phi(i, j);
      const double dmx = i > 0 ? (c - phi(i - 1, j)) / h : 0.0;
      const double dpx = i < g.nx() - 1 ? (phi(i + 1, j) - c) / h : 0.0;
      const double dmy = j > 0 ? (c - phi(i, j - 1)) / h : 0.0;
      const double dpy = j < g.ny() - 1 ? (phi(i, j + 1) - c) / h : 0.0;
      const double grad = std::sqrt(std::pow(std::max(dmx, 0.0), 2) + std::pow(std::min(dpx, 0.0), 2) +
                                    std::pow(std::max(dmy, 0.0), 2) + std::pow(std::min(dpy, 0.0), 2));
      out.phi(i, j) = c - dt * v * grad;
    }
  }
  out.t += dt;
  if (!out.phi.all_finite()) fail(ErrorCode::UnstableStep, "non-finite level set after front step");
  if (near_frame(g, out.phi, 2)) fail(ErrorCode::SupportHitBoundary, "front reached the grid frame");
  if (++out.steps_since_reinit >= opts.reinit_every) {
    reinitialize(out);
    out.steps_since_reinit = 0;
  }
  return out;
}

std::vector<std::array<double, 4>> interface_segments(const ScalarField& phi) {
  const Grid& g = phi.grid();
  require_2d(g);
  std::vector<std::array<double, 4>> segs;
  auto inside = [&](int i, int j) { return phi(i, j) < 0.0; };
  for (int j = 0; j + 1 < g.ny(); ++j) {
    for (int i = 0; i + 1 < g.nx(); ++i) {
      // Corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
      const int ci[4] = {i, i + 1, i + 1, i};
      const int cj[4] = {j, j, j + 1, j + 1};
      std::array<double, 8> pts{};
      int np = 0;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if (inside(ci[a], cj[a]) == inside(ci[b], cj[b])) continue;
        const double pa = phi(ci[a], cj[a]), pb = phi(ci[b], cj[b]);
        const double s = pa / (pa - pb);
        pts[2 * np] = g.x(ci[a]) + s * (g.x(ci[b]) - g.x(ci[a]));
        pts[2 * np + 1] = g.y(cj[a]) + s * (g.y(cj[b]) - g.y(cj[a]));
        ++np;
      }
      if (np == 2) {
        segs.push_back({pts[0], pts[1], pts[2], pts[3]});
      } else if (np == 4) {
        // Saddle: pair crossings according to the sign of the cell average.
        const double avg = 0.25 * (phi(i, j) + phi(i + 1, j) + phi(i + 1, j + 1) + phi(i, j + 1));
        const bool first_inside = inside(i, j);
        // When the centre shares the sign of corner 0, corners 1 and 3 are cut off.
        if ((avg < 0.0) == first_inside) {
          segs.push_back({pts[0], pts[1], pts[2], pts[3]});
          segs.push_back({pts[4], pts[5], pts[6], pts[7]});
        } else {
          segs.push_back({pts[0], pts[1], pts[6], pts[7]});
          segs.push_back({pts[2], pts[3], pts[4], pts[5]});
        }
      }
    }
  }
  return segs;
}

void reinitialize(HsDomain& domain) {
  ScalarField& phi = domain.phi;
  const Grid& g = phi.grid();
  const auto segs = interface_segments(phi);
  if (segs.empty()) fail(ErrorCode::EmptyDomain, "level set has no zero crossing");
  ScalarField out(g, 0.0, 0.0);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (const auto& s : segs) d = std::min(d, seg_dist(g.x(i), g.y(j), s));
      out(i, j) = phi(i, j) < 0.0 ? -d : d;
    }
  }
  phi = std::move(out);
}

HsDomain domain_from_function(const Grid& grid, const std::function<double(double, double)>& f) {
  require_2d(grid);
  HsDomain d;
  d.phi = ScalarField(grid, 0.0, 0.0);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) d.phi(i, j) = f(grid.x(i), grid.y(j));
  if (count(domain_mask(d)) == 0) fail(ErrorCode::EmptyDomain, "no grid node lies inside the domain");
  return d;
}

HsDomain ball_domain(const Grid& grid, double radius, double cx, double cy) {
  if (!(radius > 0.0)) fail(ErrorCode::PreconditionViolated, "ball radius must be positive");
  return domain_from_function(grid, [=](double x, double y) { return std::hypot(x - cx, y - cy) - radius; });
}

HsDomain ellipse_domain(const Grid& grid, double ax, double by) {
  if (!(ax > 0.0 && by > 0.0)) fail(ErrorCode::PreconditionViolated, "ellipse semi-axes must be positive");
  const double s = std::min(ax, by);
  HsDomain d = domain_from_function(
      grid, [=](double x, double y) { return s * (std::sqrt(x * x / (ax * ax) + y * y / (by * by)) - 1.0); });
  reinitialize(d);
  return d;
}

namespace {

double sd_cone(double x, double y, double a) {
  const double beta = std::atan(1.0 / a);
  const double qx = std::abs(x), qy = y;
  const double dx = std::sin(beta), dy = std::cos(beta);
  if (qx * dx + qy * dy > 0.0) return qx * std::cos(beta) - qy * std::sin(beta);
  return std::hypot(qx, qy);
}

double intersection_round(double a, double b, double r) {
  const double ux = std::max(r + a, 0.0), uy = std::max(r + b, 0.0);
  return std::min(-r, std::max(a, b)) + std::hypot(ux, uy);
}

}  // namespace

HsDomain cone_domain(const Grid& grid, int k, double a) {
  if (k < 1) fail(ErrorCode::PreconditionViolated, "cone index k must be at least 1");
  if (!(a > 0.0)) fail(ErrorCode::PreconditionViolated, "cone slope a must be positive");
  const double s = 1.0 / k, rho = 0.25 / k;
  return domain_from_function(grid, [=](double x, double y) {
    const double pd = sd_cone(x, y - s, a) - s;
    const double pb = std::hypot(x, y) - 1.0;
    return intersection_round(pd, pb, rho);
  });
}

bool in_cone_ball(double x, double y, double a) { return y > a * std::abs(x) && x * x + y * y < 1.0; }

Mask domain_mask(const HsDomain& domain) {
  const auto& v = domain.phi.values();
  Mask m(v.size(), 0);
  for (std::size_t k = 0; k < v.size(); ++k) m[k] = v[k] < 0.0 ? 1 : 0;
  return m;
}

double convexity_defect(const HsDomain& domain, int pairs, std::uint64_t seed) {
  const Grid& g = domain.phi.grid();
  std::vector<std::size_t> in;
  const auto& v = domain.phi.values();
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] < 0.0) in.push_back(k);
  if (in.empty()) fail(ErrorCode::EmptyDomain, "no grid node lies inside the domain");
  if (pairs <= 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, in.size() - 1);
  const auto nx = static_cast<std::size_t>(g.nx());
  int bad = 0;
  for (int p = 0; p < pairs; ++p) {
    const std::size_t a = in[pick(rng)], b = in[pick(rng)];
    const double mx = 0.5 * (g.x(static_cast<int>(a % nx)) + g.x(static_cast<int>(b % nx)));
    const double my = 0.5 * (g.y(static_cast<int>(a / nx)) + g.y(static_cast<int>(b / nx)));
    if (!(domain.phi.interpolate(mx, my) < 0.0)) ++bad;
  }
  return static_cast<double>(bad) / pairs;
}

ProbeResult sharp_index_probe(const Grid& grid, const ReactionTerm& G, double a, int k, double alpha,
                              const std::vector<double>& ts, double solve_tol, double probe_tol) {
  require_2d(grid);
  const double G0 = G.eval_unbounded(0.0, 0);
  const double amin = std::sqrt((2.0 + G0) / (2.0 * grid.dim));
  if (!(a >= amin)) {
    std::ostringstream os;
    os << "barrier needs a >= " << amin << ", got " << a;
    fail(ErrorCode::PreconditionViolated, os.str());
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCode::PreconditionViolated, "alpha must lie in (0, 1]");
  const HsDomain dom = cone_domain(grid, k, a);
  const double zy = 0.5;
  if (!(dom.phi.interpolate(0.0, zy) < 0.0)) fail(ErrorCode::PointOutsideDomain, "z = e_N / 2 is not inside the domain");

  ProbeResult res;
  res.solution = solve_pressure(dom, G, solve_tol);
  const ScalarField& P = res.solution.P;
  const double Pz = std::pow(std::max(P.interpolate(0.0, zy), 0.0), alpha);
  for (double t : ts) {
    if (!(t > 0.0 && t <= 1.0)) fail(ErrorCode::PointOutsideDomain, "probe parameter t must lie in (0, 1]");
    if (!(dom.phi.interpolate(0.0, t * zy) < 0.0))
      fail(ErrorCode::PointOutsideDomain, "probe point t z is not inside the domain");
    ProbeRow row;
    row.t = t;
    row.lhs = std::pow(std::max(P.interpolate(0.0, t * zy), 0.0), alpha);
    row.rhs = t * Pz;
    row.violated = row.lhs < row.rhs - probe_tol;
    res.rows.push_back(row);
  }
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) {
      const double x = grid.x(i), y = grid.y(j);
      if (!in_cone_ball(x, y, a)) continue;
      const double excess = P(i, j) - (y * y - a * a * x * x);
      if (excess > 1e-12) {
        ++res.barrier_violations;
        res.barrier_max_excess = std::max(res.barrier_max_excess, excess);
      }
    }
  return res;
}

void update_outer_density(ScalarField& u, const HsDomain& domain, double G0, double dt) {
  const double f = std::exp(G0 * dt);
  for (std::size_t k = 0; k < u.values().size(); ++k) u[k] = domain.phi[k] < 0.0 ? 1.0 : u[k] * f;
}

std::vector<HsSolution> evolve(const HsDomain& domain, const ReactionTerm& G, double T, double snapshot_dt,
                               const EvolveOptions& opts) {
  if (!(snapshot_dt > 0.0)) fail(ErrorCode::PreconditionViolated, "snapshot interval must be positive");
  if (!(T >= domain.t)) fail(ErrorCode::PreconditionViolated, "end time precedes the domain time");
  const double h = domain.phi.grid().h();
  const double eps = 1e-12 * std::max(1.0, T);
  std::vector<HsSolution> out;
  HsDomain cur = domain;
  double next_snap = domain.t;
  int snap_index = 0;
  while (true) {
    HsSolution sol = solve_pressure(cur, G, opts.solve_tol, opts.solver);
    if (cur.t >= next_snap - eps) {
      out.push_back(sol);
      if (opts.observer && !opts.observer(out.back())) break;
      ++snap_index;
      next_snap = std::min(domain.t + snap_index * snapshot_dt, T);
      if (cur.t >= T - eps) break;
    }
    const double vmax = extended_speed(sol, opts.front.band_cells).max();
    double dt = vmax > 0.0 ? 0.999 * opts.front.cfl * h / vmax : next_snap - cur.t;
    bool at_snap = false;
    if (cur.t + dt >= next_snap - eps) {
      dt = next_snap - cur.t;
      at_snap = true;
    }
    cur = advance_front(sol, dt, opts.front);
    if (at_snap) cur.t = next_snap;
  }
  return out;
}

}  // namespace fblab
