#include "fblab/counterexamples.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fblab/concavity.hpp"
#include "fblab/error.hpp"
#include "fblab/pme.hpp"

namespace fblab {

std::string_view to_string(CexCase c) noexcept {
  switch (c) {
    case CexCase::LowAlpha: return "low";
    case CexCase::AlphaOne: return "one";
    case CexCase::MidAlpha: return "mid";
  }
  return "low";
}

namespace {

CexCase case_for(double alpha) {
  if (alpha < 0.5) return CexCase::LowAlpha;
  if (alpha == 1.0) return CexCase::AlphaOne;
  return CexCase::MidAlpha;
}

struct Jet {
  double w, w1, w2, w11, w12, w22, lap, lap1, lap11, w111, w211;
};

Jet jet_at(const std::vector<Monomial>& poly, double x, double y) {
  auto d = [&](int dx, int dy) { return eval_poly(poly, x, y, dx, dy); };
  Jet j{};
  j.w = d(0, 0);
  j.w1 = d(1, 0);
  j.w2 = d(0, 1);
  j.w11 = d(2, 0);
  j.w12 = d(1, 1);
  j.w22 = d(0, 2);
  j.lap = j.w11 + j.w22;
  j.lap1 = d(3, 0) + d(1, 2);
  j.lap11 = d(4, 0) + d(2, 2);
  j.w111 = d(3, 0);
  j.w211 = d(2, 1);
  return j;
}

double dt_w11_at(const CexParams& p, const ReactionTerm& G, double x, double y) {
  const Jet J = jet_at(w_monomials(p), x, y);
  const double r = p.m - 1.0, alpha = p.alpha;
  const double S = J.w1 * J.w1 + J.w2 * J.w2;
  const double wk_wk1 = J.w1 * J.w11 + J.w2 * J.w12;
  const double wk1_sq = J.w11 * J.w11 + J.w12 * J.w12;
  const double wk_wk11 = J.w1 * J.w111 + J.w2 * J.w211;
  if (alpha == 0.0) {
    const double e = std::exp(J.w);
    const double g1 = G.eval_unbounded(e, 1), g2 = G.eval_unbounded(e, 2);
    const double q = J.w1 * J.w1 + J.w11;
    return r * e * (q * J.lap + 2.0 * J.w1 * J.lap1 + J.lap11) +
           p.m * e * (q * S + 4.0 * J.w1 * wk_wk1 + 2.0 * wk1_sq + 2.0 * wk_wk11) +
           r * (g2 * e * e * J.w1 * J.w1 + g1 * e * q);
  }
  if (!(J.w > 0.0)) fail(ErrorCode::ParamsInconsistent, "w must be positive where the derivative is taken");
  const double beta = 1.0 / alpha;
  const double kappa = beta * (1.0 + r * (1.0 - alpha));
  const double w = J.w;
  auto pw = [&](double e) { return std::pow(w, e); };
  const double P = pw(beta);
  const double g0 = G.eval_unbounded(P, 0), g1 = G.eval_unbounded(P, 1), g2 = G.eval_unbounded(P, 2);
  const double diff = r * (P * J.lap11 + 2.0 * beta * pw(beta - 1.0) * J.w1 * J.lap1 +
                           beta * (beta - 1.0) * pw(beta - 2.0) * J.w1 * J.w1 * J.lap +
                           beta * pw(beta - 1.0) * J.w11 * J.lap);
  const double grad = kappa * ((beta - 1.0) * (beta - 2.0) * pw(beta - 3.0) * J.w1 * J.w1 * S +
                               (beta - 1.0) * pw(beta - 2.0) * J.w11 * S +
                               4.0 * (beta - 1.0) * pw(beta - 2.0) * J.w1 * wk_wk1 + 2.0 * pw(beta - 1.0) * wk1_sq +
                               2.0 * pw(beta - 1.0) * wk_wk11);
  const double react = r * J.w11 * (alpha * g0 + P * g1) +
                       r * J.w1 * J.w1 * ((beta + 1.0) * pw(beta - 1.0) * g1 + beta * pw(2.0 * beta - 1.0) * g2);
  return diff + grad + react;
}

}  // namespace

void CexParams::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorCode::ParamsInconsistent, msg); };
  if (!(alpha >= 0.0 && alpha <= 1.0) || alpha == 0.5) bad("alpha must lie in [0, 1] without 1/2");
  if (kase != case_for(alpha)) bad("case does not match alpha");
  if (!(m > 1.0)) bad("m must exceed 1");
  if (!(c > 0.0)) bad("offset c must be positive");
  if (!(rho > 0.0)) bad("rho must be positive");
  if (!(A_ext > 0.0)) bad("A_ext must be positive");
  if (kase == CexCase::MidAlpha ? !(b > 0.0) : !(a > 0.0)) bad("a (or b) must be positive");
}

std::vector<Monomial> w_monomials(const CexParams& p) {
  switch (p.kase) {
    case CexCase::LowAlpha:
      if (p.alpha == 0.0)
        return {{p.c, 0, 0}, {p.a, 1, 0}, {-1.0, 4, 0}, {1.0, 1, 2}, {-1.0, 0, 2}, {-2.0, 2, 2}};
      [[fallthrough]];
    case CexCase::AlphaOne:
      return {{p.c, 0, 0}, {1.0, 1, 0}, {-1.0, 4, 0}, {p.a, 1, 2}, {-1.0, 0, 2}, {-2.0 * p.a * p.a, 2, 2}};
    case CexCase::MidAlpha: {
      const double s = std::sqrt(1.5 - p.alpha);
      const double g = p.alpha * s / (p.b * (1.0 - p.alpha));
      return {{p.c, 0, 0},          {g, 1, 0},       {-1.0 / (12.0 * p.b * p.b), 4, 0},
              {-p.b * p.b, 0, 2}, {p.b * s, 1, 2}, {-1.0, 2, 2}};
    }
  }
  return {};
}

double eval_poly(const std::vector<Monomial>& poly, double x, double y, int dx, int dy) {
  double s = 0.0;
  for (const auto& mo : poly) {
    if (mo.px < dx || mo.py < dy) continue;
    double f = mo.coef;
    for (int k = 0; k < dx; ++k) f *= mo.px - k;
    for (int k = 0; k < dy; ++k) f *= mo.py - k;
    s += f * std::pow(x, mo.px - dx) * std::pow(y, mo.py - dy);
  }
  return s;
}

ScalarField build_w(const CexParams& p, const Grid& grid) {
  p.validate();
  if (grid.dim != 2) fail(ErrorCode::ParamsInconsistent, "counterexamples need a two-dimensional grid");
  const auto poly = w_monomials(p);
  ScalarField w(grid, 0.0, 0.0);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) w(i, j) = eval_poly(poly, grid.x(i), grid.y(j));
  return w;
}

double w_time_derivative(const CexParams& p, const ReactionTerm& G, double x, double y) {
  const auto poly = w_monomials(p);
  const double w = eval_poly(poly, x, y);
  const double w1 = eval_poly(poly, x, y, 1, 0), w2 = eval_poly(poly, x, y, 0, 1);
  const double lap = eval_poly(poly, x, y, 2, 0) + eval_poly(poly, x, y, 0, 2);
  const double S = w1 * w1 + w2 * w2;
  const double r = p.m - 1.0;
  if (p.alpha == 0.0) {
    const double e = std::exp(w);
    return r * e * lap + p.m * e * S + r * G.eval_unbounded(e, 0);
  }
  const double beta = 1.0 / p.alpha;
  const double kappa = beta * (1.0 + r * (1.0 - p.alpha));
  return r * std::pow(w, beta) * lap + kappa * std::pow(w, beta - 1.0) * S +
         p.alpha * r * w * G.eval_unbounded(std::pow(w, beta), 0);
}

double dt_w11_origin(const CexParams& p, const ReactionTerm& G) {
  p.validate();
  return dt_w11_at(p, G, 0.0, 0.0);
}

bool hessian_negative_definite(const CexParams& p, double rho, int radial, int angular) {
  const auto poly = w_monomials(p);
  for (int k = 1; k <= radial; ++k) {
    const double r = rho * k / radial;
    for (int q = 0; q < angular; ++q) {
      const double th = 2.0 * std::numbers::pi * q / angular;
      const double x = r * std::cos(th), y = r * std::sin(th);
      SymMatrix2 H{eval_poly(poly, x, y, 2, 0), eval_poly(poly, x, y, 1, 1), eval_poly(poly, x, y, 0, 2), 2};
      if (!(H.largest_eigenvalue() < 0.0)) return false;
    }
  }
  return true;
}

CexParams choose_params(double alpha, double m, const ReactionTerm& G) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::PreconditionViolated, "alpha must lie in [0, 1]");
  if (alpha == 0.5) fail(ErrorCode::PreconditionViolated, "alpha = 1/2 is preserved; no counterexample exists");
  if (!(m > 1.0)) fail(ErrorCode::PreconditionViolated, "m must exceed 1");
  CexParams p;
  p.alpha = alpha;
  p.m = m;
  p.kase = case_for(alpha);
  double gamma = 1.0, A = 0.0;
  if (p.kase == CexCase::AlphaOne) {
    const auto rep = check_conditions(G, 256);
    gamma = rep.fitted_gamma;
    A = rep.fitted_A;
  }
  std::ostringstream trace;
  for (double v = 2.0; v <= 1048576.0; v *= 2.0) {
    if (p.kase == CexCase::MidAlpha) {
      p.b = v;
      p.c = 1.0;
    } else {
      p.a = v;
      p.c = 1.0 / (v * v);
      if (p.kase == CexCase::AlphaOne && gamma < 1.0 && A > 0.0) p.c = std::pow(A * v, -1.0 / (1.0 - gamma));
    }
    double d = 0.0;
    try {
      d = dt_w11_origin(p, G);
    } catch (const Error& e) {
      trace << " [" << v << ": " << e.what() << "]";
      continue;
    }
    if (!(d > 0.0)) {
      trace << " [" << v << ": dt w11 = " << d << "]";
      continue;
    }
    double rho = std::min(0.5, 1.0 / v);
    for (int k = 0; k < 40; ++k, rho *= 0.5) {
      if (hessian_negative_definite(p, rho)) {
        p.rho = rho;
        return p;
      }
    }
    trace << " [" << v << ": no definite ball]";
  }
  fail(ErrorCode::SearchFailed, "parameter search failed:" + trace.str());
}

double cutoff(double r, double rho) {
  if (r <= 0.5 * rho) return 1.0;
  if (r >= 0.75 * rho) return 0.0;
  const double s = (r - 0.5 * rho) / (0.25 * rho);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

namespace {

// Depth below the peak of w~ at which the alpha = 0 pressure is cut to zero.
constexpr double kLogDepth = 20.0;

double tilde_from(const CexParams& p, double x, double y, double w, double w1_origin) {
  const double r = std::hypot(x, y);
  const double L = p.c + w1_origin * x;
  const double q = (r / p.rho) * (r / p.rho);
  const double q3 = q * q * q;
  return L + cutoff(r, p.rho) * (w - L) - p.A_ext * q3 * q3;
}

double w1_at_origin(const CexParams& p) { return eval_poly(w_monomials(p), 0.0, 0.0, 1, 0); }

// Edge level of the support of w~: zero for alpha > 0, c - kLogDepth for alpha = 0.
double edge_level(const CexParams& p) { return p.alpha > 0.0 ? 0.0 : p.c - kLogDepth; }

std::optional<ScalarField> try_extension(const ScalarField& w, const CexParams& p) {
  const Grid& g = w.grid();
  const double w1 = w1_at_origin(p), edge = edge_level(p);
  ScalarField out(g, 0.0, 0.0);
  double maxabs = 0.0;
  Mask supp(g.size(), 0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double v = tilde_from(p, g.x(i), g.y(j), w(i, j), w1);
      out(i, j) = v;
      if (v > edge) {
        supp[g.index(i, j)] = 1;
        maxabs = std::max(maxabs, std::abs(v));
      }
    }
  if (!supp[g.index(g.centre(), g.centre())]) return std::nullopt;
  const Mask inner = erode_mask(g, supp, 1);
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * maxabs / (g.h() * g.h());
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i)
      if (inner[g.index(i, j)] && hessian_unchecked(out, {i, j}).largest_eigenvalue() > tol) return std::nullopt;
  return out;
}

ScalarField extend_from(const ScalarField& w, CexParams& p, double A0) {
  p.validate();
  for (double A = A0; A <= 1048576.0; A *= 2.0) {
    p.A_ext = A;
    if (auto f = try_extension(w, p)) return *std::move(f);
  }
  fail(ErrorCode::ExtensionFailed, "no extension amplitude up to 2^20 gives a concave w~");
}

}  // namespace

double w_tilde(const CexParams& p, double x, double y) {
  return tilde_from(p, x, y, eval_poly(w_monomials(p), x, y), w1_at_origin(p));
}

Grid counterexample_grid(const CexParams& p, int cells) {
  p.validate();
  const double edge = edge_level(p), step = p.rho / 400.0;
  double R = 0.0;
  for (int k = 0; k < 128; ++k) {
    const double th = 2.0 * std::numbers::pi * k / 128;
    double r = 0.0;
    while (w_tilde(p, r * std::cos(th), r * std::sin(th)) > edge) r += step;
    R = std::max(R, r);
  }
  if (cells % 2) ++cells;
  return Grid::make(2, 1.25 * R, cells);
}

ScalarField extend_to_ball(const ScalarField& w, CexParams& p) { return extend_from(w, p, 1.0); }

ScalarField initial_pressure(const ScalarField& wt, double alpha) {
  ScalarField P(wt.grid(), 0.0, 0.0);
  const double cut = alpha > 0.0 ? 0.0 : wt.max() - kLogDepth;
  for (std::size_t k = 0; k < P.values().size(); ++k) {
    const double v = wt[k];
    if (!(v > cut)) continue;
    P[k] = alpha > 0.0 ? std::pow(v, 1.0 / alpha) : std::exp(v);
  }
  P.use_relative_threshold();
  return P;
}

CexVerdict track_concavity_loss(const ScalarField& P0, double alpha, double m, const ReactionTerm& G, double radius,
                                const TrackOptions& opts) {
  const Grid& g = P0.grid();
  const double h = g.h();
  std::vector<Index2> ball;
  for (int j = 2; j < g.ny() - 2; ++j)
    for (int i = 2; i < g.nx() - 2; ++i)
      if (std::hypot(g.x(i), g.y(j)) <= radius) ball.push_back({i, j});
  if (ball.empty()) fail(ErrorCode::PreconditionViolated, "tracking ball holds no grid node");

  CexVerdict v;
  v.radius = radius;
  ScalarField u0 = density_from_pressure(P0, m);
  double sdt = opts.snapshot_dt;
  if (!(sdt > 0.0)) sdt = 10.0 * stable_dt(PmeState{u0, m, 0.0}, G, opts.cfl);
  int after = 0;
  auto observe = [&](const PmeState& st) {
    const ScalarField P = pressure_of(st);
    const ScalarField F = power_transform(P, alpha);
    const Mask mask = support_mask(P, 2);
    const double h4 = h * h * h * h;
    const double floor_coef = 64.0 * std::numeric_limits<double>::epsilon() / (h * h);
    double lmax = -std::numeric_limits<double>::infinity(), tol_at = 0.0;
    bool exceeded = false;
    for (const Index2& c : ball) {
      if (!mask[g.index(c.i, c.j)]) continue;
      auto f = [&](int di, int dj) { return F(c.i + di, c.j + dj); };
      const double xxxx = (f(2, 0) - 4.0 * f(1, 0) + 6.0 * f(0, 0) - 4.0 * f(-1, 0) + f(-2, 0)) / h4;
      const double yyyy = (f(0, 2) - 4.0 * f(0, 1) + 6.0 * f(0, 0) - 4.0 * f(0, -1) + f(0, -2)) / h4;
      auto x3 = [&](int dj) { return f(2, dj) - 2.0 * f(1, dj) + 2.0 * f(-1, dj) - f(-2, dj); };
      auto y3 = [&](int di) { return f(di, 2) - 2.0 * f(di, 1) + 2.0 * f(di, -1) - f(di, -2); };
      const double xxxy = (x3(1) - x3(-1)) / (4.0 * h4);
      const double xyyy = (y3(1) - y3(-1)) / (4.0 * h4);
      const double d4 = std::max({std::abs(xxxx), std::abs(yyyy), 2.0 * (std::abs(xxxy) + std::abs(xyyy))});
      const double tol = opts.c_tol * h * h / 12.0 * d4 + floor_coef * std::abs(f(0, 0));
      const double lam = direct_lambda1(F, c);
      if (lam > 3.0 * tol) exceeded = true;
      if (lam > lmax) {
        lmax = lam;
        tol_at = tol;
      }
    }
    if (!std::isfinite(lmax)) fail(ErrorCode::EmptySupport, "tracking ball left the support");
    v.lambda1_series.emplace_back(st.t, lmax);
    v.tol_series.push_back(tol_at);
    if (!v.first_positive_t && exceeded) v.first_positive_t = st.t;
    if (v.first_positive_t && opts.stop_on_detection && after++ >= opts.extra_snapshots) return false;
    return true;
  };
  SimulateOptions so;
  so.observer = observe;
  try {
    simulate(u0, m, G, opts.T, opts.cfl, sdt, so);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SupportHitBoundary) throw;
    v.hit_boundary = true;
  }
  return v;
}

CexVerdict run_counterexample(CexParams& p, const ReactionTerm& G, const TrackOptions& opts, int cells) {
  p.validate();
  // A coarse pass fixes the amplitude, which sets the support size and hence the grid.
  p.A_ext = 1.0;
  extend_from(build_w(p, counterexample_grid(p, std::max(64, cells / 4))), p, 1.0);
  const Grid grid = counterexample_grid(p, cells);
  const ScalarField wt = extend_from(build_w(p, grid), p, p.A_ext);
  const ScalarField P0 = initial_pressure(wt, p.alpha);
  return track_concavity_loss(P0, p.alpha, p.m, G, 0.25 * p.rho, opts);
}

}  // namespace fblab
