#include "fblab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fblab/error.hpp"

namespace fblab {

void EstimateConfig::validate() const {
  if (!(K > 0.0)) fail(ErrorCode::ConfigError, "estimates need K > 0");
  if (!(L > K)) fail(ErrorCode::ConfigError, "estimates need L > K");
  if (!(c_lower > 0.0)) fail(ErrorCode::ConfigError, "estimates need c_lower > 0");
  if (!(C_upper > 0.0)) fail(ErrorCode::ConfigError, "estimates need C_upper > 0");
  if (!(r > 0.0)) fail(ErrorCode::ConfigError, "estimates need r = m - 1 > 0");
}

double ab_required_bound(double K, double r, double t) { return -K / (1.0 + r * K * t); }

namespace {

template <class F>
double min_over(const Mask& mask, const Grid& g, F&& f) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (mask[g.index(i, j)]) best = std::min(best, f(i, j));
  if (!std::isfinite(best)) fail(ErrorCode::EmptySupport, "eroded support is empty");
  return best;
}

double grad2_central(const ScalarField& P, int i, int j) {
  const Grid& g = P.grid();
  const double h = g.h();
  const double px = (P(i + 1, j) - P(i - 1, j)) / (2.0 * h);
  double s = px * px;
  if (g.dim == 2) {
    const double py = (P(i, j + 1) - P(i, j - 1)) / (2.0 * h);
    s += py * py;
  }
  return s;
}

Mask eroded(const ScalarField& P, int erode) { return support_mask(P, std::max(erode, 1)); }

}  // namespace

double aronson_benilan_margin(const ScalarField& P, const ReactionTerm& G, const EstimateConfig& cfg, double t,
                              int erode) {
  if (!(t >= 0.0)) fail(ErrorCode::PreconditionViolated, "time must be non-negative");
  const Grid& g = P.grid();
  const ScalarField lap = laplacian(P);
  const double bound = -ab_required_bound(cfg.K, cfg.r, t);
  return min_over(eroded(P, erode), g,
                  [&](int i, int j) { return lap(i, j) + G.eval_unbounded(P(i, j), 0) + bound; });
}

double max_gradient_on_support(const ScalarField& P) {
  const Grid& g = P.grid();
  const double h = g.h();
  double best = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (!P.in_support(i, j)) continue;
      double s = 0.0;
      for (int axis = 0; axis < g.dim; ++axis) {
        const int di = axis == 0 ? 1 : 0, dj = axis == 1 ? 1 : 0;
        const int ip = i + di, jp = j + dj, im = i - di, jm = j - dj;
        const bool hp = ip < g.nx() && jp < g.ny() && P.in_support(ip, jp);
        const bool hm = im >= 0 && jm >= 0 && P.in_support(im, jm);
        double d = 0.0;
        if (hp && hm)
          d = (P(ip, jp) - P(im, jm)) / (2.0 * h);
        else if (hp)
          d = (P(ip, jp) - P(i, j)) / h;
        else if (hm)
          d = (P(i, j) - P(im, jm)) / h;
        s += d * d;
      }
      best = std::max(best, std::sqrt(s));
    }
  return best;
}

double gradient_bound_margin(const ScalarField& P, const EstimateConfig& cfg, double G0, double t) {
  if (!(t >= 0.0)) fail(ErrorCode::PreconditionViolated, "time must be non-negative");
  return cfg.C_upper * std::exp(cfg.r * G0 * t) - max_gradient_on_support(P);
}

double nondegeneracy_margin(const ScalarField& P, const ReactionTerm& G, const EstimateConfig& cfg, double t,
                            int erode, bool use_L) {
  if (!(t >= 0.0)) fail(ErrorCode::PreconditionViolated, "time must be non-negative");
  const double r = cfg.r, a = 2.0 / (cfg.K * r + 2.0);
  const double rhs = cfg.c_lower / (cfg.K * r + 2.0) * std::exp(-r * (use_L ? cfg.L : cfg.K) * t);
  return min_over(eroded(P, erode), P.grid(), [&](int i, int j) {
    const double p = P(i, j);
    const double lhs = (1.0 + (t + a) * r * G.eval_unbounded(p, 0)) * p + (t + a) * (1.0 + 0.5 * r) * grad2_central(P, i, j);
    return lhs - rhs;
  });
}

EstimateReport evaluate_estimates(const ScalarField& P, const ReactionTerm& G, const EstimateConfig& cfg, double t,
                                  int erode) {
  EstimateReport rep;
  rep.t = t;
  rep.ab_margin = aronson_benilan_margin(P, G, cfg, t, erode);
  rep.grad_margin = gradient_bound_margin(P, cfg, G.G0(), t);
  rep.nondeg_margin = nondegeneracy_margin(P, G, cfg, t, erode, true);
  rep.nondeg_margin_K = nondegeneracy_margin(P, G, cfg, t, erode, false);
  return rep;
}

void validate_initial(const ScalarField& P0, const ReactionTerm& G, const EstimateConfig& cfg, double tol, int erode) {
  cfg.validate();
  const Grid& g = P0.grid();
  const ScalarField lap = laplacian(P0);
  const Mask m = eroded(P0, erode);
  const double ab = min_over(m, g, [&](int i, int j) { return lap(i, j) + G.eval_unbounded(P0(i, j), 0); });
  const double nd = min_over(m, g, [&](int i, int j) { return P0(i, j) + grad2_central(P0, i, j); });
  const double gm = max_gradient_on_support(P0);
  std::ostringstream os;
  if (ab < -cfg.K - tol) os << "Lap P0 + G(P0) reaches " << ab << " below -K = " << -cfg.K << "; ";
  if (nd < cfg.c_lower - tol) os << "P0 + |grad P0|^2 reaches " << nd << " below c_lower = " << cfg.c_lower << "; ";
  if (gm > cfg.C_upper + tol) os << "|grad P0| reaches " << gm << " above C_upper = " << cfg.C_upper << "; ";
  const auto rep = check_conditions(G, 256, cfg.K, cfg.L);
  if (!rep.at("abc1").satisfied) os << "sup -P G'(P) = " << rep.abc1_sup << " exceeds L - K; ";
  if (!os.str().empty()) fail(ErrorCode::ConfigError, "initial data violate the estimate hypotheses: " + os.str());
}

EstimateConfig fit_initial_config(const ScalarField& P0, const ReactionTerm& G, double r, double slack, int erode) {
  const Grid& g = P0.grid();
  const ScalarField lap = laplacian(P0);
  const Mask m = eroded(P0, erode);
  const double ab = min_over(m, g, [&](int i, int j) { return lap(i, j) + G.eval_unbounded(P0(i, j), 0); });
  const double nd = min_over(m, g, [&](int i, int j) { return P0(i, j) + grad2_central(P0, i, j); });
  EstimateConfig cfg;
  cfg.r = r;
  cfg.K = std::max(-ab, 1e-6) * (1.0 + slack);
  cfg.c_lower = nd / (1.0 + slack);
  cfg.C_upper = max_gradient_on_support(P0) * (1.0 + slack);
  const double sup = check_conditions(G, 256).abc1_sup;
  cfg.L = cfg.K + std::max(sup, 1e-6) * (1.0 + slack);
  return cfg;
}

double boundary_decay_exponent(const ScalarField& P, int rays, int cells, double floor) {
  const Grid& g = P.grid();
  if (g.dim != 2) fail(ErrorCode::PreconditionViolated, "ray fits need a two-dimensional field");
  if (rays < 1 || cells < 3) fail(ErrorCode::PreconditionViolated, "need at least one ray and three cells");
  if (!(floor > 0.0 && floor < 1.0)) fail(ErrorCode::PreconditionViolated, "floor must lie in (0, 1)");
  double mass = 0.0, cx = 0.0, cy = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (P.in_support(i, j)) {
        mass += P(i, j);
        cx += P(i, j) * g.x(i);
        cy += P(i, j) * g.y(j);
      }
  if (!(mass > 0.0)) fail(ErrorCode::EmptySupport, "support is empty");
  cx /= mass;
  cy /= mass;
  const double h = g.h();
  const double cut = floor * P.max();
  std::vector<double> betas;
  for (int k = 0; k < rays; ++k) {
    const double th = 2.0 * std::numbers::pi * (k + 0.5) / rays;
    const double dx = std::cos(th), dy = std::sin(th);
    std::vector<double> ps;
    for (int s = 0;; ++s) {
      const double x = cx + s * h * dx, y = cy + s * h * dy;
      if (std::abs(x) > g.extent || std::abs(y) > g.extent) break;
      const double p = P.interpolate(x, y);
      if (!(p > cut)) break;
      ps.push_back(p);
    }
    // q = P / |dP/dr| vanishes at the edge with slope -1/beta when P ~ (r_b - r)^beta.
    // A quadratic fit of q(r) is extrapolated to its root beyond the last sample.
    const int n = static_cast<int>(ps.size());
    if (n < cells + 2) continue;
    double S[5] = {0, 0, 0, 0, 0}, T[3] = {0, 0, 0};
    const double r0 = (n - 2) * h;
    for (int s = n - 1 - cells; s < n - 1; ++s) {
      const double d = (ps[s - 1] - ps[s + 1]) / (2.0 * h);
      const double r = s * h - r0, q = ps[s] / d;
      double rk = 1.0;
      for (int e = 0; e < 5; ++e, rk *= r) {
        S[e] += rk;
        if (e < 3) T[e] += rk * q;
      }
    }
    const double M[3][3] = {{S[0], S[1], S[2]}, {S[1], S[2], S[3]}, {S[2], S[3], S[4]}};
    auto det3 = [](const double m[3][3]) {
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double D = det3(M);
    if (D == 0.0) continue;
    double coef[3];
    for (int c = 0; c < 3; ++c) {
      double Mc[3][3];
      for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) Mc[r][k] = k == c ? T[r] : M[r][k];
      coef[c] = det3(Mc) / D;
    }
    // First root of c0 + c1 r + c2 r^2 at r >= 0 (q > 0 at the last sample).
    double root = -1.0;
    if (std::abs(coef[2]) < 1e-14 * (std::abs(coef[1]) + 1e-300)) {
      if (coef[1] < 0.0) root = -coef[0] / coef[1];
    } else {
      const double disc = coef[1] * coef[1] - 4.0 * coef[2] * coef[0];
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double cand : {(-coef[1] - sq) / (2.0 * coef[2]), (-coef[1] + sq) / (2.0 * coef[2])})
          if (cand >= -h && (root < 0.0 || cand < root)) root = cand;
      }
    }
    if (root < -h) continue;
    const double slope = coef[1] + 2.0 * coef[2] * root;
    if (slope < 0.0) betas.push_back(-1.0 / slope);
  }
  if (betas.empty()) fail(ErrorCode::EmptySupport, "support too small for the ray fit");
  std::nth_element(betas.begin(), betas.begin() + static_cast<std::ptrdiff_t>(betas.size() / 2), betas.end());
  return betas[betas.size() / 2];
}

}  // namespace fblab
