#include "fblab/concavity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "fblab/error.hpp"

namespace fblab {

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Concave: return "Concave";
    case Verdict::NotConcave: return "NotConcave";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

ScalarField power_transform(const ScalarField& P, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::PreconditionViolated, "alpha must lie in [0, 1]");
  ScalarField out(P.grid(), 0.0, 0.0);
  const double outside = alpha == 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t k = 0; k < out.values().size(); ++k) {
    const double p = P[k];
    if (!(p > P.support_threshold())) {
      out[k] = outside;
    } else if (alpha == 0.0) {
      out[k] = std::log(p);
    } else if (alpha == 1.0) {
      out[k] = p;
    } else {
      out[k] = std::pow(p, alpha);
    }
  }
  if (alpha > 0.0) out.set_support_threshold(std::pow(P.support_threshold(), alpha));
  return out;
}

double reduced_lambda1(const ScalarField& P, double alpha, Index2 c) {
  const Grid& g = P.grid();
  const double h = g.h();
  SymMatrix2 H = hessian_unchecked(P, c);
  const double p = P(c.i, c.j);
  const double px = (P(c.i + 1, c.j) - P(c.i - 1, c.j)) / (2.0 * h);
  const double k = (1.0 - alpha) / p;
  H.a11 -= k * px * px;
  if (g.dim == 2) {
    const double py = (P(c.i, c.j + 1) - P(c.i, c.j - 1)) / (2.0 * h);
    H.a12 -= k * px * py;
    H.a22 -= k * py * py;
  }
  return H.largest_eigenvalue();
}

double direct_lambda1(const ScalarField& transformed, Index2 c) {
  return hessian_unchecked(transformed, c).largest_eigenvalue();
}

ConcavityReport assess(const ScalarField& P, double alpha, int pair_samples, const ConcavityOptions& opts) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::PreconditionViolated, "alpha must lie in [0, 1]");
  if (pair_samples < 0) fail(ErrorCode::PreconditionViolated, "pair_samples must be non-negative");
  const Grid& g = P.grid();
  const Mask mask = support_mask(P, std::max(opts.erode, 1));
  if (count(mask) == 0) fail(ErrorCode::EmptySupport, "eroded support is empty");

  ConcavityReport rep;
  rep.alpha = alpha;
  double gmax = 0.0;
  const auto grad = gradient(P);
  for (std::size_t k = 0; k < g.size(); ++k) {
    double s = 0.0;
    for (const auto& d : grad) s += d[k] * d[k];
    gmax = std::max(gmax, std::sqrt(s));
  }
  const double pmax = P.max();
  rep.tol_used = std::max(opts.c_tol * g.h() * gmax, 1e-12 * std::max(pmax, 0.0));

  rep.lambda1_max = -std::numeric_limits<double>::infinity();
  const double pfloor = opts.min_relative_P * pmax;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (!mask[g.index(i, j)] || P(i, j) < pfloor) continue;
      const double l = reduced_lambda1(P, alpha, {i, j});
      if (l > rep.lambda1_max) {
        rep.lambda1_max = l;
        rep.argmax = {i, j};
      }
    }
  if (!std::isfinite(rep.lambda1_max)) fail(ErrorCode::EmptySupport, "no cell passed the pressure floor");

  // Midpoint detector on node pairs of equal parity, so the midpoint is a node.
  std::array<std::vector<Index2>, 4> cls;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (mask[g.index(i, j)]) cls[static_cast<std::size_t>((i & 1) + 2 * (j & 1))].push_back({i, j});
  std::vector<Index2> all;
  for (const auto& c : cls) all.insert(all.end(), c.begin(), c.end());
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick_all(0, all.size() - 1);
  auto F = [&](double p) { return alpha == 0.0 ? std::log(p) : (alpha == 1.0 ? p : std::pow(p, alpha)); };
  auto dF = [&](double p) { return alpha == 0.0 ? 1.0 / p : alpha * std::pow(p, alpha - 1.0); };
  const long max_draws = 20L * pair_samples;
  for (long draw = 0; draw < max_draws && rep.midpoint_pairs < pair_samples; ++draw) {
    const Index2 a = all[pick_all(rng)];
    const auto& same = cls[static_cast<std::size_t>((a.i & 1) + 2 * (a.j & 1))];
    std::uniform_int_distribution<std::size_t> pick(0, same.size() - 1);
    const Index2 b = same[pick(rng)];
    if (a == b) continue;
    const Index2 m{(a.i + b.i) / 2, (a.j + b.j) / 2};
    if (!mask[g.index(m.i, m.j)]) continue;
    ++rep.midpoint_pairs;
    const double pm = P(m.i, m.j);
    const double excess = 0.5 * (F(P(a.i, a.j)) + F(P(b.i, b.j))) - F(pm);
    const double d2 = std::pow(g.x(a.i) - g.x(b.i), 2) + std::pow(g.y(a.j) - g.y(b.j), 2);
    const double tol_mid = dF(pm) * rep.tol_used * d2 / 8.0;
    const double ratio = excess / tol_mid;
    rep.midpoint_worst_ratio = std::max(rep.midpoint_worst_ratio, ratio);
    if (ratio > 1.0) ++rep.midpoint_violations;
  }

  if (rep.lambda1_max <= rep.tol_used && rep.midpoint_violations == 0)
    rep.verdict = Verdict::Concave;
  else if (rep.lambda1_max > 3.0 * rep.tol_used || rep.midpoint_violations > 0)
    rep.verdict = Verdict::NotConcave;
  else
    rep.verdict = Verdict::Inconclusive;
  return rep;
}

double sharp_index(const ScalarField& P, double lo, double hi, int iters, int pair_samples,
                   const ConcavityOptions& opts) {
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) fail(ErrorCode::PreconditionViolated, "need 0 <= lo < hi <= 1");
  if (iters < 1) fail(ErrorCode::PreconditionViolated, "need at least one bisection step");
  if (assess(P, lo, pair_samples, opts).verdict != Verdict::Concave)
    fail(ErrorCode::NotConcaveAtLo, "field is not concave at the lower end of the bracket");
  if (assess(P, hi, pair_samples, opts).verdict == Verdict::Concave) return hi;
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (assess(P, mid, pair_samples, opts).verdict == Verdict::Concave)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace fblab
