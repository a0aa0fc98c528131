#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fblab/error.hpp"
#include "fblab/pme.hpp"

using namespace fblab;

namespace {

// Source-type solution of u_t = (u^2)_xx: t^{-1/3} (1 - x^2 t^{-2/3} / 12)_+.
double barenblatt(double x, double t) {
  const double v = 1.0 - x * x * std::pow(t, -2.0 / 3.0) / 12.0;
  return v > 0.0 ? std::pow(t, -1.0 / 3.0) * v : 0.0;
}

double barenblatt_l1(int per_unit) {
  const Grid g = Grid::make(1, 5.0, 10 * per_unit);
  const auto u0 = ScalarField::sample(g, [](double x, double) { return barenblatt(x, 1.0); });
  SimulateOptions opts;
  opts.t0 = 1.0;
  opts.store_density = true;
  const auto tr = simulate(u0, 2.0, ReactionTerm::constant(0.0), 2.0, 0.9, 1.0, opts);
  const Snapshot& s = tr.snapshots.back();
  double e = 0.0;
  for (int i = 0; i < g.nx(); ++i) e += std::abs(s.u(i) - barenblatt(g.x(i), s.t));
  return e * g.h();
}

PmeState state_of(ScalarField u, double m) { return PmeState{std::move(u), m, 0.0}; }

}  // namespace

TEST(Pressure, FormulaAndVacuum) {
  const Grid g = Grid::make(1, 1.0, 8);
  EXPECT_EQ(pressure_of(state_of(ScalarField(g, 0.0), 2.0)).max(), 0.0);
  EXPECT_DOUBLE_EQ(pressure_of(state_of(ScalarField(g, 0.5), 2.0))(3), 1.0);
  EXPECT_DOUBLE_EQ(pressure_of(state_of(ScalarField(g, 1.0), 3.0))(3), 1.5);
}

TEST(Pressure, DensityRoundTrip) {
  const Grid g = Grid::make(2, 1.0, 16);
  const auto P = ScalarField::sample(g, [](double x, double y) { return std::max(0.0, 0.5 - x * x - y * y); });
  for (double m : {1.5, 2.0, 4.0}) {
    const auto back = pressure_of(state_of(density_from_pressure(P, m), m));
    for (std::size_t n = 0; n < P.values().size(); ++n) EXPECT_NEAR(back[n], P[n], 1e-14);
  }
}

TEST(StableDt, FormulaCases) {
  const Grid g = Grid::make(2, 1.0, 20);  // h = 0.1
  const auto G = ReactionTerm::constant(1.0);
  EXPECT_NEAR(stable_dt(state_of(ScalarField(g, 0.0), 2.0), G, 0.5), 0.5, 1e-12);
  const auto zero = ReactionTerm::constant(0.0);
  const double a = stable_dt(state_of(ScalarField(g, 1.0), 2.0), zero, 0.5);
  const double b = stable_dt(state_of(ScalarField(g, 2.0), 2.0), zero, 0.5);
  EXPECT_NEAR(a / b, 2.0, 1e-12);
  EXPECT_NEAR(stable_dt(state_of(ScalarField(g, 1.0), 2.0), G, 1.0) /
                  stable_dt(state_of(ScalarField(g, 1.0), 2.0), G, 0.5),
              2.0, 1e-12);
  EXPECT_THROW(stable_dt(state_of(ScalarField(g, 1.0), 2.0), G, 1.5), Error);
}

TEST(Step, VacuumIsFixed) {
  const Grid g = Grid::make(2, 1.0, 16);
  const auto next = step(state_of(ScalarField(g, 0.0), 2.0), ReactionTerm::tumor(1.0), 0.1);
  EXPECT_EQ(next.u.max(), 0.0);
  EXPECT_EQ(next.u.min(), 0.0);
}

TEST(Step, PlateauFollowsScalarOde) {
  const Grid g = Grid::make(1, 1.0, 64);
  const double ustar = 0.3, m = 2.0;
  const auto u = ScalarField::sample(g, [&](double x, double) { return std::abs(x) < 0.5 ? ustar : 0.0; });
  const auto G = ReactionTerm::tumor(1.0);
  const double dt = stable_dt(state_of(u, m), G, 0.5);
  const auto next = step(state_of(u, m), G, dt);
  const double P = m / (m - 1) * ustar;
  EXPECT_NEAR(next.u(g.centre()), ustar * (1 + dt * (1.0 - P)), 1e-15);
}

TEST(Step, FrameContactThrows) {
  const Grid g = Grid::make(1, 1.0, 16);
  const auto u = ScalarField::sample(g, [](double x, double) { return std::abs(x) < 0.95 ? 1.0 : 0.0; });
  try {
    (void)step(state_of(u, 2.0), ReactionTerm::constant(0.0), 1e-3);
    FAIL() << "expected SupportHitBoundary";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SupportHitBoundary);
  }
}

TEST(Simulate, SnapshotsAtRequestedTimes) {
  const Grid g = Grid::make(1, 3.0, 96);
  const auto u0 = ScalarField::sample(g, [](double x, double) { return std::max(0.0, 1 - x * x); });
  const auto tr = simulate(u0, 2.0, ReactionTerm::tumor(1.0), 0.2, 0.9, 0.05);
  ASSERT_EQ(tr.snapshots.size(), 5u);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) EXPECT_NEAR(tr.snapshots[k].t, 0.05 * k, 1e-12);
}

TEST(Simulate, BarenblattConverges) {
  const double coarse = barenblatt_l1(32);
  const double fine = barenblatt_l1(64);
  EXPECT_LE(fine, 2e-3);
  EXPECT_GE(coarse / fine, 2.0);
}

TEST(PmeProperty, MassConservedWithoutReaction) {
  const Grid g = Grid::make(2, 1.5, 48);
  const auto u0 = ScalarField::sample(g, [](double x, double y) { return std::max(0.0, 0.5 - x * x - 2 * y * y); });
  SimulateOptions opts;
  opts.store_density = true;
  const auto tr = simulate(u0, 2.0, ReactionTerm::constant(0.0), 0.1, 0.9, 0.02, opts);
  const double m0 = integral(u0);
  for (const auto& s : tr.snapshots) EXPECT_LE(std::abs(integral(s.u) - m0), 1e-10 * m0);
}

TEST(PmeProperty, ComparisonPrinciple) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Grid g = Grid::make(1, 2.0, 80);
  const auto G = ReactionTerm::tumor(1.0);
  for (int pair = 0; pair < 3; ++pair) {
    ScalarField a(g, 0.0), b(g, 0.0);
    for (int i = 0; i < g.nx(); ++i) {
      if (std::abs(g.x(i)) > 0.8) continue;
      a(i) = 0.4 * u(rng);
      b(i) = a(i) + 0.3 * u(rng);
    }
    SimulateOptions opts;
    opts.store_density = true;
    const auto ta = simulate(a, 2.0, G, 0.2, 0.9, 0.05, opts);
    const auto tb = simulate(b, 2.0, G, 0.2, 0.9, 0.05, opts);
    ASSERT_EQ(ta.snapshots.size(), tb.snapshots.size());
    for (std::size_t k = 0; k < ta.snapshots.size(); ++k)
      for (std::size_t n = 0; n < g.size(); ++n)
        EXPECT_LE(ta.snapshots[k].u[n], tb.snapshots[k].u[n] + 1e-8);
  }
}

TEST(PmeProperty, PositivityAndClipping) {
  const Grid g = Grid::make(2, 2.0, 64);
  const auto u0 = ScalarField::sample(g, [](double x, double y) { return x * x + y * y < 0.5 ? 1.0 : 0.0; });
  SimulateOptions opts;
  opts.store_density = true;
  const auto tr = simulate(u0, 3.0, ReactionTerm::tumor(1.0), 0.1, 0.9, 0.02, opts);
  for (const auto& s : tr.snapshots) EXPECT_GE(s.u.min(), 0.0);
  EXPECT_LE(tr.max_clip_ratio, 1e-12);
}

TEST(PmeProperty, SupportGrowsAtMostOneCellPerStep) {
  const Grid g = Grid::make(1, 2.0, 128);
  PmeState st = state_of(ScalarField::sample(g, [](double x, double) { return std::max(0.0, 0.25 - x * x); }), 2.0);
  const auto G = ReactionTerm::tumor(1.0);
  auto edges = [&](const ScalarField& u) {
    int lo = g.nx(), hi = -1;
    for (int i = 0; i < g.nx(); ++i)
      if (u(i) > 0.0) lo = std::min(lo, i), hi = std::max(hi, i);
    return std::pair{lo, hi};
  };
  for (int k = 0; k < 200; ++k) {
    const auto [lo, hi] = edges(st.u);
    st = step(st, G, stable_dt(st, G, 0.9));
    const auto [lo2, hi2] = edges(st.u);
    EXPECT_GE(lo2, lo - 1);
    EXPECT_LE(hi2, hi + 1);
  }
}

TEST(PmeProperty, RadialDataStaysSymmetric) {
  const Grid g = Grid::make(2, 1.6, 64);
  const auto P0 = ScalarField::sample(g, [](double x, double y) { return std::max(0.0, 1 - x * x - y * y); });
  const auto tr = simulate(density_from_pressure(P0, 2.0), 2.0, ReactionTerm::tumor(1.0), 0.1, 0.9, 0.05);
  const int n = g.nx() - 1;
  for (const auto& s : tr.snapshots) {
    double asym = 0.0;
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        asym = std::max({asym, std::abs(s.P(i, j) - s.P(n - i, j)), std::abs(s.P(i, j) - s.P(j, i))});
    EXPECT_LE(asym, 1e-12 * s.P.max());
  }
}
