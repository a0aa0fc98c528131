#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fblab/counterexamples.hpp"
#include "fblab/error.hpp"

using namespace fblab;

namespace {

CexParams params(double alpha, double a_or_b, double c) {
  CexParams p;
  p.alpha = alpha;
  p.m = 2.0;
  p.kase = alpha == 1.0 ? CexCase::AlphaOne : alpha < 0.5 ? CexCase::LowAlpha : CexCase::MidAlpha;
  (p.kase == CexCase::MidAlpha ? p.b : p.a) = a_or_b;
  p.c = c;
  p.rho = 0.05;
  return p;
}

// Written out by hand, independently of the monomial table.
double w_closed_form(const CexParams& p, double x, double y) {
  const double x2 = x * x, y2 = y * y;
  if (p.kase == CexCase::MidAlpha) {
    const double s = std::sqrt(1.5 - p.alpha), b = p.b;
    return p.c + p.alpha * s / (b * (1 - p.alpha)) * x - x2 * x2 / (12 * b * b) - b * b * y2 + b * s * x * y2 - x2 * y2;
  }
  if (p.alpha == 0.0) return p.c + p.a * x - x2 * x2 + x * y2 - y2 - 2 * x2 * y2;
  return p.c + x - x2 * x2 + p.a * x * y2 - y2 - 2 * p.a * p.a * x2 * y2;
}

}  // namespace

TEST(Profiles, OriginJets) {
  const auto one = params(0.25, 3.0, 0.7);
  const auto poly = w_monomials(one);
  EXPECT_DOUBLE_EQ(eval_poly(poly, 0, 0), 0.7);
  EXPECT_DOUBLE_EQ(eval_poly(poly, 0, 0, 1, 0), 1.0);
  EXPECT_DOUBLE_EQ(eval_poly(poly, 0, 0, 0, 2), -2.0);
  EXPECT_DOUBLE_EQ(eval_poly(poly, 0, 0, 2, 0), 0.0);

  const auto mid = params(0.75, 4.0, 1.0);
  const auto q = w_monomials(mid);
  EXPECT_NEAR(eval_poly(q, 0, 0, 1, 0), 0.75 * std::sqrt(0.75) / (4.0 * 0.25), 1e-15);
  EXPECT_DOUBLE_EQ(eval_poly(q, 0, 0, 0, 2), -32.0);
  EXPECT_DOUBLE_EQ(eval_poly(q, 0, 0, 2, 0), 0.0);
}

TEST(Profiles, BuildWMatchesClosedForm) {
  std::mt19937_64 rng(17);
  const Grid g = Grid::make(2, 0.6, 64);
  for (const auto& p : {params(0.25, 3.0, 0.2), params(0.0, 4.0, 0.1), params(1.0, 5.0, 0.04), params(0.75, 6.0, 1.0)}) {
    const auto w = build_w(p, g);
    std::uniform_int_distribution<int> pick(0, g.nx() - 1);
    for (int k = 0; k < 1000; ++k) {
      const int i = pick(rng), j = pick(rng);
      const double exact = w_closed_form(p, g.x(i), g.y(j));
      EXPECT_NEAR(w(i, j), exact, 1e-14 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST(OriginDerivative, AlphaOneConstantGrowth) {
  // Independent symbolic assembly for a = 10, c = 1e-4, m = 2, N = 2.
  EXPECT_NEAR(dt_w11_origin(params(1.0, 10.0, 1e-4), ReactionTerm::constant(1.0)), 39.9176, 1e-4);
}

TEST(OriginDerivative, MidAlphaTermFreeOfB) {
  // r (N - 1)(2 alpha - 1)/(1 - alpha) = 2 at alpha = 3/4, r = 1, N = 2; the rest decays in b.
  const auto G = ReactionTerm::constant(1.0);
  EXPECT_NEAR(dt_w11_origin(params(0.75, 1e4, 1.0), G), 2.0, 1e-6);
  EXPECT_NEAR(dt_w11_origin(params(0.75, 1e3, 1.0), G), 2.0, 1e-5);
}

TEST(OriginDerivative, SmallAIsPositive) {
  EXPECT_GT(dt_w11_origin(params(0.25, 1e-3, 0.5), ReactionTerm::constant(1.0)), 0.0);
}

TEST(OriginDerivative, MatchesFiniteDifferenceOfTimeDerivative) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto G = ReactionTerm::tumor(4.0);
  const double h = 1e-3;
  for (double alpha : {0.0, 0.25, 0.75, 1.0})
    for (int draw = 0; draw < 5; ++draw) {
      const auto p = alpha == 0.75 ? params(alpha, 1 + 3 * u(rng), 0.5 + u(rng)) : params(alpha, 1 + 3 * u(rng), 0.3 + u(rng));
      auto wt = [&](double x) { return w_time_derivative(p, G, x, 0.0); };
      const double fd = (-wt(2 * h) + 16 * wt(h) - 30 * wt(0) + 16 * wt(-h) - wt(-2 * h)) / (12 * h * h);
      const double exact = dt_w11_origin(p, G);
      EXPECT_NEAR(fd, exact, 1e-4 * std::max(1.0, std::abs(exact))) << "alpha=" << alpha << " draw=" << draw;
    }
}

TEST(Params, ValidateCatchesMismatch) {
  auto p = params(0.25, 2.0, 0.25);
  p.kase = CexCase::MidAlpha;
  try {
    p.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParamsInconsistent);
  }
}

TEST(ChooseParams, RejectsHalf) {
  try {
    (void)choose_params(0.5, 2.0, ReactionTerm::tumor(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
  }
}

TEST(ChooseParams, ReferenceValuesForTumorGrowth) {
  const auto G = ReactionTerm::tumor(1.0);
  struct Row {
    double alpha, ab, c, rho;
  };
  for (const Row& r : {Row{0.25, 2, 0.25, 0.125}, Row{1.0, 4, 0.0625, 0.0625}, Row{0.75, 4, 1.0, 0.25},
                       Row{0.0, 4, 0.0625, 0.25}}) {
    const auto p = choose_params(r.alpha, 2.0, G);
    EXPECT_DOUBLE_EQ(p.a_or_b(), r.ab) << r.alpha;
    EXPECT_DOUBLE_EQ(p.c, r.c) << r.alpha;
    EXPECT_DOUBLE_EQ(p.rho, r.rho) << r.alpha;
    EXPECT_GT(dt_w11_origin(p, G), 0.0);
  }
}

TEST(ChooseParams, AlphaOneWithConstantGrowth) {
  const auto G = ReactionTerm::constant(1.0);
  const auto p = choose_params(1.0, 2.0, G);
  EXPECT_GT(dt_w11_origin(p, G), 0.0);
  EXPECT_LE(p.a, 1048576.0);
}

TEST(ChooseParams, DiscreteHessianNegativeDefiniteOnBall) {
  const auto G = ReactionTerm::tumor(1.0);
  for (double alpha : {0.0, 0.25, 0.75, 1.0}) {
    const auto p = choose_params(alpha, 2.0, G);
    const Grid g = Grid::make(2, p.rho * 1.1, 128);
    const auto w = build_w(p, g);
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const double r = std::hypot(g.x(i), g.y(j));
        if (r <= g.h() * 1.01 || r >= p.rho) continue;
        EXPECT_LT(hessian_unchecked(w, {i, j}).largest_eigenvalue(), -1e-8) << alpha << " " << i << "," << j;
      }
  }
}

TEST(Extension, CutoffShape) {
  const double rho = 0.2;
  EXPECT_EQ(cutoff(0.0, rho), 1.0);
  EXPECT_EQ(cutoff(0.1, rho), 1.0);
  EXPECT_EQ(cutoff(0.16, rho), 0.0);
  EXPECT_EQ(cutoff(0.5, rho), 0.0);
  double prev = 1.0;
  for (int k = 0; k <= 100; ++k) {
    const double v = cutoff(0.1 + 0.05 * k / 100, rho);
    EXPECT_LE(v, prev + 1e-15);
    prev = v;
  }
}

TEST(Extension, BlendRegions) {
  auto p = choose_params(0.25, 2.0, ReactionTerm::tumor(1.0));
  p.A_ext = 8.0;
  const auto poly = w_monomials(p);
  const double w1 = eval_poly(poly, 0, 0, 1, 0);
  for (double r : {0.1, 0.3, 0.45}) {
    const double x = r * p.rho * 0.6, y = r * p.rho * 0.8;
    const double q = std::pow(r, 12);
    EXPECT_NEAR(w_tilde(p, x, y), eval_poly(poly, x, y) - p.A_ext * q, 1e-14);
  }
  for (double r : {0.8, 1.0, 1.5}) {
    const double x = r * p.rho, y = 0.0;
    EXPECT_NEAR(w_tilde(p, x, y), p.c + w1 * x - p.A_ext * std::pow(r, 12), 1e-12);
  }
}

TEST(Extension, ConcaveAndPositiveAtCentre) {
  auto p = choose_params(0.75, 2.0, ReactionTerm::tumor(1.0));
  const Grid g = counterexample_grid(p, 128);
  const auto wt = extend_to_ball(build_w(p, g), p);
  EXPECT_GE(p.A_ext, 1.0);
  EXPECT_GT(wt(g.centre(), g.centre()), 0.0);
  const auto P0 = initial_pressure(wt, p.alpha);
  EXPECT_NEAR(P0(g.centre(), g.centre()), std::pow(p.c, 1 / p.alpha), 1e-12);
  EXPECT_EQ(P0(0, 0), 0.0);
}

TEST(Extension, LogCaseCutsTwentyBelowPeak) {
  const Grid g = Grid::make(2, 1.0, 16);
  const auto wt = ScalarField::sample(g, [](double x, double y) { return 1.0 - 30 * (x * x + y * y); });
  const auto P = initial_pressure(wt, 0.0);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (wt[n] > wt.max() - 20) {
      EXPECT_NEAR(P[n], std::exp(wt[n]), 1e-15 * std::exp(1.0));
    } else {
      EXPECT_EQ(P[n], 0.0);
    }
  }
}

TEST(Loss, AlphaOneConstantGrowth) {
  const auto G = ReactionTerm::constant(1.0);
  auto p = choose_params(1.0, 2.0, G);
  const auto v = run_counterexample(p, G, {}, 256);
  ASSERT_TRUE(v.first_positive_t.has_value());
  EXPECT_LE(*v.first_positive_t, 0.05);
}

TEST(Loss, VerdictAsymmetry) {
  const auto G = ReactionTerm::tumor(1.0);
  for (double alpha : {0.25, 1.0}) {
    auto p = choose_params(alpha, 2.0, G);
    const auto v = run_counterexample(p, G, {}, 512);
    ASSERT_FALSE(v.lambda1_series.empty());
    EXPECT_LE(v.lambda1_series.front().second, 3 * v.tol_series.front()) << alpha;
    ASSERT_TRUE(v.first_positive_t.has_value()) << alpha;
    EXPECT_GT(*v.first_positive_t, 0.0);
  }
}

TEST(Loss, ControlStaysSilent) {
  const Grid g = Grid::make(2, 1.25, 128);
  const auto P0 = ScalarField::sample(g, [](double x, double y) { return std::max(0.0, 1 - x * x - y * y); });
  const auto v = track_concavity_loss(P0, 0.5, 2.0, ReactionTerm::tumor(1.0), 0.25);
  EXPECT_FALSE(v.first_positive_t.has_value());
  for (std::size_t k = 0; k < v.lambda1_series.size(); ++k)
    EXPECT_LE(v.lambda1_series[k].second, 3 * v.tol_series[k]);
}
