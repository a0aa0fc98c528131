#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fblab/error.hpp"
#include "fblab/grid.hpp"

using namespace fblab;

TEST(Grid, MakeValidates) {
  EXPECT_THROW(Grid::make(3, 1.0, 64), Error);
  EXPECT_THROW(Grid::make(2, 0.0, 64), Error);
  EXPECT_THROW(Grid::make(2, 1.0, 4), Error);
  const Grid g = Grid::make(2, 1.0, 128);
  EXPECT_EQ(g.nx(), 129);
  EXPECT_DOUBLE_EQ(g.x(g.centre()), 0.0);
  EXPECT_DOUBLE_EQ(g.h(), 2.0 / 128);
}

TEST(Gradient, AffineIsExact) {
  const Grid g = Grid::make(2, 1.0, 32);
  const auto f = ScalarField::sample(g, [](double x, double y) { return 3 * x - 2 * y; });
  const auto d = gradient(f);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      EXPECT_NEAR(d[0](i, j), 3.0, 1e-12);
      EXPECT_NEAR(d[1](i, j), -2.0, 1e-12);
    }
}

TEST(Gradient, ConstantVanishes) {
  const Grid g = Grid::make(2, 1.0, 16);
  const auto d = gradient(ScalarField(g, 2.5));
  for (double v : d[0].values()) EXPECT_EQ(v, 0.0);
  for (double v : d[1].values()) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, CentralDifferenceExactOnQuadratic) {
  const Grid g = Grid::make(2, 1.0, 20);  // h = 0.1
  const auto f = ScalarField::sample(g, [](double x, double) { return x * x; });
  const int i = 15;  // x = 0.5
  ASSERT_NEAR(g.x(i), 0.5, 1e-15);
  EXPECT_NEAR(gradient(f)[0](i, 7), 1.0, 1e-14);
}

TEST(Laplacian, QuadraticAndAffine) {
  const Grid g = Grid::make(2, 1.0, 32);
  const auto q = laplacian(ScalarField::sample(g, [](double x, double y) { return x * x + y * y; }));
  const auto a = laplacian(ScalarField::sample(g, [](double x, double y) { return 1 + x - 4 * y; }));
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      EXPECT_NEAR(q(i, j), 4.0, 1e-11);
      EXPECT_NEAR(a(i, j), 0.0, 1e-11);
    }
}

TEST(Laplacian, SecondOrderOnSines) {
  const double pi = std::acos(-1.0);
  const Grid g = Grid::make(2, pi, 128);
  const auto f = ScalarField::sample(g, [](double x, double y) { return std::sin(x) * std::sin(y); });
  const auto L = laplacian(f);
  double worst = 0.0;
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) worst = std::max(worst, std::abs(L(i, j) + 2 * f(i, j)));
  EXPECT_LE(worst, g.h() * g.h());
}

TEST(Hessian, Quadratics) {
  const Grid g = Grid::make(2, 1.0, 16);
  const auto s = ScalarField::sample(g, [](double x, double y) { return x * x - y * y + 2.0; });
  const auto m = hessian_at(s, {8, 8});
  EXPECT_NEAR(m.a11, 2.0, 1e-12);
  EXPECT_NEAR(m.a22, -2.0, 1e-12);
  EXPECT_NEAR(m.a12, 0.0, 1e-12);
  const auto xy = ScalarField::sample(g, [](double x, double y) { return x * y + 1.0; });
  const auto n = hessian_at(xy, {5, 9});
  EXPECT_NEAR(n.a12, 1.0, 1e-12);
  EXPECT_NEAR(n.a11, 0.0, 1e-12);
  EXPECT_NEAR(n.a22, 0.0, 1e-12);
}

TEST(Hessian, OriginCellOfQuarticProfile) {
  // w = c + x - x^4 + a x y^2 - y^2 - 2 a^2 x^2 y^2 with a = 2.
  const Grid g = Grid::make(2, 0.5, 64);
  const double a = 2.0;
  const auto w = ScalarField::sample(g, [&](double x, double y) {
    return 1.0 + x - std::pow(x, 4) + a * x * y * y - y * y - 2 * a * a * x * x * y * y;
  });
  const auto m = hessian_unchecked(w, {g.centre(), g.centre()});
  const double h2 = g.h() * g.h();
  EXPECT_NEAR(m.a11, 0.0, 2 * h2);
  EXPECT_NEAR(m.a22, -2.0, 1e-12);
  EXPECT_NEAR(m.a12, 0.0, 1e-12);
}

TEST(Hessian, OutsideSupportThrows) {
  const Grid g = Grid::make(2, 1.0, 16);
  ScalarField f(g, 0.0);
  f(8, 8) = 1.0;
  EXPECT_THROW(hessian_at(f, {8, 8}), Error);
}

TEST(Hessian, EigenvaluesMatchCharacteristicRoots) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    const SymMatrix2 m{u(rng), u(rng), u(rng), 2};
    const double tr = m.a11 + m.a22, det = m.a11 * m.a22 - m.a12 * m.a12;
    const double disc = std::sqrt(tr * tr / 4 - det);
    EXPECT_NEAR(m.largest_eigenvalue(), tr / 2 + disc, 1e-12 * (1 + std::abs(tr)));
    EXPECT_NEAR(m.smallest_eigenvalue(), tr / 2 - disc, 1e-12 * (1 + std::abs(tr)));
  }
}

TEST(StencilProperty, RandomQuadraticsAreExact) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const Grid g = Grid::make(2, 1.0, 24);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng), e = u(rng), f0 = 50.0;
    const auto f = ScalarField::sample(g, [&](double x, double y) {
      return f0 + a * x * x + b * x * y + c * y * y + d * x + e * y;
    });
    const auto L = laplacian(f);
    const auto grad = gradient(f);
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const auto m = hessian_unchecked(f, {i, j});
        const double scale = 1e-12 * (1 + std::abs(a) + std::abs(b) + std::abs(c)) * f0;
        EXPECT_NEAR(m.a11, 2 * a, scale);
        EXPECT_NEAR(m.a12, b, scale);
        EXPECT_NEAR(m.a22, 2 * c, scale);
        EXPECT_NEAR(L(i, j), 2 * a + 2 * c, 2 * scale);
        EXPECT_NEAR(grad[0](i, j), 2 * a * g.x(i) + b * g.y(j) + d, scale);
      }
  }
}

TEST(SupportMask, ConstantZeroAndDisk) {
  const Grid g = Grid::make(2, 1.0, 32);
  EXPECT_EQ(count(support_mask(ScalarField(g, 1.0), 0)), g.size());
  EXPECT_EQ(count(support_mask(ScalarField(g, 0.0), 0)), 0u);

  const auto disk = ScalarField::sample(g, [](double x, double y) { return x * x + y * y < 0.25 ? 1.0 : 0.0; });
  const Mask m0 = support_mask(disk, 0);
  const Mask m1 = support_mask(disk, 1);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t n = g.index(i, j);
      if (!m1[n]) continue;
      EXPECT_LT(std::hypot(g.x(i), g.y(j)), 0.5);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) EXPECT_TRUE(m0[g.index(i + di, j + dj)]);
    }
  EXPECT_LT(count(m1), count(m0));
}

TEST(SupportMask, ErosionIsNested) {
  const Grid g = Grid::make(2, 1.0, 48);
  const auto f = ScalarField::sample(g, [](double x, double y) { return std::max(0.0, 0.7 - x * x - 2 * y * y); });
  Mask prev = support_mask(f, 0);
  for (int k = 1; k <= 6; ++k) {
    const Mask next = support_mask(f, k);
    for (std::size_t n = 0; n < next.size(); ++n)
      if (next[n]) {
        EXPECT_TRUE(prev[n]);
      }
    prev = next;
  }
}

TEST(FieldCsv, BitExactRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int dim : {1, 2}) {
    const Grid g = Grid::make(dim, 1.7, 16);
    ScalarField f(g, 0.0, 1e-9);
    for (double& v : f.values()) v = u(rng) * std::pow(10.0, 20 * u(rng));
    std::stringstream ss;
    write_field_csv(ss, f);
    const ScalarField back = read_field_csv(ss);
    EXPECT_EQ(back.grid(), g);
    EXPECT_EQ(back.support_threshold(), f.support_threshold());
    ASSERT_EQ(back.values().size(), f.values().size());
    for (std::size_t n = 0; n < f.values().size(); ++n) EXPECT_EQ(back[n], f[n]);
  }
}

TEST(FieldCsv, MalformedInputThrows) {
  std::stringstream ss("# dim,cells,extent,h,threshold\nnot,a,header\n");
  EXPECT_THROW(read_field_csv(ss), Error);
}

TEST(ScalarField, InterpolateIsExactOnBilinear) {
  const Grid g = Grid::make(2, 1.0, 10);
  const auto f = ScalarField::sample(g, [](double x, double y) { return 1 + 2 * x - y + 3 * x * y; });
  EXPECT_NEAR(f.interpolate(0.123, -0.456), 1 + 2 * 0.123 + 0.456 - 3 * 0.123 * 0.456, 1e-12);
}
