#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fourend/approx.hpp"

using namespace fourend;

namespace {
const double kC0 = std::sqrt(2.0) / 12;
const DoubleWellPotential& quartic() {
  static const auto p = DoubleWellPotential::standard_quartic();
  return p;
}
const HeteroclinicProfile& profile() {
  static const auto prof = solve_heteroclinic(quartic(), 30.0, 0.01);
  return prof;
}
UStar u_bar(double eps, double x_max = 150.0) {
  return build_u_star(toda_closed_form(eps, kC0, std::sqrt(2.0)), profile(), x_max);
}
}  // namespace

TEST(EvenSamples, InterpolatesEvenCubic) {
  EvenSamples s;
  for (int i = 0; i <= 40; ++i) {
    s.xs.push_back(0.25 * i);
    s.v.push_back(1 + 0.5 * s.xs.back() * s.xs.back());
  }
  for (double x = -9.9; x < 9.9; x += 0.31) EXPECT_NEAR(s(x), 1 + 0.5 * x * x, 1e-12);
  EXPECT_THROW(s(10.5), CoverageError);
  s.hold_ends = true;
  EXPECT_EQ(s(12.0), s.v.back());
}

TEST(Partition, SumsToOne) {
  const auto c = make_halfline_config(std::atan(0.2), 20.0, 3.0);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-80, 80);
  for (int k = 0; k < 100000; ++k) {
    const auto w = partition_of_unity(c, {u(rng), u(rng)});
    double s = 0;
    for (double x : w) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
      s += x;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Partition, InnerDiskAndFarField) {
  const auto c = make_halfline_config(std::atan(0.2), 20.0);
  EXPECT_EQ(partition_of_unity(c, {3.0, 4.0})[0], 1.0);
  const auto w = partition_of_unity(c, {60.0, 12.0});  // on lambda_1
  EXPECT_EQ(w[1], 1.0);
}

TEST(ULambda, Values) {
  const auto c = make_halfline_config(std::atan(0.2), 20.0);
  const auto u = build_u_lambda(c, profile());
  EXPECT_EQ(u(0.0, 0.0), 0.0);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> r(-100, 100);
  for (int k = 0; k < 20000; ++k) EXPECT_LE(std::abs(u(r(rng), r(rng))), 1.0);
  // Along the positive x axis between the lines the field sits near +1 far out.
  EXPECT_NEAR(u(80.0, 0.0), 1.0, 1e-6);
  EXPECT_NEAR(u(0.0, 80.0), -1.0, 1e-6);
  // Zero on the half-line itself, far from the others.
  EXPECT_NEAR(u(80.0, 16.0), 0.0, 1e-12);
}

TEST(Weight, AtLeastOneAwayFromOrigin) {
  const auto c = make_halfline_config(std::atan(0.2), 20.0);
  const WeightParams wp{0.1, 0.5};
  EXPECT_TRUE(wp.admissible(std::sqrt(2.0), std::atan(0.2)));
  EXPECT_FALSE((WeightParams{1.5, 0.5}).admissible(std::sqrt(2.0), std::atan(0.2)));
  EXPECT_EQ(weight_function(wp, c, {1.0, 1.0}), 1.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> r(-100, 100);
  for (int k = 0; k < 20000; ++k) EXPECT_GE(weight_function(wp, c, {r(rng), r(rng)}), 1.0 - 1e-12);
}

TEST(UStar, ValuesAndSymmetry) {
  const auto u = u_bar(0.2);
  EXPECT_NEAR(u(0.0, -40.0), -1.0, 1e-12);
  EXPECT_NEAR(u(0.0, 40.0), -1.0, 1e-12);
  const double q = toda_closed_form(0.2, kC0, std::sqrt(2.0)).q1(0.0);
  EXPECT_NEAR(u(0.0, 0.0), 2 * std::tanh(-q / std::sqrt(2.0)) - 1, 1e-10);
  EXPECT_NEAR(u(0.0, q), std::tanh(-2 * q / std::sqrt(2.0)) - 1, 1e-10);
  EXPECT_NEAR(u(100.0, 0.0), 1.0, 1e-12);
  for (double x = 0.5; x < 120; x += 7.3)
    for (double y = -30; y < 30; y += 2.9) {
      EXPECT_NEAR(u(-x, y), u(x, y), 1e-13);
      EXPECT_NEAR(u(x, -y), u(x, y), 1e-13);
      EXPECT_LE(std::abs(u(x, y)), 1.0 + 1e-12);
    }
}

TEST(UStar, ShiftMovesTheInterface) {
  const auto base = u_bar(0.2);
  EvenSamples m;
  for (int i = 0; i <= 400; ++i) {
    m.xs.push_back(0.5 * i);
    m.v.push_back(0.3);
  }
  const auto shifted = build_u_star(base.chart, profile(), m);
  const double q = base.chart.graph.eval(0.0).f;
  EXPECT_NEAR(shifted.H1(0.0, q + 0.3), 0.0, 1e-12);
  EXPECT_NEAR(base.H1(0.0, q), 0.0, 1e-12);
}

TEST(Residual, ConstantStateIsExactSolution) {
  auto u = ScalarField2D::quarter(10.0, 10.0, 0.1);
  for (auto& v : u.v) v = 1.0;
  const auto E = residual(u, quartic());
  int finite = 0;
  for (double e : E.v)
    if (std::isfinite(e)) {
      EXPECT_EQ(e, 0.0);
      ++finite;
    }
  EXPECT_GT(finite, 0);
  EXPECT_TRUE(std::isnan(E(0, 0)));
  EXPECT_TRUE(std::isfinite(E(u.nx - 2, u.ny - 1)));
}

TEST(Residual, PlanarHeteroclinicConverges) {
  std::array<double, 2> err2{}, err4{};
  int k = 0;
  for (double h : {0.1, 0.05}) {
    auto u = ScalarField2D::quarter(6.0, 20.0, h);
    // Even pair of planar layers at y = +-10.
    fill_field(u, [](double, double y) { return std::tanh((y + 10) / std::sqrt(2.0)) - std::tanh((y - 10) / std::sqrt(2.0)) - 1; });
    err2[k] = residual(u, quartic(), 2).sup_abs();
    err4[k] = residual(u, quartic(), 4).sup_abs();
    ++k;
  }
  EXPECT_NEAR(err2[0] / err2[1], 4.0, 0.2);
  EXPECT_NEAR(err4[0] / err4[1], 16.0, 1.0);
  EXPECT_LE(err4[1], 1e-5);
}

TEST(Residual, CoarseGridRejected) {
  auto u = ScalarField2D::quarter(10.0, 10.0, 0.4);
  EXPECT_THROW(residual(u, quartic()), ResolutionError);
}

TEST(Projection, SlabProfileHasNoPerpendicularPart) {
  const auto t = toda_closed_form(0.2, kC0, std::sqrt(2.0));
  const auto g = toda_graph(t, 120.0);
  const auto c1 = make_chart(g, std::vector<double>(g.xs.size(), 2.0));
  const auto c2 = make_chart(mirrored(g), std::vector<double>(g.xs.size(), 2.0));
  auto amp = [](double x1) { return 0.3 + 0.1 * std::cos(0.05 * x1); };
  FieldFn E = [&](double x, double y) {
    const auto c = try_fermi_inverse(c1, x, y);
    if (!c || std::abs(c->y1) >= 1.5) return 0.0;
    return amp(c->x1) * slab_weight(c->y1, 2.0) * profile().deriv(c->y1);
  };
  std::vector<double> xs;
  for (int i = 0; i <= 200; ++i) xs.push_back(0.5 * i);
  const auto P = project_error(E, c1, c2, {}, profile(), xs);
  for (std::size_t i = 0; i < xs.size(); i += 10) {
    EXPECT_NEAR(P.coef[0][i], amp(xs[i]), 1e-12);
    EXPECT_NEAR(P.coef[1][i], 0.0, 1e-12);
  }
  double m = 0;
  for (double x1 = -90; x1 < 90; x1 += 1.3)
    for (double y1 = -1.4; y1 < 1.4; y1 += 0.1) {
      const Point p = fermi_forward(c1, x1, y1);
      m = std::max(m, std::abs(P.perp(p.x, p.y)));
    }
  EXPECT_LE(m, 1e-7);
}

TEST(Projection, Idempotent) {
  const auto g = toda_graph(toda_closed_form(0.2, kC0, std::sqrt(2.0)), 120.0);
  const auto c1 = make_chart(g, std::vector<double>(g.xs.size(), 2.0));
  const auto c2 = make_chart(mirrored(g), std::vector<double>(g.xs.size(), 2.0));
  FieldFn E = [](double x, double y) { return std::exp(-0.01 * x * x) * std::sin(y) / (1 + y * y); };
  std::vector<double> xs;
  for (int i = 0; i <= 100; ++i) xs.push_back(0.5 * i);
  const auto P = project_error(E, c1, c2, {}, profile(), xs);
  const auto Q = project_error([&P](double x, double y) { return P.parallel(x, y); }, c1, c2, {}, profile(), xs);
  for (double x = -40; x < 40; x += 3.1)
    for (double y = -12; y < 12; y += 0.7) EXPECT_NEAR(Q.parallel(x, y), P.parallel(x, y), 1e-10);
}
