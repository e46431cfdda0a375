#include <gtest/gtest.h>

#include <cmath>

#include "fourend/toda.hpp"

using namespace fourend;

namespace {
const double kC0 = std::sqrt(2.0) / 24;
const double kA0 = std::sqrt(2.0);

// c0 q'' + 2 exp(2 alpha0 q) by a fourth-order finite difference.
double ode_residual(const TodaSolution& t, double x, double d) {
  const double q2 = (-t.q1(x + 2 * d) + 16 * t.q1(x + d) - 30 * t.q1(x) + 16 * t.q1(x - d) - t.q1(x - 2 * d)) / (12 * d * d);
  return t.c0 * q2 + 2 * std::exp(2 * t.alpha0 * t.q1(x));
}
}  // namespace

TEST(Toda, ClosedFormCenterValue) {
  const auto t = toda_closed_form(0.1, kC0, kA0);
  EXPECT_NEAR(t.q1(0.0), std::log(0.01 / 24) / (2 * std::sqrt(2.0)), 1e-14);
  EXPECT_NEAR(t.q1(0.0), -2.7518, 1e-4);
}

TEST(Toda, ClosedFormSolvesOde) {
  for (double eps : {0.1, 0.2, 1.0}) {
    const auto t = toda_closed_form(eps, kC0, kA0);
    for (double x = -20 / eps; x <= 20 / eps; x += 0.37 / eps)
      EXPECT_LE(std::abs(ode_residual(t, x, 1e-2 / eps)), 1e-9) << eps << ' ' << x;
    for (double x = 0; x <= 40 / eps; x += 1.3 / eps)
      EXPECT_NEAR(t.c0 * t.q1pp(x), -2 * std::exp(2 * kA0 * t.q1(x)), 1e-14);
  }
}

TEST(Toda, SymmetryAndOrdering) {
  const auto t = toda_closed_form(0.2, kC0, kA0);
  for (double x = 0; x <= 100; x += 0.5) {
    EXPECT_EQ(t.q1(x), t.q1(-x));
    EXPECT_LT(t.q1(x), 0.0);
    EXPECT_GT(t.q2(x), 0.0);
    EXPECT_EQ(t.q2(x), -t.q1(x));
    if (x > 0) {
      EXPECT_LT(t.q1(x), t.q1(x - 0.5));
    }
  }
}

TEST(Toda, FirstIntegralConstant) {
  const auto t = toda_closed_form(0.3, kC0, kA0);
  for (double x = 0; x <= 50; x += 0.7)
    EXPECT_NEAR(t.first_integral(t.q1(x), t.q1p(x)), kC0 * 0.09 / 2, 1e-15);
}

TEST(Toda, FarSlope) {
  for (double eps : {0.05, 0.1, 0.5}) {
    const auto t = toda_closed_form(eps, kC0, kA0);
    const double x = 50 / eps, d = 1e-3 / eps;
    EXPECT_NEAR((t.q1(x + d) - t.q1(x - d)) / (2 * d), -eps, 1e-6);
  }
}

TEST(Toda, DomainErrors) {
  EXPECT_THROW(toda_closed_form(0.0, kC0, kA0), DomainError);
  EXPECT_THROW(toda_closed_form(0.1, -1.0, kA0), DomainError);
  EXPECT_THROW(toda_closed_form(0.1, kC0, 0.0), DomainError);
  EXPECT_THROW(rescale_toda(toda_closed_form(1.0, kC0, kA0), -0.1), DomainError);
  EXPECT_THROW(rescale_toda(toda_closed_form(0.5, kC0, kA0), 0.1), DomainError);
}

TEST(Toda, IntegratorCrossCheck) {
  const auto t = integrate_toda(0.1, kC0, kA0, 300.0, 0.01);
  ASSERT_TRUE(t.samples);
  double m = 0;
  for (std::size_t i = 0; i < t.samples->x.size(); ++i) m = std::max(m, std::abs(t.samples->q1[i] - t.q1(t.samples->x[i])));
  EXPECT_LE(m, 1e-6);
  EXPECT_LE(toda_first_integral_drift(t), 1e-8);
  EXPECT_DOUBLE_EQ(t.samples->q1[0], std::log(kC0 * kA0 * 0.01 / 2) / (2 * kA0));
}

TEST(Toda, IntegratorInitialEcho) {
  const auto t = integrate_toda(1.0, kC0, kA0, 30.0, 0.001);
  EXPECT_EQ(t.samples->q1[0], std::log(kC0 * kA0 / 2) / (2 * kA0));
}

TEST(Toda, CoarseStepIsAccuracyError) { EXPECT_THROW(integrate_toda(2.0, kC0, kA0, 30.0, 0.5), AccuracyError); }

TEST(Toda, RescalingIdentity) {
  const auto base = toda_closed_form(1.0, kC0, kA0);
  const auto same = rescale_toda(base, 1.0);
  EXPECT_EQ(same.a, base.a);
  for (double eps : {0.1, 0.2, 0.37}) {
    const auto r = rescale_toda(base, eps);
    const auto c = toda_closed_form(eps, kC0, kA0);
    for (double x = -200; x <= 200; x += 0.9) {
      EXPECT_NEAR(r.q1(x), c.q1(x), 1e-12);
      EXPECT_NEAR(r.q1(x), base.q1(eps * x) - std::log(1 / eps) / kA0, 1e-12);
    }
  }
  const auto r = rescale_toda(base, 0.2);
  for (double x = -40; x <= 40; x += 1.1) EXPECT_LE(std::abs(ode_residual(r, x, 0.05)), 1e-9);
}

TEST(Toda, RescalingCarriesSamples) {
  const auto base = integrate_toda(1.0, kC0, kA0, 20.0, 0.001);
  const auto r = rescale_toda(base, 0.25);
  ASSERT_TRUE(r.samples);
  const auto c = toda_closed_form(0.25, kC0, kA0);
  for (std::size_t i = 0; i < r.samples->x.size(); i += 97) EXPECT_NEAR(r.samples->q1[i], c.q1(r.samples->x[i]), 1e-8);
}

TEST(Toda, Asymptote) {
  const auto t = toda_closed_form(0.1, kC0, kA0);
  const auto as = asymptote(t);
  EXPECT_NEAR(as.slope, -0.1, 1e-6);
  EXPECT_NEAR(as.intercept, -t.a - std::log(2.0) / kA0, 1e-6);
  EXPECT_NEAR(asymptote(toda_closed_form(1.0, kC0, kA0)).slope, -1.0, 1e-6);
  EXPECT_THROW(asymptote(t, 200, 240), RangeError);
}

TEST(Toda, GapGrowsAsEpsDecreases) {
  double prev = 0;
  for (double eps : {0.5, 0.3, 0.2, 0.1, 0.05}) {
    const double gap = 2 * std::abs(toda_closed_form(eps, kC0, kA0).q1(0));
    EXPECT_GT(gap, prev);
    prev = gap;
  }
}

TEST(Toda, ScatteringRecord) {
  const auto j = scattering_record(toda_closed_form(0.1, kC0, kA0));
  EXPECT_NEAR(j["slope"].get<double>(), -0.1, 1e-6);
  EXPECT_EQ(j["eps"].get<double>(), 0.1);
}
