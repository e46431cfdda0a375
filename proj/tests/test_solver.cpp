#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>

#include "fourend/diagnostics.hpp"
#include "fourend/solver.hpp"

using namespace fourend;

namespace {
const DoubleWellPotential& quartic() {
  static const auto p = DoubleWellPotential::standard_quartic();
  return p;
}
const HeteroclinicProfile& profile() {
  static const auto prof = solve_heteroclinic(quartic(), 30.0, 0.01);
  return prof;
}

// Planar solution rising from 0.2 at y = -M to 1 at the mirror line y = 0.
double strip_exact(double y, double M) {
  const double c = std::sqrt(2.0) * std::atanh(0.2);
  return std::tanh((y + M + c) / std::sqrt(2.0));
}

// Independent dense oracle for the discrete problem on a quarter grid: mirror
// at i = 0 and at the top row, Dirichlet at i = nx-1 and j = 0. For order 4
// the node beyond a Dirichlet edge is 2g - u_in + h^2 (F'(g) - g_tt).
ScalarField2D dense_oracle(const ScalarField2D& init, int order) {
  const int nx = init.nx, ny = init.ny, mx = nx - 1, n = mx * (ny - 1);
  const double h = init.h, ih2 = 1.0 / (h * h);
  ScalarField2D u = init;
  auto id = [&](int i, int j) { return (j - 1) * mx + i; };
  auto dF = [](double v) { return v * v * v - v; };
  // Affine value of node (i, j): constant plus one unknown with a coefficient.
  struct Term {
    double c;
    int k;
    double a;
  };
  std::function<Term(int, int)> node = [&](int i, int j) -> Term {
    if (i < 0) i = -i;
    if (j > ny - 1) j = 2 * (ny - 1) - j;
    if (i == nx) {
      const double g = u(mx, j), gtt = u(mx, j - 1) - 2 * g + u(mx, std::min(j + 1, 2 * (ny - 1) - j - 1));
      const Term in = node(mx - 1, j);
      return {2 * g - in.c + h * h * dF(g) - gtt, in.k, -in.a};
    }
    if (j == -1) {
      const double g = u(i, 0);
      const double gtt = (i == 0 ? 2 * u(1, 0) : u(i - 1, 0) + u(i + 1, 0)) - 2 * g;
      const Term in = node(i, 1);
      return {2 * g - in.c + h * h * dF(g) - gtt, in.k, -in.a};
    }
    if (i == mx || j == 0) return {u(i, j), -1, 0.0};
    return {0.0, id(i, j), 1.0};
  };
  std::vector<std::pair<int, double>> st;
  if (order == 2) st = {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
  else st = {{-2, -1 / 12.0}, {-1, 16 / 12.0}, {0, -30 / 12.0}, {1, 16 / 12.0}, {2, -1 / 12.0}};
  for (int it = 0; it < 50; ++it) {
    std::vector<double> A(std::size_t(n) * n, 0.0), r(static_cast<std::size_t>(n), 0.0);
    double rmax = 0;
    for (int j = 1; j < ny; ++j)
      for (int i = 0; i < mx; ++i) {
        const int k = id(i, j);
        auto add = [&](const Term& t, double w) {
          const double val = t.k >= 0 ? t.c + t.a * u(t.k % mx, t.k / mx + 1) : t.c;
          r[k] += w * val * ih2;
          if (t.k >= 0) A[std::size_t(k) * n + t.k] += w * t.a * ih2;
        };
        for (auto [o, w] : st) {
          if (o == 0) {
            add(node(i, j), 2 * w);
            continue;
          }
          add(node(i + o, j), w);
          add(node(i, j + o), w);
        }
        r[k] -= dF(u(i, j));
        A[std::size_t(k) * n + k] -= 3 * u(i, j) * u(i, j) - 1;
        rmax = std::max(rmax, std::abs(r[k]));
      }
    if (rmax < 1e-12) break;
    for (int c = 0; c < n; ++c) {
      int piv = c;
      for (int rr = c + 1; rr < n; ++rr)
        if (std::abs(A[std::size_t(rr) * n + c]) > std::abs(A[std::size_t(piv) * n + c])) piv = rr;
      if (piv != c) {
        for (int q = 0; q < n; ++q) std::swap(A[std::size_t(c) * n + q], A[std::size_t(piv) * n + q]);
        std::swap(r[c], r[piv]);
      }
      for (int rr = c + 1; rr < n; ++rr) {
        const double f = A[std::size_t(rr) * n + c] / A[std::size_t(c) * n + c];
        if (f == 0) continue;
        for (int q = c; q < n; ++q) A[std::size_t(rr) * n + q] -= f * A[std::size_t(c) * n + q];
        r[rr] -= f * r[c];
      }
    }
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int c = n - 1; c >= 0; --c) {
      double s = r[c];
      for (int q = c + 1; q < n; ++q) s -= A[std::size_t(c) * n + q] * d[q];
      d[c] = s / A[std::size_t(c) * n + c];
    }
    for (int k = 0; k < n; ++k) u(k % mx, k / mx + 1) -= d[k];
  }
  return u;
}

// Planar profile on the edges; a bump over the interior guess.
struct Strip {
  SolveConfig cfg;
  ScalarField2D init;
};

Strip strip_problem(double L, double M, double h, int order) {
  Strip s;
  s.cfg.L = L;
  s.cfg.M = M;
  s.cfg.h = h;
  s.cfg.stencil_order = order;
  s.init = ScalarField2D::quarter(L, M, h);
  fill_field(s.init, [&](double x, double y) {
    return strip_exact(y, M) + 0.1 * std::exp(-x * x - (y + M / 2) * (y + M / 2));
  });
  for (int j = 0; j < s.init.ny; ++j) s.init(s.init.nx - 1, j) = strip_exact(s.init.y(j), M);
  for (int i = 0; i < s.init.nx; ++i) s.init(i, 0) = strip_exact(s.init.y(0), M);
  return s;
}
}  // namespace

TEST(Solver, StripMatchesDenseOracle) {
  for (int order : {2, 4}) {
    Strip s = strip_problem(0.6, 6.0, 0.1, order);
    // Curved edge data so the solution depends on x.
    for (int j = 0; j < s.init.ny; ++j) s.init(s.init.nx - 1, j) += 0.05 * std::sin(s.init.y(j));
    const auto r = solve_newton(s.cfg, quartic(), s.init);
    const auto oracle = dense_oracle(s.init, order);
    EXPECT_LE(sup_difference(r.u, oracle), 1e-10) << "order " << order;
    EXPECT_GT(std::abs(r.u(0, s.init.ny / 2) - r.u(s.init.nx - 2, s.init.ny / 2)), 1e-3);
  }
}

TEST(Solver, StripRefinementOrder) {
  for (int order : {2, 4}) {
    std::vector<double> err;
    for (double h : {0.1, 0.05}) {
      const Strip s = strip_problem(3.0, 20.0, h, order);
      const auto r = solve_newton(s.cfg, quartic(), s.init);
      double m = 0;
      for (int j = 0; j < r.u.ny; ++j)
        for (int i = 0; i < r.u.nx; ++i) m = std::max(m, std::abs(r.u(i, j) - strip_exact(r.u.y(j), s.cfg.M)));
      err.push_back(m);
    }
    const double ratio = err[0] / err[1];
    if (order == 2) {
      EXPECT_NEAR(ratio, 4.0, 0.4);
    } else {
      EXPECT_GT(ratio, 12.0);
      EXPECT_LE(err.back(), 1e-7);
    }
  }
}

TEST(Solver, SaddleRefinementOrder) {
  for (int order : {2, 4}) {
    std::vector<ScalarField2D> us;
    for (double h : {0.1, 0.05, 0.025}) us.push_back(solve_saddle(10.0, h, quartic(), profile(), order).u);
    double d[2] = {0, 0};
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < us[k].ny; ++j)
        for (int i = 0; i < us[k].nx; ++i) d[k] = std::max(d[k], std::abs(us[k](i, j) - us[k + 1](2 * i, 2 * j)));
    const double rate = std::log2(d[0] / d[1]);
    EXPECT_GE(rate, order == 2 ? 1.8 : 3.6) << "order " << order;
  }
}

TEST(Solver, DoublingLengthChangesInnerRegionLittle) {
  const auto a = make_four_end(0.3, 27.0, 0.1, profile());
  const auto b = make_four_end(0.3, 54.0, 0.1, profile(), a.cfg.M);
  const auto ra = solve_newton(a.cfg, quartic(), a.init), rb = solve_newton(b.cfg, quartic(), b.init);
  double m = 0;
  for (int j = 0; j < ra.u.ny; ++j)
    for (int i = 0; ra.u.x(i) <= 5.0; ++i) m = std::max(m, std::abs(ra.u(i, j) - rb.u(i, j)));
  EXPECT_LE(m, 2e-3);
}

TEST(Solver, FourEndConvergesFromUBar) {
  const auto s = make_four_end(0.3, 27.0, 0.1, profile());
  const auto r = solve_newton(s.cfg, quartic(), s.init);
  EXPECT_LE(r.iterations, 20);
  EXPECT_LE(r.history.back(), 1e-10);
  EXPECT_LT(r.history.back(), r.history.front());
  // Dirichlet edges untouched.
  for (int j = 0; j < r.u.ny; ++j) EXPECT_EQ(r.u(r.u.nx - 1, j), s.init(r.u.nx - 1, j));
  for (int i = 0; i < r.u.nx; ++i) EXPECT_EQ(r.u(i, 0), s.init(i, 0));
  EXPECT_LE(sup_difference(r.u, s.init), 0.1);
}

TEST(Solver, SaddleIsAntisymmetric) {
  const auto r = solve_saddle(20.0, 0.1, quartic(), profile());
  const auto& u = r.u;
  EXPECT_LE(swap_antisymmetry(u), 1e-10);
  EXPECT_LE(diagonal_nodal_distance(u), 2 * u.h);
  EXPECT_LE(std::abs(u(0, u.ny - 1)), 1e-10);
  EXPECT_GT(u(u.nx / 2, u.ny - 1), 0.9);
}

TEST(Solver, DiscreteMaximumPrinciple) {
  const auto s = make_four_end(0.3, 27.0, 0.1, profile());
  const auto r = solve_newton(s.cfg, quartic(), s.init);
  EXPECT_LE(r.u.sup_abs(), 1.0 + 10 * s.cfg.h * s.cfg.h);
  const auto sd = solve_saddle(20.0, 0.1, quartic(), profile());
  EXPECT_LE(sd.u.sup_abs(), 1.0 + 10 * 0.01);
}

TEST(Solver, SingleThreadRunsAreBitwiseIdentical) {
  const auto s = make_four_end(0.3, 27.0, 0.1, profile());
  setenv("FOUREND_THREADS", "1", 1);
  const auto a = solve_newton(s.cfg, quartic(), s.init);
  const auto b = solve_newton(s.cfg, quartic(), s.init);
  unsetenv("FOUREND_THREADS");
  EXPECT_EQ(a.u.v, b.u.v);
  EXPECT_EQ(a.history, b.history);
}

TEST(Solver, DeterministicAcrossThreadCounts) {
  const auto s = make_four_end(0.3, 27.0, 0.1, profile());
  setenv("FOUREND_THREADS", "1", 1);
  const auto a = solve_newton(s.cfg, quartic(), s.init);
  setenv("FOUREND_THREADS", "4", 1);
  const auto b = solve_newton(s.cfg, quartic(), s.init);
  unsetenv("FOUREND_THREADS");
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_LE(sup_difference(a.u, b.u), 1e-13);
}

TEST(Solver, IterationCapRaisesDivergence) {
  auto s = make_four_end(0.3, 27.0, 0.1, profile());
  s.cfg.max_iters = 1;
  try {
    solve_newton(s.cfg, quartic(), s.init);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.history.size(), 2u);
  }
}

TEST(Solver, ConfigValidation) {
  SolveConfig c;
  c.M = 10;
  EXPECT_NO_THROW(c.validate(std::sqrt(2.0)));
  c.h = 0.25;
  EXPECT_THROW(c.validate(std::sqrt(2.0)), ConfigError);
  c.h = 0.1;
  c.eps = 0.1;
  c.L = 60;
  EXPECT_THROW(c.validate(std::sqrt(2.0)), ConfigError);
  c.eps = 0;
  c.newton_tol = 1e-6;
  EXPECT_THROW(c.validate(std::sqrt(2.0)), ConfigError);
  c.newton_tol = 1e-10;
  c.stencil_order = 3;
  EXPECT_THROW(c.validate(std::sqrt(2.0)), ConfigError);
  EXPECT_THROW(solve_config_from_json({{"bc_source", "nope"}}), ConfigError);
}

TEST(Solver, DefaultHeightCoversInterface) {
  const auto s = make_four_end(0.2, 40.0, 0.1, profile());
  EXPECT_GE(s.cfg.M, std::abs(s.toda.q1(40.0)) + 16.0);
  EXPECT_NEAR(s.init(0, 0), -1.0, 1e-12);
}

TEST(Solver, CheckpointRoundTrip) {
  const auto s = make_four_end(0.3, 27.0, 0.1, profile());
  const std::string dir = testing::TempDir() + "/ckpt";
  std::filesystem::remove_all(dir);
  write_checkpoint(dir, s.init, s.cfg);
  const auto c = read_checkpoint(dir);
  EXPECT_TRUE(c.u.same_grid(s.init));
  EXPECT_EQ(c.u.v, s.init.v);
  EXPECT_EQ(c.u.eps, 0.3);
  EXPECT_EQ(to_json(c.cfg), to_json(s.cfg));
  EXPECT_THROW(read_checkpoint(dir + "/missing"), ConfigError);
}

TEST(Solver, ResumeFromSolutionIsImmediate) {
  const auto s = make_four_end(0.3, 27.0, 0.1, profile());
  const auto r = solve_newton(s.cfg, quartic(), s.init);
  const auto again = solve_newton(s.cfg, quartic(), r.u);
  EXPECT_EQ(again.iterations, 0);
}
