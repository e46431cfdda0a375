#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fourend/approx.hpp"
#include "fourend/core.hpp"
#include "fourend/field.hpp"
#include "fourend/linalg.hpp"
#include "fourend/potential.hpp"
#include "fourend/toda.hpp"
#include "json.hpp"

namespace fourend {

enum class BcSource { ULambda, UStar };

struct SolveConfig {
  double L = 60.0;
  double M = 0.0;
  double h = 0.1;
  double eps = 0.0;  // 0 for runs without a Toda slope (saddle, strips)
  BcSource bc_source = BcSource::UStar;
  double newton_tol = 1e-10;
  int max_iters = 30;
  double linear_tol = 1e-9;
  int linear_max_iters = 3000;
  int stencil_order = 4;

  void validate(double alpha0) const {
    if (!(h > 0) || !(L > 0) || !(M > 0)) throw ConfigError("L, M, h must be positive");
    if (!(h * alpha0 < 0.3)) throw ConfigError("h * alpha0 must be below 0.3");
    if (!(newton_tol <= 1e-9)) throw ConfigError("newton_tol must be <= 1e-9");
    if (eps > 0 && !(L * eps >= 8.0)) throw ConfigError("four-end runs need L * eps >= 8");
    if (stencil_order != 2 && stencil_order != 4) throw ConfigError("stencil_order must be 2 or 4");
    if (max_iters < 1 || linear_max_iters < 1 || !(linear_tol > 0)) throw ConfigError("bad iteration limits");
  }
};

inline nlohmann::json to_json(const SolveConfig& c) {
  return {{"L", c.L},
          {"M", c.M},
          {"h", c.h},
          {"eps", c.eps},
          {"bc_source", c.bc_source == BcSource::UStar ? "u_star" : "u_lambda"},
          {"newton_tol", c.newton_tol},
          {"max_iters", c.max_iters},
          {"linear_tol", c.linear_tol},
          {"linear_max_iters", c.linear_max_iters},
          {"stencil_order", c.stencil_order}};
}

inline SolveConfig solve_config_from_json(const nlohmann::json& j) {
  SolveConfig c;
  c.L = j.value("L", c.L);
  c.M = j.value("M", c.M);
  c.h = j.value("h", c.h);
  c.eps = j.value("eps", c.eps);
  const std::string bc = j.value("bc_source", std::string("u_star"));
  if (bc == "u_star") c.bc_source = BcSource::UStar;
  else if (bc == "u_lambda") c.bc_source = BcSource::ULambda;
  else throw ConfigError("unknown bc_source " + bc);
  c.newton_tol = j.value("newton_tol", c.newton_tol);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.linear_tol = j.value("linear_tol", c.linear_tol);
  c.linear_max_iters = j.value("linear_max_iters", c.linear_max_iters);
  c.stencil_order = j.value("stencil_order", c.stencil_order);
  return c;
}

struct SolveResult {
  ScalarField2D u;
  std::vector<double> history;  // sup residual before each Newton step
  std::vector<int> linear_iterations;
  int iterations = 0;
};

namespace detail {

// Value at (i, j), one node beyond a Dirichlet edge allowed:
// u(-1) = 2g - u(1) + h^2 (F'(g) - g_tt), with g_tt along the edge.
inline double ghosted(const ScalarField2D& u, const DoubleWellPotential& p, int i, int j) {
  int ii = i, jj = j;
  if (u.resolve(ii, jj)) return u(ii, jj);
  auto at = [&](int a, int b) {
    u.resolve(a, b);
    return u(a, b);
  };
  const bool across_x = i < 0 || i >= u.nx;
  const int bi = across_x ? (i < 0 ? 0 : u.nx - 1) : i, bj = across_x ? j : (j < 0 ? 0 : u.ny - 1);
  const int di = across_x ? (i < 0 ? 1 : -1) : 0, dj = across_x ? 0 : (j < 0 ? 1 : -1);
  const double g = u(bi, bj);
  const double gtt = across_x ? at(bi, bj - 1) - 2 * g + at(bi, bj + 1) : at(bi - 1, bj) - 2 * g + at(bi + 1, bj);
  return 2 * g - u(bi + di, bj + dj) + u.h * u.h * p.eval(g).dF - gtt;
}

inline void gather_residual(const ScalarField2D& u, const DoubleWellPotential& p, int order, const UnknownLayout& lay,
                            std::vector<double>& R) {
  R.resize(lay.size());
  const double ih2 = 1.0 / (u.h * u.h);
  parallel_for(lay.j_hi - lay.j_lo + 1, [&](int jb, int je) {
    for (int j = lay.j_lo + jb; j < lay.j_lo + je; ++j)
      for (int i = lay.i_lo; i <= lay.i_hi; ++i) {
        auto v = [&](int a, int b) { return ghosted(u, p, a, b); };
        const double c = u(i, j);
        double lap;
        if (order == 2) {
          lap = (v(i - 1, j) + v(i + 1, j) + v(i, j - 1) + v(i, j + 1) - 4 * c) * ih2;
        } else {
          const double sx = -v(i - 2, j) + 16 * v(i - 1, j) + 16 * v(i + 1, j) - v(i + 2, j);
          const double sy = -v(i, j - 2) + 16 * v(i, j - 1) + 16 * v(i, j + 1) - v(i, j + 2);
          lap = (sx + sy - 60 * c) * ih2 / 12.0;
        }
        R[lay.index(i, j)] = lap - p.eval(c).dF;
      }
  });
}

inline double sup_norm(const std::vector<double>& v) {
  double m = 0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

inline double l2_norm(const std::vector<double>& v) {
  double s = 0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace detail

// Damped Newton for Lap u = F'(u) on a mirrored quarter grid. Dirichlet data
// are the edge values of init; order 4 reaches past them with ghosts.
inline SolveResult solve_newton(const SolveConfig& cfg, const DoubleWellPotential& p, const ScalarField2D& init) {
  cfg.validate(p.alpha0());
  const int order = cfg.stencil_order;
  const UnknownLayout lay(init.nx, init.ny, 1, init.even_x, init.even_y);
  ShiftedLaplacian A(lay, init.h, order);
  FastPoissonSolver P(lay, init.h, p.d2F(1.0), order);
  std::vector<double> W(lay.size());
  for (int b = 0; b < lay.nuy; ++b)
    for (int a = 0; a < lay.nux; ++a) W[std::size_t(b) * lay.nux + a] = lay.weight(a, b);

  SolveResult res;
  res.u = init;
  ScalarField2D& u = res.u;
  std::vector<double> R, Rt, c(lay.size()), rhs(lay.size()), delta, tmp;
  detail::gather_residual(u, p, order, lay, R);
  for (int it = 0;; ++it) {
    const double rsup = detail::sup_norm(R);
    res.history.push_back(rsup);
    if (!std::isfinite(rsup)) throw DivergenceError("Newton residual is not finite", res.history);
    if (rsup <= cfg.newton_tol) {
      res.iterations = it;
      return res;
    }
    if (it == cfg.max_iters) break;
    for (int j = lay.j_lo; j <= lay.j_hi; ++j)
      for (int i = lay.i_lo; i <= lay.i_hi; ++i) c[lay.index(i, j)] = p.eval(u(i, j)).d2F;
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = W[k] * R[k];
    auto apply_A = [&](const std::vector<double>& v, std::vector<double>& out) {
      A.apply(v, c, out);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] *= W[k];
    };
    auto apply_Minv = [&](const std::vector<double>& r, std::vector<double>& out) {
      tmp.resize(r.size());
      for (std::size_t k = 0; k < r.size(); ++k) tmp[k] = r[k] / W[k];
      P.solve(tmp, out);
    };
    const MinresResult mr = minres(apply_A, apply_Minv, rhs, delta, cfg.linear_tol, cfg.linear_max_iters);
    res.linear_iterations.push_back(mr.iterations);

    const double n0 = detail::l2_norm(R);
    const ScalarField2D base = u;
    bool accepted = false;
    for (double t = 1.0; t >= 1.0 / 1024; t *= 0.5) {
      for (int j = lay.j_lo; j <= lay.j_hi; ++j)
        for (int i = lay.i_lo; i <= lay.i_hi; ++i) u(i, j) = base(i, j) + t * delta[lay.index(i, j)];
      detail::gather_residual(u, p, order, lay, Rt);
      if (detail::l2_norm(Rt) < (1.0 - 1e-4 * t) * n0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      u = base;
      throw DivergenceError("Newton line search failed", res.history);
    }
    R.swap(Rt);
  }
  throw DivergenceError("Newton did not converge within max_iters", res.history);
}

// ---------- problem setups ----------

inline double default_margin() { return 16.0; }

struct FourEndSetup {
  TodaSolution toda;
  UStar ubar;
  SolveConfig cfg;
  ScalarField2D init;
};

// Toda data with the reduced constant of the projected interface equation.
inline TodaSolution four_end_toda(double eps, const HeteroclinicProfile& prof) {
  return toda_closed_form(eps, toda_reduced_constant(heteroclinic_constants(prof)), prof.alpha0());
}

inline FourEndSetup make_four_end(double eps, double L, double h, const HeteroclinicProfile& prof, double M = 0.0,
                                  int stencil_order = 4) {
  FourEndSetup s;
  s.toda = four_end_toda(eps, prof);
  s.ubar = build_u_star(s.toda, prof, L + 40.0);
  s.cfg.L = L;
  s.cfg.h = h;
  s.cfg.eps = eps;
  s.cfg.M = M > 0 ? M : std::ceil(std::abs(s.toda.q1(L)) + default_margin());
  s.cfg.bc_source = BcSource::UStar;
  s.cfg.stencil_order = stencil_order;
  s.cfg.validate(prof.alpha0());
  s.init = ScalarField2D::quarter(s.cfg.L, s.cfg.M, h);
  s.init.eps = eps;
  fill_field(s.init, [&](double x, double y) { return s.ubar(x, y); });
  return s;
}

// u_lambda matching the Toda asymptotes, plus an even bump, with ring values
// copied from `ring_source`.
inline ScalarField2D u_lambda_start(const FourEndSetup& s, const HeteroclinicProfile& prof, double R, double bump,
                                    int ring) {
  const Asymptote as = asymptote(s.toda);
  const HalfLineConfig c = make_halfline_config(std::atan(s.toda.eps), R, as.intercept);
  const ULambda ul = build_u_lambda(c, prof);
  ScalarField2D f = s.init;
  fill_field(f, [&](double x, double y) {
    return ul(x, y) + bump * std::exp(-(x * x + y * y) / 25.0);
  });
  for (int j = 0; j < f.ny; ++j)
    for (int i = 0; i < f.nx; ++i)
      if (i > f.nx - 1 - ring || j < ring) f(i, j) = s.init(i, j);
  return f;
}

inline SolveResult solve_saddle(double L, double h, const DoubleWellPotential& p, const HeteroclinicProfile& prof,
                                int stencil_order = 4) {
  SolveConfig cfg;
  cfg.L = L;
  cfg.M = L;
  cfg.h = h;
  cfg.eps = 0.0;
  cfg.bc_source = BcSource::ULambda;
  cfg.stencil_order = stencil_order;
  cfg.validate(p.alpha0());
  const ULambda ul = build_u_lambda(make_halfline_config(kPi / 4, 4.0), prof);
  ScalarField2D init = ScalarField2D::quarter(L, L, h);
  fill_field(init, [&](double x, double y) { return ul(x, y); });
  return solve_newton(cfg, p, init);
}

// ---------- checkpoints ----------

inline void write_checkpoint(const std::string& dir, const ScalarField2D& u, const SolveConfig& cfg) {
  std::filesystem::create_directories(dir);
  u.write_binary(dir + "/field.bin");
  std::ofstream out(dir + "/solve_config.json");
  out << to_json(cfg).dump(2) << '\n';
}

struct Checkpoint {
  ScalarField2D u;
  SolveConfig cfg;
};

inline Checkpoint read_checkpoint(const std::string& dir) {
  Checkpoint c;
  c.u = ScalarField2D::read_binary(dir + "/field.bin");
  std::ifstream in(dir + "/solve_config.json");
  if (!in) throw ConfigError("missing " + dir + "/solve_config.json");
  nlohmann::json j;
  in >> j;
  c.cfg = solve_config_from_json(j);
  return c;
}

}  // namespace fourend
