#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "fourend/approx.hpp"
#include "fourend/core.hpp"
#include "fourend/field.hpp"
#include "fourend/geometry.hpp"
#include "fourend/potential.hpp"
#include "fourend/toda.hpp"
#include "json.hpp"

namespace fourend {

// ---------- grid derivatives ----------

struct Gradient {
  ScalarField2D ux, uy;
};

// Centered differences (order 2 or 4) across mirror edges; lower-order
// one-sided formulas near non-mirrored edges.
inline Gradient gradient(const ScalarField2D& u, int order = 2) {
  Gradient g{u, u};
  auto d1 = [&](int i, int j, int di, int dj) {
    auto ok = [&](int k) {
      int a = i + k * di, b = j + k * dj;
      return u.resolve(a, b);
    };
    auto at = [&](int k) { return u.at(i + k * di, j + k * dj); };
    if (order == 4 && ok(-2) && ok(2)) return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * u.h);
    if (ok(-1) && ok(1)) return (at(1) - at(-1)) / (2 * u.h);
    if (ok(1)) return (-3 * at(0) + 4 * at(1) - at(2)) / (2 * u.h);
    return (3 * at(0) - 4 * at(-1) + at(-2)) / (2 * u.h);
  };
  parallel_for(u.ny, [&](int jb, int je) {
    for (int j = jb; j < je; ++j)
      for (int i = 0; i < u.nx; ++i) {
        g.ux(i, j) = d1(i, j, 1, 0);
        g.uy(i, j) = d1(i, j, 0, 1);
      }
  });
  return g;
}

// Full-plane grid [-L, L] x [-M, M] unfolded from a mirrored quarter.
inline ScalarField2D unfold(const ScalarField2D& u) {
  const int nx = u.even_x ? 2 * u.nx - 1 : u.nx;
  const int ny = u.even_y ? 2 * u.ny - 1 : u.ny;
  ScalarField2D f = ScalarField2D::make(u.even_x ? -u.L() : u.x0, u.y0, u.h, nx, ny, false, false);
  const int ox = u.even_x ? u.nx - 1 : 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) f(i, j) = u.at(i - ox, j);
  return f;
}

// max |u(x, y) - u(-x, y)| and max |u(x, y) - u(x, -y)| on a full grid
// symmetric about the origin.
inline double evenness_defect(const ScalarField2D& f) {
  if (std::abs(f.x0 + f.L()) > 1e-9 * f.h) throw ConfigError("evenness_defect: x range not symmetric");
  const double ytop = f.y(f.ny - 1);
  const bool sym_y = std::abs(f.y0 + ytop) <= 1e-9 * f.h;
  double m = 0.0;
  for (int j = 0; j < f.ny; ++j)
    for (int i = 0; i < f.nx; ++i) {
      m = std::max(m, std::abs(f(i, j) - f(f.nx - 1 - i, j)));
      if (sym_y) m = std::max(m, std::abs(f(i, j) - f(i, f.ny - 1 - j)));
    }
  return m;
}

// ---------- nodal set ----------

inline double secant_root(const std::function<double(double)>& g, double a, double b, double tol) {
  double fa = g(a), fb = g(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0) throw RangeError("secant_root: no sign change");
  for (int it = 0; it < 200 && std::abs(b - a) > tol; ++it) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = g(c);
    if (fc == 0.0) return c;
    if (fc * fb < 0) {
      a = b;
      fa = fb;
    } else {
      fa *= 0.5;
    }
    b = c;
    fb = fc;
  }
  return b;
}

// Lower nodal curve of an even four-end field: one sign change per column in y < 0.
inline NodalGraph extract_nodal_graph(const ScalarField2D& u) {
  if (!u.even_x) throw ConfigError("extract_nodal_graph expects an even-x quarter field");
  std::vector<double> xs(std::size_t(u.nx)), f(std::size_t(u.nx));
  std::vector<int> bad;
  for (int i = 0; i < u.nx; ++i) {
    int count = 0, jc = -1;
    for (int j = 0; j + 1 < u.ny; ++j) {
      if (u.y(j + 1) > 0) break;
      const double a = u(i, j), b = u(i, j + 1);
      if ((a < 0) != (b < 0) || a == 0.0) {
        ++count;
        jc = j;
      }
    }
    xs[std::size_t(i)] = u.x(i);
    if (count != 1) {
      bad.push_back(i);
      continue;
    }
    const double x = u.x(i);
    f[std::size_t(i)] =
        secant_root([&](double y) { return u.interpolate(x, y); }, u.y(jc), u.y(jc + 1), 1e-12);
  }
  if (!bad.empty()) throw BigraphViolation("nodal set is not a graph over x in some columns", bad);
  return graph_from_samples(std::move(xs), std::move(f), GraphSide::Lower, true);
}

struct AngleFit {
  double slope = 0.0;
  double theta = 0.0;
  double rms = 0.0;
};

inline AngleFit angle_of(const NodalGraph& g, double L, double lo = 0.6, double hi = 0.9, double max_rms = 0.05) {
  if (g.xs.back() < 0.8 * L - 1e-9) throw RangeError("angle_of: nodal graph does not reach 0.8 L");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < g.xs.size(); ++i)
    if (g.xs[i] >= lo * L && g.xs[i] <= hi * L) {
      x.push_back(g.xs[i]);
      y.push_back(g.f[i]);
    }
  if (x.size() < 3) throw RangeError("angle_of: window has too few samples");
  const LineFit lf = fit_line(x, y);
  if (lf.rms > max_rms) throw NotAsymptoticError("angle_of: nodal line not straight on the window");
  AngleFit a;
  a.slope = g.side == GraphSide::Lower ? -lf.slope : lf.slope;
  a.theta = std::atan(a.slope);
  a.rms = lf.rms;
  return a;
}

inline AngleFit angle_of(const ScalarField2D& u) { return angle_of(extract_nodal_graph(u), u.L()); }

// ---------- saddle symmetry ----------

// max |U(x, y) + U(y, x)| on a square even quarter grid.
inline double swap_antisymmetry(const ScalarField2D& U) {
  if (U.nx != U.ny || !U.even_x || !U.even_y) throw ConfigError("swap_antisymmetry expects a square even quarter");
  const int N = U.nx - 1;
  double m = 0.0;
  for (int j = 0; j < U.ny; ++j)
    for (int i = 0; i < U.nx; ++i) m = std::max(m, std::abs(U(i, j) + U(N - j, N - i)));
  return m;
}

// max distance from the lower nodal branch to the diagonal y = -x.
inline double diagonal_nodal_distance(const ScalarField2D& U) {
  double m = 0.0;
  for (int i = 1; i < U.nx; ++i) {
    const double x = U.x(i), d = std::min(1.0, 0.5 * x);
    if (x + d > U.M()) break;
    const double y = secant_root([&](double yy) { return U.interpolate(x, yy); }, -x - d, -x + d, 1e-12);
    m = std::max(m, std::abs(y + x));
  }
  return m;
}

// ---------- Hamiltonian identities ----------

enum class SliceDirection { XSlices, YSlices };

struct HamiltonianProfile {
  SliceDirection direction = SliceDirection::YSlices;
  std::vector<double> coord, value;
  std::vector<double> excluded;  // slice coordinates touching the boundary ring

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "slice,value\n" << std::setprecision(17);
    for (std::size_t k = 0; k < coord.size(); ++k) out << coord[k] << ',' << value[k] << '\n';
  }
};

// y-slices: int (u_x^2/2 - u_y^2/2 + F) dx over the full line; x-slices: int
// (u_y^2/2 - u_x^2/2 + F) dy. Trapezoid on the grid, mirrored halves doubled.
inline HamiltonianProfile hamiltonian_profile(const ScalarField2D& u, const DoubleWellPotential& p,
                                              SliceDirection dir, int order = 4, int ring = 2) {
  const Gradient g = gradient(u, order);
  HamiltonianProfile hp;
  hp.direction = dir;
  auto density = [&](int i, int j) {
    const double a = g.ux(i, j), b = g.uy(i, j), F = p.eval(u(i, j)).F;
    return dir == SliceDirection::YSlices ? 0.5 * a * a - 0.5 * b * b + F : 0.5 * b * b - 0.5 * a * a + F;
  };
  if (dir == SliceDirection::YSlices) {
    for (int j = 0; j < u.ny; ++j) {
      const bool touches = !u.even_y ? (j < ring || j > u.ny - 1 - ring) : j < ring;
      if (touches) {
        hp.excluded.push_back(u.y(j));
        continue;
      }
      double s = 0.0;
      for (int i = 0; i < u.nx; ++i) {
        const double w = (i == 0 || i == u.nx - 1) ? 0.5 : 1.0;
        s += w * density(i, j);
      }
      s *= u.h * (u.even_x ? 2.0 : 1.0);
      hp.coord.push_back(u.y(j));
      hp.value.push_back(s);
    }
  } else {
    for (int i = 0; i < u.nx; ++i) {
      const bool touches = !u.even_x ? (i < ring || i > u.nx - 1 - ring) : i > u.nx - 1 - ring;
      if (touches) {
        hp.excluded.push_back(u.x(i));
        continue;
      }
      double s = 0.0;
      for (int j = 0; j < u.ny; ++j) {
        const double w = (j == 0 || j == u.ny - 1) ? 0.5 : 1.0;
        s += w * density(i, j);
      }
      s *= u.h * (u.even_y ? 2.0 : 1.0);
      hp.coord.push_back(u.x(i));
      hp.value.push_back(s);
    }
  }
  return hp;
}

// (max - min) / |mean| over slices with coordinate in [lo, hi].
inline double relative_spread(const HamiltonianProfile& hp, double lo, double hi) {
  double mn = INFINITY, mx = -INFINITY, sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < hp.coord.size(); ++k)
    if (hp.coord[k] >= lo && hp.coord[k] <= hi) {
      mn = std::min(mn, hp.value[k]);
      mx = std::max(mx, hp.value[k]);
      sum += hp.value[k];
      ++n;
    }
  if (n < 2) throw RangeError("relative_spread: fewer than two slices selected");
  return (mx - mn) / std::abs(sum / n);
}

inline double slice_value(const HamiltonianProfile& hp, double c) {
  for (std::size_t k = 0; k < hp.coord.size(); ++k)
    if (std::abs(hp.coord[k] - c) < 1e-9) return hp.value[k];
  throw RangeError("slice_value: no slice at the requested coordinate");
}

// ---------- balancing ----------

struct Rect {
  double x0, x1, y0, y1;
};

enum class FluxField { TranslationX, TranslationY, Rotation };

// Boundary flux of the stress tensor ((|grad u|^2/2 + F) X - X(u) grad u).nu
// over a grid-aligned rectangle (in the unfolded plane), trapezoid per edge.
inline double balancing_flux(const ScalarField2D& u, const DoubleWellPotential& p, Rect r, FluxField kind,
                             int order = 2) {
  const double h = u.h;
  auto idx = [&](double v, double o) { return int(std::llround((v - o) / h)); };
  const int i0 = idx(r.x0, u.x0), i1 = idx(r.x1, u.x0), j0 = idx(r.y0, u.y0), j1 = idx(r.y1, u.y0);
  if (!(i1 > i0 && j1 > j0)) throw ConfigError("balancing_flux: empty rectangle");
  auto inside = [&](int i, int j) {
    for (int k = -order / 2; k <= order / 2; ++k) {
      int a = i + k, b = j, c = i, d = j + k;
      if (!u.resolve(a, b) || !u.resolve(c, d)) return false;
    }
    return true;
  };
  if (!inside(i0, j0) || !inside(i1, j1) || !inside(i0, j1) || !inside(i1, j0))
    throw ConfigError("balancing_flux: rectangle not interior to the grid");
  auto grad = [&](int i, int j, double& gx, double& gy) {
    if (order == 4) {
      gx = (-u.at(i + 2, j) + 8 * u.at(i + 1, j) - 8 * u.at(i - 1, j) + u.at(i - 2, j)) / (12 * h);
      gy = (-u.at(i, j + 2) + 8 * u.at(i, j + 1) - 8 * u.at(i, j - 1) + u.at(i, j - 2)) / (12 * h);
    } else {
      gx = (u.at(i + 1, j) - u.at(i - 1, j)) / (2 * h);
      gy = (u.at(i, j + 1) - u.at(i, j - 1)) / (2 * h);
    }
  };
  auto integrand = [&](int i, int j, double nx, double ny) {
    double gx, gy;
    grad(i, j, gx, gy);
    const double x = u.x0 + i * h, y = u.y0 + j * h;
    double X = 0, Y = 0;
    if (kind == FluxField::TranslationX) X = 1;
    else if (kind == FluxField::TranslationY) Y = 1;
    else {
      X = -y;
      Y = x;
    }
    const double e = 0.5 * (gx * gx + gy * gy) + p.eval(u.at(i, j)).F;
    return e * (X * nx + Y * ny) - (X * gx + Y * gy) * (gx * nx + gy * ny);
  };
  auto edge = [&](int ia, int ja, int di, int dj, int n, double nx, double ny) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      s += w * integrand(ia + k * di, ja + k * dj, nx, ny);
    }
    return s * h;
  };
  return edge(i0, j0, 1, 0, i1 - i0, 0, -1) + edge(i1, j0, 0, 1, j1 - j0, 1, 0) + edge(i0, j1, 1, 0, i1 - i0, 0, 1) +
         edge(i0, j0, 0, 1, j1 - j0, -1, 0);
}

// ---------- modulation ----------

struct ModulationOptions {
  SlabRule slab;
  int max_sweeps = 20;
  double sweep_tol = 1e-12;
  double root_tol = 1e-13;
};

// Orthogonality defect int (u - u_bar(.; s)) rho H'(y1 - s) dy1 on slice x1
// with the mirror term taken from `ub`.
struct SliceProblem {
  std::vector<double> y1, uval, h2, rho;

  double defect(const UStar& ub, double x1, double s) const {
    double r = 0.0;
    for (std::size_t q = 0; q < y1.size(); ++q) {
      const double ubar = ub.slice_value(x1, y1[q], s) + h2[q] - 1.0;
      r += (uval[q] - ubar) * rho[q] * ub.profile.deriv(y1[q] - s);
    }
    return r;
  }
};

inline SliceProblem slice_problem(const FieldFn& u, const UStar& ub, double x1, const SlabRule& rule) {
  SliceProblem sp;
  const double d = ub.chart.d(x1);
  const int m = int(std::ceil(0.75 * d / rule.spacing));
  const double dq = 0.75 * d / m;
  const double hp0 = ub.profile.deriv(0.0);
  for (int q = -m; q <= m; ++q) {
    const double y1 = q * dq;
    const double rho = slab_weight(y1, d);
    if (rho == 0.0 || ub.profile.deriv(std::abs(y1) - 1.0) <= rule.negligible * hp0) continue;
    const Point p = fermi_forward_unchecked(ub.chart, x1, y1);
    sp.y1.push_back(y1);
    sp.rho.push_back(rho);
    sp.uval.push_back(u(p.x, p.y));
    sp.h2.push_back(ub.H1(p.x, -p.y));
  }
  return sp;
}

struct ModulationResult {
  Modulation h;
  int sweeps = 0;
  double max_orthogonality_defect = 0.0;
};

// Modulation s(x1) on the samples xs (uniform from 0) so that u - u_bar is
// orthogonal to rho H' on each slice. The mirror term is iterated to a fixed point.
inline ModulationResult compute_modulation(const FieldFn& u, const UStar& ubar, std::vector<double> xs,
                                           const ModulationOptions& opt = {}) {
  UStar ub = ubar;
  ModulationResult res;
  std::vector<double> s(xs.size(), 0.0);
  if (!ubar.mod.empty())
    for (std::size_t k = 0; k < xs.size(); ++k) s[k] = ubar.mod(xs[k]);
  ub.mod = Modulation{xs, s, true, true};
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    std::vector<double> next(xs.size());
    parallel_for(int(xs.size()), [&](int kb, int ke) {
      for (int k = kb; k < ke; ++k) {
        const double x1 = xs[std::size_t(k)];
        const SliceProblem sp = slice_problem(u, ub, x1, opt.slab);
        auto g = [&](double t) { return sp.defect(ub, x1, t); };
        if (g(-1.0) * g(1.0) > 0) throw ModulationBracketError("compute_modulation: no sign change for |s| <= 1");
        next[std::size_t(k)] = secant_root(g, -1.0, 1.0, opt.root_tol);
      }
    });
    double change = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) change = std::max(change, std::abs(next[k] - s[k]));
    s = next;
    ub.mod = Modulation{xs, s, true, true};
    res.sweeps = sweep;
    if (change <= opt.sweep_tol) break;
  }
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const SliceProblem sp = slice_problem(u, ub, xs[k], opt.slab);
    res.max_orthogonality_defect = std::max(res.max_orthogonality_defect, std::abs(sp.defect(ub, xs[k], s[k])));
  }
  res.h = ub.mod;
  res.h.hold_ends = false;
  return res;
}

inline ModulationResult compute_modulation(const ScalarField2D& u, const UStar& ubar, std::vector<double> xs,
                                           const ModulationOptions& opt = {}) {
  return compute_modulation(grid_function(u), ubar, std::move(xs), opt);
}

// ---------- Toda comparison ----------

// Second-order centered derivatives of even samples on a uniform grid from 0.
inline void even_derivatives(const std::vector<double>& xs, const std::vector<double>& v, std::vector<double>& d1,
                             std::vector<double>& d2) {
  const int n = int(xs.size());
  const double dx = xs[1] - xs[0];
  d1.assign(std::size_t(n), 0.0);
  d2.assign(std::size_t(n), 0.0);
  auto at = [&](int i) { return v[std::size_t(std::abs(i))]; };
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) {
      d1[std::size_t(i)] = (at(i + 1) - at(i - 1)) / (2 * dx);
      d2[std::size_t(i)] = (at(i + 1) - 2 * at(i) + at(i - 1)) / (dx * dx);
    } else {
      d1[std::size_t(i)] = (3 * at(i) - 4 * at(i - 1) + at(i - 2)) / (2 * dx);
      d2[std::size_t(i)] = (2 * at(i) - 5 * at(i - 1) + 4 * at(i - 2) - at(i - 3)) / (dx * dx);
    }
  }
}

struct TodaResidual {
  std::vector<double> xs, lambda, lhs, rhs;  // lambda = lhs + rhs with lhs = c0 p'', rhs = 2 exp(2 alpha0 p)
  double window = 0.0;
  double sup_lambda = 0.0, sup_lhs = 0.0, sup_rhs = 0.0;
};

// lambda(x) = c0 p'' + 2 exp(2 alpha0 p) for p = f + h; sups over |x| <= |log eps| / eps.
inline TodaResidual toda_residual(const NodalGraph& g, const Modulation& h, double c0, double alpha0, double eps) {
  TodaResidual r;
  r.xs = g.xs;
  std::vector<double> pv(g.xs.size()), d1, d2;
  for (std::size_t k = 0; k < g.xs.size(); ++k) pv[k] = g.f[k] + h(g.xs[k]);
  even_derivatives(g.xs, pv, d1, d2);
  r.window = std::abs(std::log(eps)) / eps;
  const std::size_t n = g.xs.size();
  r.lambda.resize(n);
  r.lhs.resize(n);
  r.rhs.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.lhs[k] = c0 * d2[k];
    r.rhs[k] = 2.0 * std::exp(2.0 * alpha0 * pv[k]);
    r.lambda[k] = r.lhs[k] + r.rhs[k];
    if (g.xs[k] <= r.window && k + 1 < n) {
      r.sup_lambda = std::max(r.sup_lambda, std::abs(r.lambda[k]));
      r.sup_lhs = std::max(r.sup_lhs, std::abs(r.lhs[k]));
      r.sup_rhs = std::max(r.sup_rhs, std::abs(r.rhs[k]));
    }
  }
  return r;
}

struct TodaComparisonReport {
  double j_const = 0.0;
  double chi_norm = 0.0, chip_norm = 0.0, chipp_norm = 0.0;
  double center_gap = 0.0;
  double lambda_norm = 0.0;
  std::vector<double> xs, chi, chip, chipp, lambda;

  nlohmann::json to_json() const {
    return {{"j_const", j_const},   {"chi_norm", chi_norm},     {"chiprime_norm", chip_norm},
            {"chisecond_norm", chipp_norm}, {"center_gap", center_gap}, {"lambda_norm", lambda_norm}};
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "x,chi,chiprime,chisecond,lambda\n" << std::setprecision(17);
    for (std::size_t k = 0; k < xs.size(); ++k)
      out << xs[k] << ',' << chi[k] << ',' << chip[k] << ',' << chipp[k] << ',' << lambda[k] << '\n';
  }
};

// chi = f + h + j - q with j minimizing sup (cosh x)^(eps tau) |chi|.
inline TodaComparisonReport compare_to_toda(const NodalGraph& g, const Modulation& h, const TodaSolution& t,
                                            double tau) {
  TodaComparisonReport rep;
  const std::size_t n = g.xs.size();
  rep.xs = g.xs;
  std::vector<double> e(n), w(n), hv(n), h1, h2;
  for (std::size_t k = 0; k < n; ++k) {
    hv[k] = h(g.xs[k]);
    e[k] = g.f[k] + hv[k] - t.q1(g.xs[k]);
    w[k] = std::exp(t.eps * tau * log_cosh(g.xs[k]));
  }
  even_derivatives(g.xs, hv, h1, h2);
  auto obj = [&](double j) {
    double m = 0;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, w[k] * std::abs(e[k] + j));
    return m;
  };
  double lo = -*std::max_element(e.begin(), e.end()), hi = -*std::min_element(e.begin(), e.end());
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo), fa = obj(a), fb = obj(b);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = obj(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = obj(b);
    }
  }
  rep.j_const = 0.5 * (lo + hi);
  if (obj(0.0) <= obj(rep.j_const)) rep.j_const = 0.0;
  rep.chi.resize(n);
  rep.chip.resize(n);
  rep.chipp.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = g.xs[k];
    rep.chi[k] = e[k] + rep.j_const;
    rep.chip[k] = g.fp[k] + h1[k] - t.q1p(x);
    rep.chipp[k] = g.fpp[k] + h2[k] - t.q1pp(x);
    rep.chi_norm = std::max(rep.chi_norm, w[k] * std::abs(rep.chi[k]));
    rep.chip_norm = std::max(rep.chip_norm, w[k] * std::abs(rep.chip[k]));
    rep.chipp_norm = std::max(rep.chipp_norm, w[k] * std::abs(rep.chipp[k]));
  }
  rep.center_gap = std::abs(g.f[0] + hv[0] - t.q1(0.0));
  const TodaResidual tr = toda_residual(g, h, t.c0, t.alpha0, t.eps);
  rep.lambda = tr.lambda;
  rep.lambda_norm = tr.sup_lambda;
  return rep;
}

// ---------- decay and monotonicity ----------

struct DecayFit {
  double beta = 0.0;
  double rms = 0.0;
  int samples = 0;
};

// Fit log(|u^2 - 1| + |grad u|) against distance to the nodal set (both mirror
// curves) over grid nodes with distance in [dmin, dmax].
inline DecayFit exp_decay_fit(const ScalarField2D& u, const NodalGraph& g, double dmin = 2.0, double dmax = 8.0,
                              int stride = 2) {
  const Gradient gr = gradient(u, 2);
  std::vector<double> cx, cy;
  const double xe = u.L() + dmax;
  for (double x = -xe; x <= xe; x += 0.5 * u.h) {
    const double f = g.eval(x).f;
    cx.push_back(x);
    cy.push_back(f);
  }
  const double step = 0.5 * u.h;
  std::vector<double> dist, val;
  for (int j = 2; j < u.ny - 2; j += stride)
    for (int i = 0; i < u.nx - 2; i += stride) {
      const double x = u.x(i), y = u.y(j);
      const int c = int(std::llround((x + xe) / step));
      const int w = int(std::ceil(dmax / step)) + 1;
      double d = INFINITY;
      for (int k = std::max(0, c - w); k <= std::min(int(cx.size()) - 1, c + w); ++k) {
        d = std::min(d, std::hypot(x - cx[std::size_t(k)], y - cy[std::size_t(k)]));
        d = std::min(d, std::hypot(x - cx[std::size_t(k)], y + cy[std::size_t(k)]));
      }
      if (d < dmin || d > dmax) continue;
      const double v = std::abs(u(i, j) * u(i, j) - 1.0) + std::hypot(gr.ux(i, j), gr.uy(i, j));
      if (!(v > 0.0)) continue;
      dist.push_back(d);
      val.push_back(std::log(v));
    }
  if (dist.size() < 10) throw RangeError("exp_decay_fit: insufficient samples");
  const LineFit lf = fit_line(dist, val);
  return DecayFit{-lf.slope, lf.rms, int(dist.size())};
}

struct MonotonicityReport {
  double min_ux = 0.0;
  double min_uy = 0.0;
  bool pass = false;
  bool degenerate = false;  // a derivative vanishes identically within tolerance

  nlohmann::json to_json() const {
    return {{"min_ux", min_ux}, {"min_uy", min_uy}, {"pass", pass}, {"degenerate", degenerate}};
  }
};

// min u_x over x > h and min u_y over y < -h, interior nodes.
inline MonotonicityReport monotonicity_check(const ScalarField2D& u, double tol = 1e-8) {
  const Gradient g = gradient(u, 2);
  MonotonicityReport r;
  r.min_ux = INFINITY;
  r.min_uy = INFINITY;
  for (int j = 1; j < u.ny - 1; ++j)
    for (int i = 1; i < u.nx - 1; ++i) {
      if (u.x(i) > u.h * 1.5) r.min_ux = std::min(r.min_ux, g.ux(i, j));
      if (u.y(j) < -u.h * 1.5) r.min_uy = std::min(r.min_uy, g.uy(i, j));
    }
  r.pass = r.min_ux > -tol && r.min_uy > -tol;
  r.degenerate = std::abs(r.min_ux) <= tol || std::abs(r.min_uy) <= tol;
  return r;
}

}  // namespace fourend
