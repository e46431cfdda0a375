#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "fourend/core.hpp"
#include "fourend/field.hpp"
#include "fourend/geometry.hpp"
#include "fourend/potential.hpp"
#include "fourend/toda.hpp"

namespace fourend {

using FieldFn = std::function<double(double, double)>;

struct WeightParams {
  double gamma = 0.0;
  double delta = 0.0;

  bool admissible(double alpha0, double theta_lambda) const {
    return gamma * gamma + delta * delta < alpha0 * alpha0 &&
           alpha0 > delta + gamma / std::tan(theta_lambda);
  }
};

// Uniformly sampled function of x, mirrored about 0 when even; 4-point Lagrange.
struct EvenSamples {
  std::vector<double> xs, v;
  bool even = true;
  bool hold_ends = false;  // constant extension beyond the last sample

  bool empty() const { return xs.empty(); }

  double operator()(double x) const {
    if (xs.empty()) return 0.0;
    if (even) x = std::abs(x);
    const int n = int(xs.size());
    const double dx = xs[1] - xs[0];
    const double tol = 1e-9 * dx;
    if (hold_ends && x > xs.back()) return v.back();
    if (x < xs.front() - tol || x > xs.back() + tol) throw CoverageError("sample grid does not cover x");
    const double s = (x - xs.front()) / dx;
    const int lo = even && xs.front() == 0.0 ? -(n - 1) : 0;
    const int b = std::clamp(int(std::floor(s)) - 1, lo, n - 4);
    double r = 0.0;
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int c = 0; c < 4; ++c)
        if (c != a) w *= (s - (b + c)) / double(a - c);
      r += w * v[std::size_t(std::abs(b + a))];
    }
    return r;
  }
};

using Modulation = EvenSamples;

// ---------- partition of unity and u_lambda ----------

inline double halfline_distance(const HalfLineConfig& c, int j, Point p) {
  const Point a = c.anchor(j), e = c.e(j);
  const double t = std::max(0.0, (p.x - a.x) * e.x + (p.y - a.y) * e.y);
  return std::hypot(p.x - a.x - t * e.x, p.y - a.y - t * e.y);
}

// Weights (I_0, ..., I_4).
inline std::array<double, 5> partition_of_unity(const HalfLineConfig& c, Point p) {
  std::array<double, 5> w{};
  const double chi = smoothstep((std::hypot(p.x, p.y) - (c.R - 1.0)) / 2.0);
  w[0] = 1.0 - chi;
  if (chi == 0.0) return w;
  std::array<double, 4> dist{}, raw{};
  for (int j = 0; j < 4; ++j) dist[j] = halfline_distance(c, j, p);
  double sum = 0.0;
  for (int j = 0; j < 4; ++j) {
    raw[j] = 1.0;
    for (int i = 0; i < 4; ++i)
      if (i != j) raw[j] *= smoothstep((dist[i] - dist[j] + 2.0) / 4.0);
    sum += raw[j];
  }
  for (int j = 0; j < 4; ++j) w[j + 1] = chi * raw[j] / sum;
  return w;
}

struct ULambda {
  HalfLineConfig config;
  HeteroclinicProfile profile;

  double operator()(double x, double y) const {
    const Point p{x, y};
    const auto w = partition_of_unity(config, p);
    double u = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (w[j + 1] == 0.0) continue;
      const Point a = config.anchor(j), n = config.eperp(j);
      const double t = (x - a.x) * n.x + (y - a.y) * n.y;
      u += (j % 2 == 0 ? -1.0 : 1.0) * w[j + 1] * profile.value(t);
    }
    return u;
  }
};

inline ULambda build_u_lambda(const HalfLineConfig& c, const HeteroclinicProfile& prof) {
  validate_config(c);
  return ULambda{c, prof};
}

inline double weight_function(const WeightParams& wp, const HalfLineConfig& c, Point p) {
  const auto w = partition_of_unity(c, p);
  double g = w[0];
  for (int j = 0; j < 4; ++j) {
    if (w[j + 1] == 0.0) continue;
    const Point a = c.anchor(j), e = c.e(j), n = c.eperp(j);
    const double s = (p.x - a.x) * e.x + (p.y - a.y) * e.y;
    const double t = (p.x - a.x) * n.x + (p.y - a.y) * n.y;
    g += w[j + 1] * std::exp(wp.gamma * s + wp.delta * log_cosh(t));
  }
  return g;
}

// ---------- u_bar ----------

// Cutoff eta equal to 1 for |y1| <= d - 1 and 0 for |y1| >= d.
inline double tube_cutoff(double y1, double d) { return 1.0 - smoothstep(std::abs(y1) - (d - 1.0)); }

// Slab weight rho: 1 for |t| <= d/2, 0 for |t| >= 3d/4.
inline double slab_weight(double t, double d) { return 1.0 - smoothstep((std::abs(t) - 0.5 * d) / (0.25 * d)); }

struct UStar {
  FermiChart chart;  // lower curve
  HeteroclinicProfile profile;
  Modulation mod;
  double max_width = 0.0;
  double slope_factor = 1.0;
  double apex = 0.0;       // asymptote pair y = apex + end_slope * |x|
  double end_slope = 0.0;

  // Heteroclinic of the signed distance to the asymptote pair; used away from the curve.
  double far_value(double x, double y) const {
    const double n = std::sqrt(1.0 + end_slope * end_slope);
    const double px = std::abs(x), py = y - apex;
    const double along = (px + end_slope * py) / n;
    const double d = along >= 0 ? std::abs(py - end_slope * px) / n : std::hypot(px, py);
    return profile.value(sign_of(y - apex - end_slope * px) * d);
  }

  // Profile on the Fermi slice x1 with explicit shift s.
  double slice_value(double x1, double y1, double s) const {
    const double eta = tube_cutoff(y1, chart.d(x1));
    const double near = eta > 0.0 ? profile.value(y1 - s) : 0.0;
    if (eta == 1.0) return near;
    const Point p = fermi_forward_unchecked(chart, x1, y1);
    return eta * near + (1.0 - eta) * far_value(p.x, p.y);
  }

  std::optional<FermiCoords> coords(double x, double y) const {
    const double gap = y - chart.graph.eval(x).f;
    if (std::abs(gap) >= max_width * slope_factor) return std::nullopt;
    return try_fermi_inverse(chart, x, y);
  }

  // H_1: heteroclinic across the lower curve, planar continuation outside the tube.
  double H1(double x, double y) const {
    const auto c = coords(x, y);
    if (!c) return far_value(x, y);
    return slice_value(c->x1, c->y1, mod(c->x1));
  }

  double operator()(double x, double y) const { return H1(x, y) + H1(x, -y) - 1.0; }
};

inline UStar build_u_star(const FermiChart& chart, const HeteroclinicProfile& prof, Modulation mod = {}) {
  UStar u;
  u.chart = chart;
  u.profile = prof;
  u.mod = std::move(mod);
  for (double w : chart.width) u.max_width = std::max(u.max_width, w);
  u.slope_factor = std::sqrt(1.0 + chart.graph.sup_fp() * chart.graph.sup_fp());
  const auto& g = chart.graph;
  u.end_slope = g.fp.back();
  u.apex = g.f.back() - u.end_slope * g.xs.back();
  return u;
}

inline UStar build_u_star(const TodaSolution& t, const HeteroclinicProfile& prof, double x_max, Modulation mod = {},
                          const TubeParams& tp = {}) {
  return build_u_star(make_chart(toda_graph(t, x_max), t.eps, tp), prof, std::move(mod));
}

// ---------- residual ----------

// Interior Laplacian on a field, mirrored across symmetric edges; order 2 or 4.
// Nodes within order/2 of a non-mirrored edge are set to NaN.
inline ScalarField2D laplacian(const ScalarField2D& u, int order = 2) {
  if (order != 2 && order != 4) throw ConfigError("stencil order must be 2 or 4");
  const int w = order / 2;
  ScalarField2D L = u;
  const double ih2 = 1.0 / (u.h * u.h);
  auto valid = [&](int i, int j) {
    int ii = i - w, jj = j - w, iu = i + w, ju = j + w;
    return u.resolve(ii, jj) && u.resolve(iu, ju);
  };
  auto val = [&](int i, int j) {
    u.resolve(i, j);
    return u(i, j);
  };
  parallel_for(u.ny, [&](int jb, int je) {
    for (int j = jb; j < je; ++j)
      for (int i = 0; i < u.nx; ++i) {
        if (!valid(i, j)) {
          L(i, j) = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        const double c = u(i, j);
        if (order == 2) {
          L(i, j) = (val(i - 1, j) + val(i + 1, j) + val(i, j - 1) + val(i, j + 1) - 4 * c) * ih2;
        } else {
          const double sx = -val(i - 2, j) + 16 * val(i - 1, j) + 16 * val(i + 1, j) - val(i + 2, j);
          const double sy = -val(i, j - 2) + 16 * val(i, j - 1) + 16 * val(i, j + 1) - val(i, j + 2);
          L(i, j) = (sx + sy - 60 * c) * ih2 / 12.0;
        }
      }
  });
  return L;
}

// E(u) = Lap_h u - F'(u); invalid ring nodes are NaN.
inline ScalarField2D residual(const ScalarField2D& u, const DoubleWellPotential& p, int order = 2) {
  if (u.h * p.alpha0() > 0.5) throw ResolutionError("residual: h * alpha0 > 0.5");
  ScalarField2D E = laplacian(u, order);
  for (std::size_t k = 0; k < E.v.size(); ++k)
    if (std::isfinite(E.v[k])) E.v[k] -= p.eval(u.v[k]).dF;
  return E;
}

inline FieldFn grid_function(const ScalarField2D& f) {
  return [&f](double x, double y) {
    const double v = f.interpolate(x, y);
    if (!std::isfinite(v)) throw CoverageError("quadrature slab exits the valid grid");
    return v;
  };
}

// ---------- parallel / orthogonal decomposition ----------

struct SlabRule {
  double spacing = 0.05;
  double negligible = 1e-16;  // skip nodes where H' falls below this fraction of H'(0)
};

struct ErrorProjection {
  std::array<FermiChart, 2> charts;
  HeteroclinicProfile profile;
  Modulation mod;
  FieldFn E;
  std::vector<double> xs;
  std::array<std::vector<double>, 2> coef;  // c(x1) = int E rho H' / int rho^2 H'^2

  double shift(int i, double x1) const {
    const double s = mod(x1);
    return charts[i].graph.side == GraphSide::Lower ? s : -s;
  }

  double parallel(double x, double y) const {
    double r = 0.0;
    for (int i = 0; i < 2; ++i) {
      const auto c = try_fermi_inverse(charts[i], x, y);
      if (!c) continue;
      const double d = charts[i].d(c->x1);
      if (std::abs(c->y1) >= 0.75 * d) continue;
      if (std::abs(c->x1) > xs.back()) continue;
      const EvenSamples cs{xs, coef[i], true};
      r += cs(c->x1) * slab_weight(c->y1, d) * profile.deriv(c->y1 - shift(i, c->x1));
    }
    return r;
  }

  double perp(double x, double y) const { return E(x, y) - parallel(x, y); }

  FieldFn perp_fn() const {
    return [self = *this](double x, double y) { return self.perp(x, y); };
  }
};

// Per-slice coefficients of E along rho H'; xs are x1 samples (uniform, starting at 0).
inline ErrorProjection project_error(FieldFn E, const FermiChart& ch1, const FermiChart& ch2, const Modulation& mod,
                                     const HeteroclinicProfile& prof, std::vector<double> xs,
                                     const SlabRule& rule = {}) {
  ErrorProjection P;
  P.charts = {ch1, ch2};
  P.profile = prof;
  P.mod = mod;
  P.E = std::move(E);
  P.xs = std::move(xs);
  const double hp0 = prof.deriv(0.0);
  for (int i = 0; i < 2; ++i) {
    P.coef[i].assign(P.xs.size(), 0.0);
    const FermiChart& ch = P.charts[i];
    parallel_for(int(P.xs.size()), [&](int kb, int ke) {
      for (int k = kb; k < ke; ++k) {
        const double x1 = P.xs[std::size_t(k)];
        const double d = ch.d(x1), s = P.shift(i, x1);
        const int m = int(std::ceil(0.75 * d / rule.spacing));
        const double dq = 0.75 * d / m;
        double num = 0.0, den = 0.0;
        for (int q = -m; q <= m; ++q) {
          const double y1 = q * dq;
          const double phi = slab_weight(y1, d) * prof.deriv(y1 - s);
          if (phi <= rule.negligible * hp0) continue;
          const Point p = fermi_forward_unchecked(ch, x1, y1);
          num += P.E(p.x, p.y) * phi;
          den += phi * phi;
        }
        P.coef[i][std::size_t(k)] = num / den;
      }
    });
  }
  return P;
}

}  // namespace fourend
