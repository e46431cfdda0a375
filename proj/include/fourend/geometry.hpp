#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fourend/core.hpp"
#include "fourend/toda.hpp"

namespace fourend {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Four oriented affine lines {r_j e_j^perp + s e_j} with cutoff radius R.
struct HalfLineConfig {
  std::array<double, 4> r{};
  std::array<double, 4> theta{};
  double R = 0.0;

  Point e(int j) const { return {std::cos(theta[j]), std::sin(theta[j])}; }
  Point eperp(int j) const { return {-std::sin(theta[j]), std::cos(theta[j])}; }
  double s(int j) const { return std::sqrt(R * R - r[j] * r[j]); }
  // Start of the half-line lambda_j^+ on the circle of radius R.
  Point anchor(int j) const {
    const Point a = e(j), b = eperp(j);
    return {r[j] * b.x + s(j) * a.x, r[j] * b.y + s(j) * a.y};
  }
};

inline double ray_distance(Point p, Point u, Point q, Point v) {
  const double det = u.x * (-v.y) - u.y * (-v.x);
  const double dx = q.x - p.x, dy = q.y - p.y;
  if (std::abs(det) > 1e-14) {
    const double s = (dx * (-v.y) - dy * (-v.x)) / det;
    const double t = (u.x * dy - u.y * dx) / det;
    if (s >= 0 && t >= 0) return 0.0;
  }
  auto point_ray = [](Point a, Point o, Point d) {
    const double t = std::max(0.0, (a.x - o.x) * d.x + (a.y - o.y) * d.y);
    return std::hypot(a.x - o.x - t * d.x, a.y - o.y - t * d.y);
  };
  return std::min(point_ray(p, q, v), point_ray(q, p, u));
}

inline double min_half_angle(const HalfLineConfig& c) {
  double g = c.theta[0] + 2 * kPi - c.theta[3];
  for (int j = 0; j < 3; ++j) g = std::min(g, c.theta[j + 1] - c.theta[j]);
  return 0.5 * g;
}

inline void validate_config(const HalfLineConfig& c) {
  for (int j = 0; j < 3; ++j)
    if (!(c.theta[j] < c.theta[j + 1])) throw ConfigError("half-line angles are not ordered");
  if (!(c.theta[3] < 2 * kPi + c.theta[0])) throw ConfigError("half-line angles are not ordered");
  for (int j = 0; j < 4; ++j)
    if (!(c.R > std::abs(c.r[j]))) throw ConfigError("R must exceed every offset |r_j|");
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (!(ray_distance(c.anchor(i), c.e(i), c.anchor(j), c.e(j)) > 4.0))
        throw ConfigError("half-lines closer than 4 outside B_R; increase R");
}

// Mirror-symmetric configuration: lines y = +-tan(theta) x +- offset.
inline HalfLineConfig make_halfline_config(double theta, double R, double offset = 0.0) {
  if (!(theta > 0.0 && theta < kPi / 2)) throw ConfigError("theta must lie in (0, pi/2)");
  HalfLineConfig c;
  c.theta = {theta, kPi - theta, theta + kPi, 2 * kPi - theta};
  const double r = offset * std::cos(theta);
  c.r = {r, -r, r, -r};
  c.R = R;
  validate_config(c);
  return c;
}

enum class GraphSide { Lower, Upper };

struct GraphPoint {
  double f = 0.0, fp = 0.0, fpp = 0.0;
};

// Curve y = f(x) on a uniform grid. With even = true only x >= 0 is stored.
struct NodalGraph {
  std::vector<double> xs, f, fp, fpp;
  GraphSide side = GraphSide::Lower;
  bool even = true;

  double dx() const { return xs[1] - xs[0]; }

  GraphPoint eval(double x) const {
    double sgn = 1.0;
    if (even && x < 0) {
      x = -x;
      sgn = -1.0;
    }
    const int n = int(xs.size());
    GraphPoint g;
    if (x >= xs.back()) {
      g.f = f.back() + fp.back() * (x - xs.back());
      g.fp = fp.back();
      g.fpp = 0.0;
    } else if (x <= xs.front()) {
      g.f = f.front() + fp.front() * (x - xs.front());
      g.fp = fp.front();
      g.fpp = 0.0;
    } else {
      const double h = dx();
      const double s = (x - xs.front()) / h;
      const int i = std::clamp(int(std::floor(s)), 0, n - 2);
      const double u = s - i, u2 = u * u, u3 = u2 * u;
      const double y0 = f[i], y1 = f[i + 1], m0 = fp[i] * h, m1 = fp[i + 1] * h;
      g.f = (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1;
      g.fp = ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * m1) / h;
      g.fpp = ((12 * u - 6) * y0 + (6 * u - 4) * m0 + (-12 * u + 6) * y1 + (6 * u - 2) * m1) / (h * h);
    }
    g.fp *= sgn;
    return g;
  }

  double sup_fp() const {
    double m = 0;
    for (double v : fp) m = std::max(m, std::abs(v));
    return m;
  }
  double sup_fpp() const {
    double m = 0;
    for (double v : fpp) m = std::max(m, std::abs(v));
    return m;
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "x,f,fprime,fsecond\n" << std::setprecision(17);
    for (std::size_t i = 0; i < xs.size(); ++i)
      out << xs[i] << ',' << f[i] << ',' << fp[i] << ',' << fpp[i] << '\n';
  }
};

// Centered differences; mirror at x = 0 for even graphs, one-sided at the ends.
inline void graph_derivatives(NodalGraph& g) {
  const int n = int(g.xs.size());
  if (n < 3) throw RangeError("graph needs at least three samples");
  const double h = g.dx();
  g.fp.assign(n, 0.0);
  g.fpp.assign(n, 0.0);
  auto at = [&](int i) {
    if (g.even && i < 0) return g.f[-i];
    return g.f[i];
  };
  for (int i = 0; i < n; ++i) {
    if (i > 0 && i < n - 1) {
      g.fp[i] = (g.f[i + 1] - g.f[i - 1]) / (2 * h);
      g.fpp[i] = (g.f[i + 1] - 2 * g.f[i] + g.f[i - 1]) / (h * h);
    } else if (i == 0 && g.even && std::abs(g.xs[0]) < 1e-12) {
      g.fp[0] = 0.0;
      g.fpp[0] = (2 * at(1) - 2 * at(0)) / (h * h);
    } else if (i == 0) {
      g.fp[0] = (-3 * g.f[0] + 4 * g.f[1] - g.f[2]) / (2 * h);
      g.fpp[0] = (g.f[0] - 2 * g.f[1] + g.f[2]) / (h * h);
    } else {
      g.fp[i] = (3 * g.f[i] - 4 * g.f[i - 1] + g.f[i - 2]) / (2 * h);
      g.fpp[i] = (g.f[i] - 2 * g.f[i - 1] + g.f[i - 2]) / (h * h);
    }
  }
}

inline NodalGraph graph_from_samples(std::vector<double> xs, std::vector<double> f, GraphSide side,
                                     bool even = true) {
  NodalGraph g;
  g.xs = std::move(xs);
  g.f = std::move(f);
  g.side = side;
  g.even = even;
  graph_derivatives(g);
  return g;
}

template <class Fn>
NodalGraph graph_from_function(double x_begin, double x_end, double spacing, Fn&& fn, GraphSide side,
                               bool even) {
  NodalGraph g;
  g.side = side;
  g.even = even;
  const int n = int(std::llround((x_end - x_begin) / spacing));
  for (int i = 0; i <= n; ++i) {
    const double x = x_begin + i * spacing;
    const GraphPoint p = fn(x);
    g.xs.push_back(x);
    g.f.push_back(p.f);
    g.fp.push_back(p.fp);
    g.fpp.push_back(p.fpp);
  }
  return g;
}

inline NodalGraph toda_graph(const TodaSolution& t, double x_max, double spacing = 0.05) {
  return graph_from_function(
      0.0, x_max, spacing, [&](double x) { return GraphPoint{t.q1(x), t.q1p(x), t.q1pp(x)}; },
      GraphSide::Lower, true);
}

inline NodalGraph mirrored(const NodalGraph& g) {
  NodalGraph m = g;
  for (auto& v : m.f) v = -v;
  for (auto& v : m.fp) v = -v;
  for (auto& v : m.fpp) v = -v;
  m.side = g.side == GraphSide::Lower ? GraphSide::Upper : GraphSide::Lower;
  return m;
}

struct TubeParams {
  double tau = 0.1;
  double A = 4 * 0.1 + 1;
  double focal_fraction = 0.9;
};

// Width d(x) on the graph samples: explicit lower bound for the maximal tube,
// clamped below by 1 and above by a fraction of the minimal radius of curvature.
inline std::vector<double> tube_width(const NodalGraph& g, double eps, const TubeParams& tp = {}) {
  const double sup2 = g.sup_fpp();
  const std::size_t n = g.xs.size();
  std::vector<double> d(n);
  if (sup2 == 0.0) {
    double dist = INFINITY;
    for (double v : g.f) dist = std::min(dist, std::abs(v));
    for (auto& v : d) v = std::max(1.0, dist - 1.0);
    return d;
  }
  double wlog = -INFINITY;
  for (std::size_t i = 0; i < n; ++i)
    if (g.fpp[i] != 0.0)
      wlog = std::max(wlog, eps * tp.tau * log_cosh(g.xs[i]) + std::log(std::abs(g.fpp[i])));
  const double k = 1.0 / (2.0 * kSqrt2);
  const double cap = tp.focal_fraction / sup2;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = k / std::sqrt(sup2) + k * (tp.A * eps * log_cosh(g.xs[i]) + tp.A / (2 * tp.tau) * (-wlog));
    d[i] = std::max(1.0, std::min(v, cap));
  }
  return d;
}

struct FermiCoords {
  double x1 = 0.0;
  double y1 = 0.0;
};

struct FermiChart {
  NodalGraph graph;
  std::vector<double> width;

  double d(double x1) const {
    if (graph.even) x1 = std::abs(x1);
    const auto& xs = graph.xs;
    if (x1 <= xs.front()) return width.front();
    if (x1 >= xs.back()) return width.back();
    const double s = (x1 - xs.front()) / graph.dx();
    const int i = std::min(int(s), int(xs.size()) - 2);
    const double u = s - i;
    return (1 - u) * width[i] + u * width[i + 1];
  }
};

inline FermiChart make_chart(NodalGraph g, double eps, const TubeParams& tp = {}) {
  FermiChart ch;
  ch.width = tube_width(g, eps, tp);
  ch.graph = std::move(g);
  return ch;
}

inline FermiChart make_chart(NodalGraph g, std::vector<double> width) {
  FermiChart ch;
  ch.graph = std::move(g);
  ch.width = std::move(width);
  return ch;
}

inline Point fermi_forward_unchecked(const FermiChart& ch, double x1, double y1) {
  const GraphPoint g = ch.graph.eval(x1);
  const double s = std::sqrt(1.0 + g.fp * g.fp);
  return {x1 - g.fp * y1 / s, g.f + y1 / s};
}

inline Point fermi_forward(const FermiChart& ch, double x1, double y1) {
  if (!(std::abs(y1) < ch.d(x1))) throw TubeViolation("fermi_forward: |y1| >= d(x1)");
  return fermi_forward_unchecked(ch, x1, y1);
}

inline double fermi_jacobian(const FermiChart& ch, double x1, double y1) {
  const GraphPoint g = ch.graph.eval(x1);
  const double s = std::sqrt(1.0 + g.fp * g.fp);
  return s - y1 * g.fpp / (s * s);
}

// Nearest-point projection onto the graph; nullopt if it fails or leaves the tube.
inline std::optional<FermiCoords> try_fermi_inverse(const FermiChart& ch, double x, double y) {
  const auto& G = ch.graph;
  auto gfun = [&](double t, double& dg) {
    const GraphPoint p = G.eval(t);
    dg = 1.0 + p.fp * p.fp + (p.f - y) * p.fpp;
    return (t - x) + (p.f - y) * p.fp;
  };
  double r = std::abs(y - G.eval(x).f) + 1e-9;
  double lo = x - r, hi = x + r, dg = 0;
  for (int k = 0;; ++k) {
    if (gfun(lo, dg) <= 0.0 && gfun(hi, dg) >= 0.0) break;
    if (k == 6) return std::nullopt;
    r *= 2;
    lo = x - r;
    hi = x + r;
  }
  double t = x;
  for (int it = 0; it < 100; ++it) {
    const double g = gfun(t, dg);
    if (g == 0.0) break;
    if (g < 0) lo = t;
    else hi = t;
    double tn = t - g / dg;
    if (!(dg > 0.0) || !(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    const double step = std::abs(tn - t);
    t = tn;
    if (step <= 1e-15 * std::max(1.0, std::abs(t)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(t))) break;
  }
  gfun(t, dg);
  if (!(dg > 0.0)) return std::nullopt;
  const GraphPoint p = G.eval(t);
  const double y1 = (y - p.f) * std::sqrt(1.0 + p.fp * p.fp);
  if (!(std::abs(y1) < ch.d(t))) return std::nullopt;
  return FermiCoords{t, y1};
}

inline FermiCoords fermi_inverse(const FermiChart& ch, Point p) {
  const auto c = try_fermi_inverse(ch, p.x, p.y);
  if (!c) throw TubeViolation("fermi_inverse: point outside the tube or projection not unique");
  return *c;
}

// Roundtrip error of inverse(forward(.)) over random tube samples.
inline double injectivity_defect(const FermiChart& ch, double x_lo, double x_hi, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x_lo, x_hi), uy(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double x1 = ux(rng);
    const double y1 = uy(rng) * ch.d(x1) * (1 - 1e-9);
    const Point p = fermi_forward_unchecked(ch, x1, y1);
    const auto c = try_fermi_inverse(ch, p.x, p.y);
    if (!c) return INFINITY;
    worst = std::max(worst, std::hypot(c->x1 - x1, c->y1 - y1));
  }
  return worst;
}

}  // namespace fourend
