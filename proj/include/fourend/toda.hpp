#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "fourend/core.hpp"
#include "json.hpp"

namespace fourend {

struct TodaSamples {
  std::vector<double> x, q1, q1p;
};

// Even solution of c0 q1'' = -2 exp(2 alpha0 q1), q2 = -q1.
struct TodaSolution {
  double eps = 0.0;
  double c0 = 0.0;
  double alpha0 = 0.0;
  double a = 0.0;
  std::optional<TodaSamples> samples;

  double q1(double x) const { return a - log_cosh(alpha0 * eps * x) / alpha0; }
  double q1p(double x) const { return -eps * std::tanh(alpha0 * eps * x); }
  double q1pp(double x) const {
    const double s = 1.0 / std::cosh(std::min(std::abs(alpha0 * eps * x), 700.0));
    return -alpha0 * eps * eps * s * s;
  }
  double q2(double x) const { return -q1(x); }

  double first_integral(double q, double qp) const {
    return c0 * qp * qp / 2.0 + std::exp(2.0 * alpha0 * q) / alpha0;
  }

  void write_csv(const std::string& path, double half_width, double spacing) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "x,q1,q2\n" << std::setprecision(17);
    const int n = int(std::llround(half_width / spacing));
    for (int i = -n; i <= n; ++i) {
      const double x = i * spacing;
      out << x << ',' << q1(x) << ',' << q2(x) << '\n';
    }
  }
};

inline TodaSolution toda_closed_form(double eps, double c0, double alpha0) {
  if (!(eps > 0.0) || !(c0 > 0.0) || !(alpha0 > 0.0))
    throw DomainError("toda_closed_form: parameters must be positive");
  TodaSolution t;
  t.eps = eps;
  t.c0 = c0;
  t.alpha0 = alpha0;
  t.a = std::log(c0 * alpha0 * eps * eps / 2.0) / (2.0 * alpha0);
  return t;
}

inline TodaSolution integrate_toda(double eps, double c0, double alpha0, double half_width, double spacing) {
  TodaSolution t = toda_closed_form(eps, c0, alpha0);
  if (!(half_width > 0.0) || !(spacing > 0.0)) throw DomainError("integrate_toda: bad grid");
  const int n = int(std::ceil(half_width / spacing - 1e-9));
  TodaSamples s;
  s.x.resize(n + 1);
  s.q1.resize(n + 1);
  s.q1p.resize(n + 1);
  double q = t.a, v = 0.0;
  auto acc = [&](double qq) { return -2.0 * std::exp(2.0 * alpha0 * qq) / c0; };
  const double I0 = t.first_integral(q, v);
  double drift = 0.0;
  for (int i = 0; i <= n; ++i) {
    s.x[i] = i * spacing;
    s.q1[i] = q;
    s.q1p[i] = v;
    drift = std::max(drift, std::abs(t.first_integral(q, v) - I0) / I0);
    if (i == n) break;
    const double k1q = v, k1v = acc(q);
    const double k2q = v + 0.5 * spacing * k1v, k2v = acc(q + 0.5 * spacing * k1q);
    const double k3q = v + 0.5 * spacing * k2v, k3v = acc(q + 0.5 * spacing * k2q);
    const double k4q = v + spacing * k3v, k4v = acc(q + spacing * k3q);
    q += spacing * (k1q + 2 * k2q + 2 * k3q + k4q) / 6.0;
    v += spacing * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0;
  }
  if (drift > 1e-6) throw AccuracyError("integrate_toda: first-integral drift above 1e-6; reduce spacing");
  t.samples = std::move(s);
  return t;
}

inline double toda_first_integral_drift(const TodaSolution& t) {
  if (!t.samples) return 0.0;
  const auto& s = *t.samples;
  const double I0 = t.first_integral(s.q1[0], s.q1p[0]);
  double d = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i)
    d = std::max(d, std::abs(t.first_integral(s.q1[i], s.q1p[i]) - I0) / I0);
  return d;
}

inline TodaSolution rescale_toda(const TodaSolution& base, double eps) {
  if (!(eps > 0.0)) throw DomainError("rescale_toda: eps must be positive");
  if (std::abs(base.eps - 1.0) > 1e-14) throw DomainError("rescale_toda: base must have eps = 1");
  TodaSolution t = base;
  t.eps = eps;
  const double shift = -std::log(1.0 / eps) / base.alpha0;
  t.a = base.a + shift;
  if (base.samples) {
    TodaSamples s = *base.samples;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      s.x[i] /= eps;
      s.q1[i] += shift;
      s.q1p[i] *= eps;
    }
    t.samples = std::move(s);
  }
  return t;
}

struct Asymptote {
  double slope = 0.0;
  double intercept = 0.0;  // b in q1(x) ~ -(eps |x| + b)
};

inline Asymptote asymptote(const TodaSolution& t, double x_begin = -1.0, double x_end = -1.0) {
  if (x_begin < 0) x_begin = 20.0 / t.eps;
  if (x_end < 0) x_end = 30.0 / t.eps;
  if (x_end - x_begin < 5.0 / t.eps) throw RangeError("asymptote: fit window shorter than 5/eps");
  constexpr int n = 401;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = x_begin + (x_end - x_begin) * i / (n - 1);
    ys[i] = t.q1(xs[i]);
  }
  const LineFit f = fit_line(xs, ys);
  return {f.slope, -f.intercept};
}

inline nlohmann::json scattering_record(const TodaSolution& t) {
  const Asymptote as = asymptote(t);
  return {{"eps", t.eps}, {"slope", as.slope}, {"intercept", as.intercept}, {"q1_at_0", t.q1(0.0)}};
}

}  // namespace fourend
