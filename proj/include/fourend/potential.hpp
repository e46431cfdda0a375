#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <string>
#include <vector>

#include "fourend/core.hpp"

namespace fourend {

enum class PotentialKind { StandardQuartic, UserPolynomial };

struct PotentialValues {
  double F = 0.0;
  double dF = 0.0;
  double d2F = 0.0;
};

// Even double-well potential F(u) = sum_k c_k u^k.
class DoubleWellPotential {
 public:
  static DoubleWellPotential standard_quartic() {
    return DoubleWellPotential(PotentialKind::StandardQuartic, {0.25, 0.0, -0.5, 0.0, 0.25});
  }

  static DoubleWellPotential user_polynomial(std::vector<double> coefficients) {
    return DoubleWellPotential(PotentialKind::UserPolynomial, std::move(coefficients));
  }

  PotentialKind kind() const { return kind_; }
  const std::vector<double>& coefficients() const { return c_; }

  // F and F' from the factored form (1 - u^2)^2 Q(u^2), accurate near the wells.
  PotentialValues eval(double u) const {
    PotentialValues v = raw(u);
    const double w = (1.0 - u) * (1.0 + u), u2 = u * u;
    double Q = 0.0, dQ = 0.0;
    for (std::size_t k = q_.size(); k-- > 0;) {
      dQ = dQ * u2 + Q;
      Q = Q * u2 + q_[k];
    }
    v.F = w * w * Q;
    v.dF = 2.0 * u * w * (w * dQ - 2.0 * Q);
    return v;
  }

  double F(double u) const { return eval(u).F; }
  double dF(double u) const { return eval(u).dF; }
  double d2F(double u) const { return eval(u).d2F; }

  double alpha0() const { return std::sqrt(d2F(1.0)); }

 private:
  DoubleWellPotential(PotentialKind kind, std::vector<double> c) : kind_(kind), c_(std::move(c)) {
    validate();
    factor();
  }

  PotentialValues raw(double u) const {
    PotentialValues v;
    for (std::size_t k = c_.size(); k-- > 0;) {
      v.d2F = v.d2F * u + 2.0 * v.dF;
      v.dF = v.dF * u + v.F;
      v.F = v.F * u + c_[k];
    }
    return v;
  }

  // P(v) = sum c_2m v^m has a double root at v = 1; Q = P / (v - 1)^2.
  void factor() {
    std::vector<double> p;
    for (std::size_t k = 0; k < c_.size(); k += 2) p.push_back(c_[k]);
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<double> d(p.size() - 1);
      double carry = 0.0;
      for (std::size_t m = p.size(); m-- > 1;) {
        carry = carry + p[m];
        d[m - 1] = carry;
      }
      p = std::move(d);
    }
    q_ = std::move(p);
  }

  void validate() const {
    if (c_.empty()) throw ConstructionError("potential: no coefficients");
    double scale = 0.0;
    for (double c : c_) {
      if (!std::isfinite(c)) throw ConstructionError("potential: non-finite coefficient");
      scale = std::max(scale, std::abs(c));
    }
    const double tol = 1e-12 * std::max(scale, 1.0);
    for (std::size_t k = 1; k < c_.size(); k += 2)
      if (std::abs(c_[k]) > tol) throw ConstructionError("potential: F is not even");
    if (c_.size() < 5) throw ConstructionError("potential: degree below 4");
    if (std::abs(raw(1.0).F) > tol) throw ConstructionError("potential: F(1) != 0");
    if (!(raw(1.0).d2F > 0.0)) throw ConstructionError("potential: F''(1) must be positive");
    if (std::abs(raw(0.0).d2F) <= tol) throw ConstructionError("potential: F''(0) must be nonzero");
    constexpr int n = 4000;
    for (int i = 1; i < n; ++i) {
      const double t = double(i) / n;
      if (!(raw(t).F > 0.0)) throw ConstructionError("potential: F must be positive on (-1,1)");
      if (!(raw(t).dF < 0.0)) throw ConstructionError("potential: F' must not vanish on (0,1)");
    }
  }

  PotentialKind kind_;
  std::vector<double> c_;
  std::vector<double> q_;
};

inline PotentialValues eval_potential(const DoubleWellPotential& p, double u) { return p.eval(u); }

struct HeteroclinicConstants {
  double alpha0 = 0.0;
  double a_F = 0.0;
  double e_F = 0.0;
};

// Odd heteroclinic H'' = F'(H), tabulated on x_i = -half_width + i*spacing.
class HeteroclinicProfile {
 public:
  HeteroclinicProfile() = default;

  const DoubleWellPotential& potential() const { return *pot_; }
  bool closed_form() const { return closed_form_; }
  double half_width() const { return half_width_; }
  double spacing() const { return dx_; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& H() const { return H_; }
  const std::vector<double>& Hprime() const { return Hp_; }
  double alpha0() const { return alpha0_; }
  double a_F() const { return a_F_; }
  double e_F() const { return e_F_; }

  double value(double t) const {
    if (closed_form_) return std::tanh(t / kSqrt2);
    const double a = std::abs(t);
    if (a >= half_width_) return sign_of(t) * (1.0 - a_F_ * std::exp(-alpha0_ * a));
    return hermite(t, false);
  }

  double deriv(double t) const {
    if (closed_form_) {
      const double s = 1.0 / std::cosh(t / kSqrt2);
      return s * s / kSqrt2;
    }
    const double a = std::abs(t);
    if (a >= half_width_) return alpha0_ * a_F_ * std::exp(-alpha0_ * a);
    return hermite(t, true);
  }

  double second(double t) const { return pot_->dF(value(t)); }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "x,H,Hprime\n" << std::setprecision(17);
    for (std::size_t i = 0; i < x_.size(); ++i) out << x_[i] << ',' << H_[i] << ',' << Hp_[i] << '\n';
  }

 private:
  friend HeteroclinicProfile solve_heteroclinic(const DoubleWellPotential&, double, double);
  friend HeteroclinicConstants heteroclinic_constants(const HeteroclinicProfile&);
  friend HeteroclinicProfile profile_from_samples(const DoubleWellPotential&, std::vector<double>,
                                                  std::vector<double>, std::vector<double>);

  double hermite(double t, bool derivative) const {
    const double s = (t - x_.front()) / dx_;
    int i = std::clamp(int(std::floor(s)), 0, int(x_.size()) - 2);
    const double u = s - i;
    const double y0 = H_[i], y1 = H_[i + 1];
    const double m0 = Hp_[i] * dx_, m1 = Hp_[i + 1] * dx_;
    if (!derivative) {
      const double u2 = u * u, u3 = u2 * u;
      return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1;
    }
    const double u2 = u * u;
    return ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * m1) / dx_;
  }

  std::shared_ptr<const DoubleWellPotential> pot_;
  bool closed_form_ = false;
  double half_width_ = 0.0;
  double dx_ = 0.0;
  std::vector<double> x_, H_, Hp_;
  double alpha0_ = 0.0, a_F_ = 0.0, e_F_ = 0.0;
};

inline HeteroclinicConstants heteroclinic_constants(const HeteroclinicProfile& prof) {
  HeteroclinicConstants k;
  k.alpha0 = prof.potential().alpha0();
  // Window [hw/2, hw - 2], cut where 1 - H falls to round-off level.
  constexpr double min_gap = 1e-10;
  double hi = prof.half_width_ - 2.0;
  for (std::size_t i = 0; i < prof.x_.size(); ++i)
    if (prof.x_[i] > 0 && !(1.0 - prof.H_[i] >= min_gap)) {
      hi = std::min(hi, prof.x_[i] - prof.dx_);
      break;
    }
  const double lo = std::min(prof.half_width_ / 2, hi - 4.0 / k.alpha0);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < prof.x_.size(); ++i) {
    const double x = prof.x_[i];
    if (x >= lo && x <= hi) {
      xs.push_back(x);
      ys.push_back(std::log(1.0 - prof.H_[i]) + k.alpha0 * x);
    }
  }
  if (xs.size() < 8) throw PoorlyResolvedError("heteroclinic tail window too short");
  double mean = 0;
  for (double y : ys) mean += y;
  mean /= double(ys.size());
  double ss = 0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  if (std::sqrt(ss / double(ys.size())) > 5e-3)
    throw PoorlyResolvedError("heteroclinic tail fit residual too large");
  k.a_F = std::exp(mean);
  double e = 0;
  const auto& hp = prof.Hp_;
  for (std::size_t i = 0; i < hp.size(); ++i) {
    const double w = (i == 0 || i + 1 == hp.size()) ? 0.5 : 1.0;
    e += w * hp[i] * hp[i];
  }
  k.e_F = e * prof.dx_;
  return k;
}

// Builds a profile from external samples (used to audit the tail fit).
inline HeteroclinicProfile profile_from_samples(const DoubleWellPotential& p, std::vector<double> x,
                                                std::vector<double> H, std::vector<double> Hp) {
  HeteroclinicProfile prof;
  prof.pot_ = std::make_shared<const DoubleWellPotential>(p);
  prof.dx_ = x[1] - x[0];
  prof.half_width_ = x.back();
  prof.x_ = std::move(x);
  prof.H_ = std::move(H);
  prof.Hp_ = std::move(Hp);
  prof.alpha0_ = p.alpha0();
  return prof;
}

inline HeteroclinicProfile solve_heteroclinic(const DoubleWellPotential& p, double half_width, double spacing) {
  const double alpha0 = p.alpha0();
  if (!(half_width >= 10.0 / alpha0)) throw DomainError("solve_heteroclinic: half_width below 10/alpha0");
  if (!(spacing > 0.0 && spacing * alpha0 < 0.2)) throw DomainError("solve_heteroclinic: spacing too large");
  constexpr int probes = 20000;
  for (int i = 1; i < probes; ++i)
    if (!(p.F(double(i) / probes) > 0.0)) throw DegeneratePotentialError("F vanishes inside (-1,1)");

  HeteroclinicProfile prof;
  prof.pot_ = std::make_shared<const DoubleWellPotential>(p);
  prof.alpha0_ = alpha0;
  prof.dx_ = spacing;
  const int n = int(std::ceil(half_width / spacing - 1e-9));
  prof.half_width_ = n * spacing;
  const int m = 2 * n + 1;
  prof.x_.resize(m);
  prof.H_.resize(m);
  prof.Hp_.resize(m);
  for (int i = 0; i < m; ++i) prof.x_[i] = (i - n) * spacing;

  if (p.kind() == PotentialKind::StandardQuartic) {
    prof.closed_form_ = true;
    for (int i = 0; i < m; ++i) {
      prof.H_[i] = std::tanh(prof.x_[i] / kSqrt2);
      prof.Hp_[i] = prof.deriv(prof.x_[i]);
    }
  } else {
    // RK4 on the first-order reduction H' = sqrt(2 F(H)).
    auto rhs = [&](double h) { return std::sqrt(2.0 * std::max(p.F(h), 0.0)); };
    constexpr int sub = 32;
    const double k = spacing / sub;
    double h = 0.0;
    prof.H_[n] = 0.0;
    prof.Hp_[n] = rhs(0.0);
    for (int i = 1; i <= n; ++i) {
      for (int s = 0; s < sub; ++s) {
        const double k1 = rhs(h);
        const double k2 = rhs(h + 0.5 * k * k1);
        const double k3 = rhs(h + 0.5 * k * k2);
        const double k4 = rhs(h + k * k3);
        h += k * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
      }
      prof.H_[n + i] = h;
      prof.H_[n - i] = -h;
      prof.Hp_[n + i] = prof.Hp_[n - i] = rhs(h);
    }
  }
  const auto c = heteroclinic_constants(prof);
  prof.a_F_ = c.a_F;
  prof.e_F_ = c.e_F;
  return prof;
}

// Constant of the reduced even Toda equation c q'' = -2 exp(2 alpha0 q),
// obtained by matching the interface interaction 2 alpha0^2 a_F^2 to e_F.
// For the quartic this is sqrt(2)/12, twice the constant of the two-component system.
inline double toda_reduced_constant(const HeteroclinicConstants& k) {
  return k.e_F / (k.alpha0 * k.alpha0 * k.a_F * k.a_F);
}

}  // namespace fourend
