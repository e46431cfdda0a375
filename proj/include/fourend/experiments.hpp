#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fourend/approx.hpp"
#include "fourend/diagnostics.hpp"
#include "fourend/solver.hpp"
#include "json.hpp"

namespace fourend {

struct FourEndReport {
  double eps = 0, L = 0, M = 0, h = 0;
  int newton_iterations = 0;
  std::vector<double> history;
  double sup_residual_ubar = 0;   // 5-point residual of u_bar
  double sup_u_minus_ubar = 0;
  AngleFit angle;
  double ham_y_spread = 0;
  double ham_x0 = 0, ham_far = 0, ham_target = 0;  // target 2 e_F cos(theta)
  double modulation_sup = 0;
  double orthogonality_defect = 0;
  TodaComparisonReport toda;
  double lambda_sup = 0, lhs_sup = 0, rhs_sup = 0;
  double center_depth = 0;  // f(0) - q(0)
  MonotonicityReport monotonicity;
  DecayFit decay;

  nlohmann::json to_json() const {
    return {{"eps", eps},
            {"L", L},
            {"M", M},
            {"h", h},
            {"newton_iterations", newton_iterations},
            {"residual_history", history},
            {"sup_residual_ubar", sup_residual_ubar},
            {"sup_u_minus_ubar", sup_u_minus_ubar},
            {"slope", angle.slope},
            {"theta", angle.theta},
            {"hamiltonian_y_spread", ham_y_spread},
            {"hamiltonian_x0", ham_x0},
            {"hamiltonian_far", ham_far},
            {"hamiltonian_target", ham_target},
            {"modulation_sup", modulation_sup},
            {"orthogonality_defect", orthogonality_defect},
            {"toda", toda.to_json()},
            {"lambda_sup", lambda_sup},
            {"toda_lhs_sup", lhs_sup},
            {"toda_rhs_sup", rhs_sup},
            {"center_depth", center_depth},
            {"monotonicity", monotonicity.to_json()},
            {"decay_rate", decay.beta}};
  }
};

inline NodalGraph truncate_graph(const NodalGraph& g, double x_max) {
  NodalGraph t = g;
  std::size_t n = 0;
  while (n < g.xs.size() && g.xs[n] <= x_max + 1e-9) ++n;
  t.xs.resize(n);
  t.f.resize(n);
  t.fp.resize(n);
  t.fpp.resize(n);
  return t;
}

inline std::vector<double> uniform_samples(double x_max, double dx) {
  std::vector<double> xs;
  const int n = int(std::floor(x_max / dx + 1e-9));
  for (int i = 0; i <= n; ++i) xs.push_back(i * dx);
  return xs;
}

// All diagnostics of a converged four-end field.
inline FourEndReport diagnose_four_end(const FourEndSetup& s, const SolveResult& r, const DoubleWellPotential& p,
                                       const HeteroclinicProfile& prof, double tau = 0.1) {
  const ScalarField2D& u = r.u;
  const HeteroclinicConstants k = heteroclinic_constants(prof);
  FourEndReport rep;
  rep.eps = s.cfg.eps;
  rep.L = u.L();
  rep.M = u.M();
  rep.h = u.h;
  rep.newton_iterations = r.iterations;
  rep.history = r.history;
  rep.sup_residual_ubar = residual(s.init, p, 2).sup_abs();
  rep.sup_u_minus_ubar = sup_difference(u, s.init);

  const NodalGraph g = extract_nodal_graph(u);
  rep.angle = angle_of(g, u.L());
  const HamiltonianProfile hy = hamiltonian_profile(u, p, SliceDirection::YSlices);
  rep.ham_y_spread = relative_spread(hy, g.f.back() + 6.0, 0.0);
  const HamiltonianProfile hx = hamiltonian_profile(u, p, SliceDirection::XSlices);
  rep.ham_x0 = slice_value(hx, 0.0);
  rep.ham_far = hx.value.back();
  rep.ham_target = 2.0 * k.e_F * std::cos(rep.angle.theta);

  const double x_max = u.L() - 10.0;
  const ModulationResult mod = compute_modulation(u, s.ubar, uniform_samples(x_max, g.dx()));
  for (double v : mod.h.v) rep.modulation_sup = std::max(rep.modulation_sup, std::abs(v));
  rep.orthogonality_defect = mod.max_orthogonality_defect;
  const NodalGraph gc = truncate_graph(g, x_max);
  rep.toda = compare_to_toda(gc, mod.h, s.toda, tau);
  const TodaResidual tr = toda_residual(gc, mod.h, s.toda.c0, s.toda.alpha0, s.toda.eps);
  rep.lambda_sup = tr.sup_lambda;
  rep.lhs_sup = tr.sup_lhs;
  rep.rhs_sup = tr.sup_rhs;
  rep.center_depth = g.f[0] - s.toda.q1(0.0);
  rep.monotonicity = monotonicity_check(u);
  rep.decay = exp_decay_fit(u, g);
  return rep;
}

inline double default_length(double eps) { return std::ceil(8.0 / eps - 1e-9); }

// Least-squares exponent of v ~ C eps^k.
inline double fitted_exponent(const std::vector<double>& eps, const std::vector<double>& v) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    x.push_back(std::log(eps[i]));
    y.push_back(std::log(v[i]));
  }
  return fit_line(x, y).slope;
}

}  // namespace fourend
