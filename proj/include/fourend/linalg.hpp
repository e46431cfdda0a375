#pragma once

#include <fftw3.h>

#include <cmath>
#include <functional>
#include <vector>

#include "fourend/core.hpp"

namespace fourend {

// Unknowns of a quarter-grid problem, stored so that a mirror (Neumann) edge
// sits at buffer index 0 in each direction. Nodes within `ring` of a
// non-mirrored edge are Dirichlet and excluded.
struct UnknownLayout {
  int nx = 0, ny = 0, ring = 1;
  bool even_x = false, even_y = false;
  int i_lo = 0, i_hi = 0, j_lo = 0, j_hi = 0;
  int nux = 0, nuy = 0;

  UnknownLayout() = default;
  UnknownLayout(int nx_, int ny_, int ring_, bool ex, bool ey) : nx(nx_), ny(ny_), ring(ring_), even_x(ex), even_y(ey) {
    i_lo = ex ? 0 : ring;
    i_hi = nx - 1 - ring;
    j_lo = ring;
    j_hi = ey ? ny - 1 : ny - 1 - ring;
    nux = i_hi - i_lo + 1;
    nuy = j_hi - j_lo + 1;
    if (nux < 2 || nuy < 2) throw ConfigError("grid too small for the stencil ring");
  }

  std::size_t size() const { return std::size_t(nux) * nuy; }
  int bx(int i) const { return i - i_lo; }
  int by(int j) const { return even_y ? j_hi - j : j - j_lo; }
  int gi(int bxi) const { return bxi + i_lo; }
  int gj(int byj) const { return even_y ? j_hi - byj : byj + j_lo; }
  std::size_t index(int i, int j) const { return std::size_t(by(j)) * nux + bx(i); }
  bool neumann_x() const { return even_x; }
  bool neumann_y() const { return even_y; }
  // Symmetrizing weight: 1/2 on each mirror edge.
  double weight(int bxi, int byj) const {
    double w = 1.0;
    if (even_x && bxi == 0) w *= 0.5;
    if (even_y && byj == 0) w *= 0.5;
    return w;
  }
};

// Applies (-Lap_h + c) in buffer coordinates with mirror ghosts on Neumann
// edges and homogeneous Dirichlet ghosts (odd reflection beyond the
// boundary node for order 4). Not weighted.
class ShiftedLaplacian {
 public:
  ShiftedLaplacian(const UnknownLayout& lay, double h, int order) : lay_(lay), h_(h), order_(order) {
    g_ = order / 2;
    px_ = lay.nux + 2 * g_;
    pad_.assign(std::size_t(px_) * (lay.nuy + 2 * g_), 0.0);
  }

  void apply(const std::vector<double>& v, const std::vector<double>& c, std::vector<double>& out) {
    const int nux = lay_.nux, nuy = lay_.nuy, g = g_;
    auto P = [&](int a, int b) -> double& { return pad_[std::size_t(b + g) * px_ + (a + g)]; };
    for (int b = 0; b < nuy; ++b)
      for (int a = 0; a < nux; ++a) P(a, b) = v[std::size_t(b) * nux + a];
    // Dirichlet edges: boundary node zero, outer ghost by odd reflection.
    for (int b = 0; b < nuy; ++b) {
      P(nux, b) = 0.0;
      if (g == 2) P(nux + 1, b) = -P(nux - 1, b);
      for (int k = 1; k <= g; ++k) P(-k, b) = lay_.neumann_x() ? P(k, b) : (k == 1 ? 0.0 : -P(0, b));
    }
    for (int a = -g; a < nux + g; ++a) {
      P(a, nuy) = 0.0;
      if (g == 2) P(a, nuy + 1) = a >= 0 && a < nux ? -P(a, nuy - 1) : 0.0;
      for (int k = 1; k <= g; ++k) {
        if (lay_.neumann_y())
          P(a, -k) = P(a, k);
        else
          P(a, -k) = k == 1 || a < 0 || a >= nux ? 0.0 : -P(a, 0);
      }
    }
    if (lay_.neumann_x())
      for (int k = 1; k <= g; ++k)
        for (int kk = 1; kk <= g; ++kk) P(-k, -kk) = lay_.neumann_y() ? P(k, kk) : 0.0;
    const double ih2 = 1.0 / (h_ * h_);
    out.resize(v.size());
    parallel_for(nuy, [&](int bb, int be) {
      for (int b = bb; b < be; ++b)
        for (int a = 0; a < nux; ++a) {
          const std::size_t k = std::size_t(b) * nux + a;
          double lap;
          if (order_ == 2) {
            lap = (P(a - 1, b) + P(a + 1, b) + P(a, b - 1) + P(a, b + 1) - 4 * P(a, b)) * ih2;
          } else {
            const double sx = -P(a - 2, b) + 16 * P(a - 1, b) + 16 * P(a + 1, b) - P(a + 2, b);
            const double sy = -P(a, b - 2) + 16 * P(a, b - 1) + 16 * P(a, b + 1) - P(a, b + 2);
            lap = (sx + sy - 60 * P(a, b)) * ih2 / 12.0;
          }
          out[k] = -lap + c[k] * v[k];
        }
    });
  }

 private:
  UnknownLayout lay_;
  double h_;
  int order_, g_, px_;
  std::vector<double> pad_;
};

// Inverse of the spectral operator -Lap_h + sigma diagonalized by real
// trigonometric transforms matching the edge conditions.
class FastPoissonSolver {
 public:
  FastPoissonSolver(const UnknownLayout& lay, double h, double sigma, int order) : lay_(lay) {
    const int nx = lay.nux, ny = lay.nuy;
    buf_ = static_cast<double*>(fftw_malloc(sizeof(double) * lay.size()));
    auto kinds = [](bool neumann, fftw_r2r_kind& fwd, fftw_r2r_kind& inv) {
      fwd = neumann ? FFTW_REDFT01 : FFTW_RODFT00;
      inv = neumann ? FFTW_REDFT10 : FFTW_RODFT00;
    };
    fftw_r2r_kind fx, ix, fy, iy;
    kinds(lay.neumann_x(), fx, ix);
    kinds(lay.neumann_y(), fy, iy);
    fwd_ = fftw_plan_r2r_2d(ny, nx, buf_, buf_, fy, fx, FFTW_ESTIMATE);
    inv_ = fftw_plan_r2r_2d(ny, nx, buf_, buf_, iy, ix, FFTW_ESTIMATE);
    auto eig = [&](bool neumann, int n) {
      std::vector<double> e(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        const double th = neumann ? kPi * (k + 0.5) / n : kPi * (k + 1.0) / (n + 1);
        e[std::size_t(k)] = order == 2 ? (2 - 2 * std::cos(th)) / (h * h)
                                       : (30 - 32 * std::cos(th) + 2 * std::cos(2 * th)) / (12 * h * h);
      }
      return e;
    };
    const auto ex = eig(lay.neumann_x(), nx), ey = eig(lay.neumann_y(), ny);
    const double norm = (lay.neumann_x() ? 2.0 * nx : 2.0 * (nx + 1)) * (lay.neumann_y() ? 2.0 * ny : 2.0 * (ny + 1));
    scale_.resize(lay.size());
    for (int b = 0; b < ny; ++b)
      for (int a = 0; a < nx; ++a)
        scale_[std::size_t(b) * nx + a] = 1.0 / ((ex[std::size_t(a)] + ey[std::size_t(b)] + sigma) * norm);
  }

  FastPoissonSolver(const FastPoissonSolver&) = delete;
  FastPoissonSolver& operator=(const FastPoissonSolver&) = delete;

  ~FastPoissonSolver() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(buf_);
  }

  void solve(const std::vector<double>& r, std::vector<double>& z) {
    const std::size_t n = lay_.size();
    std::copy(r.begin(), r.end(), buf_);
    fftw_execute(fwd_);
    for (std::size_t k = 0; k < n; ++k) buf_[k] *= scale_[k];
    fftw_execute(inv_);
    z.assign(buf_, buf_ + n);
  }

 private:
  UnknownLayout lay_;
  double* buf_ = nullptr;
  fftw_plan fwd_{}, inv_{};
  std::vector<double> scale_;
};

struct MinresResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  double cond_estimate = 1.0;
};

// Preconditioned MINRES for symmetric A and symmetric positive definite M.
// apply_A(v, out), apply_Minv(r, out). Stops when the M^{-1}-norm residual
// drops below tol relative to the initial one.
inline MinresResult minres(const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply_A,
                           const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply_Minv,
                           const std::vector<double>& b, std::vector<double>& x, double tol, int max_iter) {
  const std::size_t n = b.size();
  auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * c[k];
    return s;
  };
  MinresResult res;
  x.assign(n, 0.0);
  std::vector<double> r1 = b, r2 = b, y, v(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0);
  apply_Minv(r1, y);
  double beta1 = dot(r1, y);
  if (beta1 < 0) throw SingularJacobian("minres: preconditioner is not positive definite");
  if (beta1 == 0) {
    res.converged = true;
    return res;
  }
  beta1 = std::sqrt(beta1);
  double oldb = 0, beta = beta1, dbar = 0, epsln = 0, phibar = beta1;
  double cs = -1, sn = 0, gmax = 0, gmin = INFINITY;
  for (int itn = 1; itn <= max_iter; ++itn) {
    const double s = 1.0 / beta;
    for (std::size_t k = 0; k < n; ++k) v[k] = s * y[k];
    apply_A(v, y);
    if (itn >= 2)
      for (std::size_t k = 0; k < n; ++k) y[k] -= (beta / oldb) * r1[k];
    const double alfa = dot(v, y);
    for (std::size_t k = 0; k < n; ++k) y[k] -= (alfa / beta) * r2[k];
    r1.swap(r2);
    r2 = y;
    apply_Minv(r2, y);
    oldb = beta;
    beta = dot(r2, y);
    if (beta < 0) throw SingularJacobian("minres: preconditioner is not positive definite");
    beta = std::sqrt(beta);
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    double gamma = std::hypot(gbar, beta);
    gamma = std::max(gamma, 1e-300);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar *= sn;
    const double denom = 1.0 / gamma;
    w1.swap(w2);
    w2.swap(w);
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) * denom;
      x[k] += phi * w[k];
    }
    gmax = std::max(gmax, gamma);
    gmin = std::min(gmin, gamma);
    res.iterations = itn;
    res.rel_residual = phibar / beta1;
    res.cond_estimate = gmax / gmin;
    if (res.cond_estimate > 1e14) throw SingularJacobian("minres: Jacobian numerically singular");
    if (res.rel_residual <= tol) {
      res.converged = true;
      break;
    }
    if (beta == 0.0) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace fourend
