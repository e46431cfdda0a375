#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include "fourend/core.hpp"
#include "json.hpp"

namespace fourend {

// Grid function on [x0, x0+(nx-1)h] x [y0, y0+(ny-1)h], row-major in y.
// even_x: mirror about x = x0 (requires x0 = 0); even_y: mirror about the top edge y = 0.
struct ScalarField2D {
  double x0 = 0.0, y0 = 0.0, h = 0.0;
  int nx = 0, ny = 0;
  bool even_x = false, even_y = false;
  double eps = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v;

  static ScalarField2D make(double x0, double y0, double h, int nx, int ny, bool even_x, bool even_y) {
    ScalarField2D f;
    f.x0 = x0;
    f.y0 = y0;
    f.h = h;
    f.nx = nx;
    f.ny = ny;
    f.even_x = even_x;
    f.even_y = even_y;
    f.v.assign(std::size_t(nx) * ny, 0.0);
    if (even_x && std::abs(x0) > 1e-12) throw ConfigError("even_x requires x0 = 0");
    if (even_y && std::abs(y0 + (ny - 1) * h) > 1e-9) throw ConfigError("even_y requires the top edge at y = 0");
    return f;
  }

  // Lower-right quarter [0, L] x [-M, 0] with both mirror flags.
  static ScalarField2D quarter(double L, double M, double h) {
    const int nx = int(std::llround(L / h)) + 1;
    const int ny = int(std::llround(M / h)) + 1;
    return make(0.0, -(ny - 1) * h, h, nx, ny, true, true);
  }

  double x(int i) const { return x0 + i * h; }
  double y(int j) const { return y0 + j * h; }
  double L() const { return x(nx - 1); }
  double M() const { return -y0; }
  double& operator()(int i, int j) { return v[std::size_t(j) * nx + i]; }
  double operator()(int i, int j) const { return v[std::size_t(j) * nx + i]; }

  bool same_grid(const ScalarField2D& o) const {
    return nx == o.nx && ny == o.ny && std::abs(h - o.h) < 1e-14 && std::abs(x0 - o.x0) < 1e-12 &&
           std::abs(y0 - o.y0) < 1e-12 && even_x == o.even_x && even_y == o.even_y;
  }

  // Index access across mirror edges; returns false if (i, j) is not representable.
  bool resolve(int& i, int& j) const {
    if (i < 0 && even_x) i = -i;
    if (j > ny - 1 && even_y) j = 2 * (ny - 1) - j;
    return i >= 0 && i < nx && j >= 0 && j < ny;
  }

  double at(int i, int j) const {
    if (!resolve(i, j)) throw CoverageError("field index outside the grid");
    return (*this)(i, j);
  }

  bool contains(double xx, double yy) const {
    if (even_x) xx = std::abs(xx);
    if (even_y && yy > 0) yy = -yy;
    const double tol = 1e-9 * h;
    return xx >= x0 - tol && xx <= L() + tol && yy >= y0 - tol && yy <= y(ny - 1) + tol;
  }

  // Six-point tensor Lagrange interpolation, mirrored across symmetric edges.
  double interpolate(double xx, double yy) const {
    if (!contains(xx, yy)) throw CoverageError("interpolation point outside the field");
    if (even_x) xx = std::abs(xx);
    if (even_y && yy > 0) yy = -yy;
    constexpr int K = 6;
    double wx[K], wy[K];
    int bx, by;
    stencil((xx - x0) / h, even_x ? -(nx - 1) : 0, nx - 1, bx, wx);
    stencil((yy - y0) / h, 0, even_y ? 2 * (ny - 1) : ny - 1, by, wy);
    double s = 0.0;
    for (int b = 0; b < K; ++b) {
      double row = 0.0;
      for (int a = 0; a < K; ++a) {
        int i = bx + a, j = by + b;
        resolve(i, j);
        row += wx[a] * (*this)(i, j);
      }
      s += wy[b] * row;
    }
    return s;
  }

  double sup_abs() const {
    double m = 0;
    for (double a : v)
      if (std::isfinite(a)) m = std::max(m, std::abs(a));
    return m;
  }

  nlohmann::json metadata() const {
    nlohmann::json j;
    j["L"] = L();
    j["M"] = M();
    j["h"] = h;
    j["x0"] = x0;
    j["y0"] = y0;
    j["nx"] = nx;
    j["ny"] = ny;
    j["symmetry"] = {{"even_x", even_x}, {"even_y", even_y}};
    j["eps"] = std::isfinite(eps) ? nlohmann::json(eps) : nlohmann::json(nullptr);
    return j;
  }

  void write_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    std::ofstream meta(path + ".json");
    meta << metadata().dump(2) << '\n';
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "x,y,u\n" << std::setprecision(17);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) out << x(i) << ',' << y(j) << ',' << (*this)(i, j) << '\n';
  }

  static ScalarField2D read_binary(const std::string& path) {
    std::ifstream meta(path + ".json");
    if (!meta) throw ConfigError("missing snapshot metadata " + path + ".json");
    nlohmann::json j;
    meta >> j;
    ScalarField2D f = make(j.at("x0"), j.at("y0"), j.at("h"), j.at("nx"), j.at("ny"),
                           j.at("symmetry").at("even_x"), j.at("symmetry").at("even_y"));
    if (!j.at("eps").is_null()) f.eps = j.at("eps");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read snapshot " + path);
    in.read(reinterpret_cast<char*>(f.v.data()), std::streamsize(f.v.size() * sizeof(double)));
    if (in.gcount() != std::streamsize(f.v.size() * sizeof(double))) throw ConfigError("truncated snapshot " + path);
    return f;
  }

 private:
  static void stencil(double s, int lo, int hi, int& base, double* w) {
    constexpr int K = 6;
    base = int(std::floor(s)) - K / 2 + 1;
    base = std::clamp(base, lo, hi - K + 1);
    for (int a = 0; a < K; ++a) {
      double num = 1.0, den = 1.0;
      for (int b = 0; b < K; ++b) {
        if (b == a) continue;
        num *= s - (base + b);
        den *= double(a - b);
      }
      w[a] = num / den;
    }
  }
};

template <class Fn>
void fill_field(ScalarField2D& f, Fn&& fn) {
  parallel_for(f.ny, [&](int jb, int je) {
    for (int j = jb; j < je; ++j)
      for (int i = 0; i < f.nx; ++i) f(i, j) = fn(f.x(i), f.y(j));
  });
}

inline double sup_difference(const ScalarField2D& a, const ScalarField2D& b) {
  if (!a.same_grid(b)) throw ConfigError("sup_difference: grids differ");
  double m = 0;
  for (std::size_t k = 0; k < a.v.size(); ++k) m = std::max(m, std::abs(a.v[k] - b.v[k]));
  return m;
}

}  // namespace fourend
