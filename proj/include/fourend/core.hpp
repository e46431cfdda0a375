#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>
#include <exception>
#include <thread>
#include <vector>

namespace fourend {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ConstructionError : Error {
  using Error::Error;
};
struct DegeneratePotentialError : Error {
  using Error::Error;
};
struct PoorlyResolvedError : Error {
  using Error::Error;
};
struct AccuracyError : Error {
  using Error::Error;
};
struct RangeError : Error {
  using Error::Error;
};
struct TubeViolation : Error {
  using Error::Error;
};
struct CoverageError : Error {
  using Error::Error;
};
struct ResolutionError : Error {
  using Error::Error;
};
struct SingularJacobian : Error {
  using Error::Error;
};
struct ModulationBracketError : Error {
  using Error::Error;
};
struct NotAsymptoticError : Error {
  using Error::Error;
};

struct BigraphViolation : Error {
  std::vector<int> columns;
  BigraphViolation(const std::string& what, std::vector<int> cols)
      : Error(what), columns(std::move(cols)) {}
};

struct DivergenceError : Error {
  std::vector<double> history;
  DivergenceError(const std::string& what, std::vector<double> hist)
      : Error(what), history(std::move(hist)) {}
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

// Quintic smoothstep: 0 for t <= 0, 1 for t >= 1, C2 in between.
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// log(cosh(t)) without overflow.
inline double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw RangeError("fit_line: need at least two samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) throw RangeError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / double(n));
  return f;
}

// Worker count from FOUREND_THREADS, default 1.
inline int thread_count() {
  const char* s = std::getenv("FOUREND_THREADS");
  if (!s) return 1;
  const int n = std::atoi(s);
  const int hw = int(std::max(1u, std::thread::hardware_concurrency()));
  return std::clamp(n, 1, std::max(hw, 1));
}

// Runs fn(begin, end) over contiguous chunks of [0, n). Each index is
// processed by exactly one worker, so per-index results do not depend on
// the thread count.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  const int nt = std::min(thread_count(), std::max(n, 1));
  if (nt <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nt));
  pool.reserve(std::size_t(nt));
  for (int t = 0; t < nt; ++t) {
    const int b = int((long long)n * t / nt);
    const int e = int((long long)n * (t + 1) / nt);
    pool.emplace_back([&fn, &errors, t, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        errors[std::size_t(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& ep : errors)
    if (ep) std::rethrow_exception(ep);
}

}  // namespace fourend
