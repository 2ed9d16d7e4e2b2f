#pragma once
/// Shared small utilities: error type, gamma-function helpers, dyadic helpers.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

/// Library-wide exception type. The C API boundary converts these to status
/// codes; internal code throws freely.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

/// Gamma function. std::tgamma on this platform is correctly rounded to a few
/// ulp, well within the 1e-14 relative accuracy the solvers need.
inline double gamma_fn(double x) { return std::tgamma(x); }

/// Ratio Gamma(a)/Gamma(b) for a,b > 0, evaluated in log space so that large
/// arguments (high-order moments, large nu) do not overflow.
inline double gamma_ratio(double a, double b) {
  return std::exp(std::lgamma(a) - std::lgamma(b));
}

/// 2^j as double (j may be negative).
inline double pow2d(int j) { return std::ldexp(1.0, j); }

/// 2^{j/2} as double (L2 normalization factor of a level-j dyadic function).
inline double pow2half(int j) { return std::exp2(0.5 * j); }

/// Number of basis functions on level j for spline order d (see splines.hpp):
/// all order-d B-splines on the dyadic Schoenberg knots that vanish at both
/// endpoints.
inline int basis_size(int d, int j) { return (1 << j) + d - 3; }

inline double sqr(double x) { return x * x; }

/// Binomial coefficient for small arguments (exact in double).
inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace fracwave
