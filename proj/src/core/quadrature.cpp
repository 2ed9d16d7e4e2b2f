#include "core/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include "core/common.hpp"

namespace fracwave {

namespace {

/// GSL fixed-rule wrapper; returns nodes/weights for the requested weight
/// function on [a,b]. Results are cached: the assembly paths request the same
/// (n, mu) shapes millions of times on shifted intervals, so we cache on a
/// canonical interval and translate.
QuadRule gsl_fixed_rule(const gsl_integration_fixed_type* type, int n, double a, double b,
                        double alpha, double beta) {
  gsl_integration_fixed_workspace* ws =
      gsl_integration_fixed_alloc(type, static_cast<size_t>(n), a, b, alpha, beta);
  require(ws != nullptr, "gsl_integration_fixed_alloc failed");
  QuadRule r;
  r.x.assign(gsl_integration_fixed_nodes(ws), gsl_integration_fixed_nodes(ws) + n);
  r.w.assign(gsl_integration_fixed_weights(ws), gsl_integration_fixed_weights(ws) + n);
  gsl_integration_fixed_free(ws);
  return r;
}

// Cache of canonical rules on [0,1]; key is (kind, n, mu quantized exactly by
// bit pattern). Guarded for safety although the library is used single-threaded.
struct RuleKey {
  int kind;  // 0 = legendre, 1 = jacobi-left
  int n;
  double mu;
  bool operator<(const RuleKey& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (n != o.n) return n < o.n;
    return mu < o.mu;
  }
};

std::map<RuleKey, QuadRule> g_rule_cache;
std::mutex g_rule_mutex;

const QuadRule& canonical_rule(int kind, int n, double mu) {
  std::lock_guard<std::mutex> lock(g_rule_mutex);
  RuleKey key{kind, n, mu};
  auto it = g_rule_cache.find(key);
  if (it != g_rule_cache.end()) return it->second;
  QuadRule r;
  if (kind == 0) {
    r = gsl_fixed_rule(gsl_integration_fixed_legendre, n, 0.0, 1.0, 0.0, 0.0);
  } else {
    // GSL jacobi weight on [a,b] is (b-x)^alpha (x-a)^beta.
    r = gsl_fixed_rule(gsl_integration_fixed_jacobi, n, 0.0, 1.0, 0.0, mu);
  }
  return g_rule_cache.emplace(key, std::move(r)).first->second;
}

}  // namespace

QuadRule gauss_legendre(int n, double a, double b) {
  require(n >= 1 && b > a, "gauss_legendre: bad arguments");
  const QuadRule& c = canonical_rule(0, n, 0.0);
  QuadRule r;
  r.x.resize(c.x.size());
  r.w.resize(c.w.size());
  const double h = b - a;
  for (size_t i = 0; i < c.x.size(); ++i) {
    r.x[i] = a + h * c.x[i];
    r.w[i] = h * c.w[i];
  }
  return r;
}

QuadRule gauss_jacobi_left(int n, double a, double b, double mu) {
  require(n >= 1 && b > a && mu > -1.0, "gauss_jacobi_left: bad arguments");
  const QuadRule& c = canonical_rule(1, n, mu);
  QuadRule r;
  r.x.resize(c.x.size());
  r.w.resize(c.w.size());
  // x = a + h t maps weight (t-0)^mu dt to (x-a)^mu h^{-mu} * dx/h.
  const double h = b - a;
  const double s = std::pow(h, mu + 1.0);
  for (size_t i = 0; i < c.x.size(); ++i) {
    r.x[i] = a + h * c.x[i];
    r.w[i] = s * c.w[i];
  }
  return r;
}

QuadRule gauss_jacobi_right(int n, double a, double b, double mu) {
  QuadRule r = gauss_jacobi_left(n, a, b, mu);
  // Mirror x -> a+b-x; the weight (x-a)^mu becomes (b-x)^mu.
  for (double& xi : r.x) xi = a + b - xi;
  return r;
}

namespace {
double apply_rule(const QuadRule& r, const std::function<double(double)>& f) {
  double s = 0.0;
  for (size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(r.x[i]);
  return s;
}
}  // namespace

double integrate_smooth(const std::function<double(double)>& f, double a, double b,
                        double rel_tol) {
  if (b <= a) return 0.0;
  int pieces = 1;
  double prev = apply_rule(gauss_legendre(20, a, b), f);
  for (int round = 0; round < 12; ++round) {
    pieces *= 2;
    double s = 0.0;
    const double h = (b - a) / pieces;
    for (int i = 0; i < pieces; ++i) s += apply_rule(gauss_legendre(20, a + i * h, a + (i + 1) * h), f);
    const double scale = std::max({std::abs(s), std::abs(prev), 1e-300});
    if (std::abs(s - prev) <= rel_tol * scale) return s;
    prev = s;
  }
  return prev;
}

double integrate_singular_left(const std::function<double(double)>& f, double a, double b,
                               double mu, double rel_tol) {
  if (b <= a) return 0.0;
  // Geometric composite: Jacobi rule on [a, a+w], Legendre on dyadically
  // growing remainder pieces, refining the whole partition until stable.
  auto eval = [&](int levels) {
    double w = (b - a) * std::pow(0.5, levels);
    double s = apply_rule(gauss_jacobi_left(20, a, a + w, mu),
                     [&](double x) { return f(x); });
    double left = a + w;
    while (left < b - 1e-300) {
      double right = std::min(b, a + 2.0 * (left - a));
      if (right <= left) right = b;
      s += apply_rule(gauss_legendre(20, left, right),
                 [&](double x) { return f(x) * std::pow(x - a, mu); });
      left = right;
    }
    return s;
  };
  double prev = eval(2);
  for (int levels = 4; levels <= 40; levels += 2) {
    double s = eval(levels);
    const double scale = std::max({std::abs(s), std::abs(prev), 1e-300});
    if (std::abs(s - prev) <= rel_tol * scale) return s;
    prev = s;
  }
  return prev;
}

}  // namespace fracwave
