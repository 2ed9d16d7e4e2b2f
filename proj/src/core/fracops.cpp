#include "core/fracops.hpp"

#include <cmath>

#include "core/common.hpp"
#include "core/quadrature.hpp"

namespace fracwave {

double inv_gamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  return 1.0 / gamma_fn(x);
}

PlusPowerSum frac_integral_left(const PlusPowerSum& f, double mu) {
  require(mu > 0.0, "fractional integral order must be positive");
  PlusPowerSum r;
  r.terms.reserve(f.terms.size());
  for (const PlusPowerTerm& t : f.terms) {
    double c = t.coef * gamma_fn(t.expo + 1.0) * inv_gamma(t.expo + 1.0 + mu);
    r.terms.push_back({c, t.anchor, t.expo + mu});
  }
  return r;
}

PlusPowerSum frac_deriv_left(const PlusPowerSum& f, double gamma) {
  require(gamma > 0.0 && gamma < 2.0, "fractional derivative order must be in (0,2)");
  PlusPowerSum r;
  r.terms.reserve(f.terms.size());
  for (const PlusPowerTerm& t : f.terms) {
    double ig = inv_gamma(t.expo + 1.0 - gamma);
    if (ig == 0.0) continue;
    require(t.expo - gamma > -1.0, "term too singular for this derivative order");
    double c = t.coef * gamma_fn(t.expo + 1.0) * ig;
    r.terms.push_back({c, t.anchor, t.expo - gamma});
  }
  return r;
}

PlusPowerSum frac_deriv_left_pw(const PiecewisePoly& f, double gamma) {
  return frac_deriv_left(to_plus_power(f), gamma);
}

double inner_product(const PlusPowerSum& f, const PiecewisePoly& g) {
  double total = 0.0;
  for (const PlusPowerTerm& t : f.terms) {
    for (int i = 0; i < g.num_pieces(); ++i) {
      double lo = std::max(g.breaks[i], t.anchor);
      double hi = g.breaks[i + 1];
      if (hi <= lo) continue;
      // Re-expand the piece around the term's anchor: g(v) = sum_k b_k (v-a)^k.
      Poly gb = g.pieces[i].shifted(t.anchor - g.breaks[i]);
      double w1 = hi - t.anchor;
      double w0 = lo - t.anchor;
      double s = 0.0;
      for (size_t k = 0; k < gb.c.size(); ++k) {
        double e = t.expo + static_cast<double>(k) + 1.0;
        double v = std::pow(w1, e);
        if (w0 > 0.0) v -= std::pow(w0, e);
        s += gb.c[k] * v / e;
      }
      total += t.coef * s;
    }
  }
  return total;
}

double frac_integral_quad(const PiecewisePoly& g, double mu, double x, int nodes) {
  require(mu > 0.0, "kernel order must be positive");
  if (x <= g.support_left()) return 0.0;
  double inv_g = 1.0 / gamma_fn(mu);
  double total = 0.0;
  for (int i = 0; i < g.num_pieces(); ++i) {
    double lo = g.breaks[i];
    double hi = std::min(g.breaks[i + 1], x);
    if (hi <= lo) continue;
    const Poly& p = g.pieces[i];
    if (x >= g.breaks[i + 1]) {
      // Kernel smooth on [lo, hi]; panels halve toward hi until shorter than
      // the distance to the singularity at x, keeping Gauss-Legendre accurate
      // even when x sits just beyond this piece.
      double left = lo;
      double gap = std::max(x - hi, 1e-300);
      int guard = 0;
      while (hi - left > gap && hi - left > 1e-14 * (hi - lo) && ++guard < 60) {
        double mid = 0.5 * (left + hi);
        QuadRule q = gauss_legendre(nodes, left, mid);
        for (size_t n = 0; n < q.x.size(); ++n)
          total += q.w[n] * std::pow(x - q.x[n], mu - 1.0) * p.eval(q.x[n] - lo);
        left = mid;
      }
      QuadRule q = gauss_legendre(nodes, left, hi);
      for (size_t n = 0; n < q.x.size(); ++n)
        total += q.w[n] * std::pow(x - q.x[n], mu - 1.0) * p.eval(q.x[n] - lo);
    } else {
      // x inside this piece: weight (x-s)^{mu-1} folded into a Jacobi rule.
      QuadRule q = gauss_jacobi_right(nodes, lo, x, mu - 1.0);
      for (size_t n = 0; n < q.x.size(); ++n) total += q.w[n] * p.eval(q.x[n] - lo);
    }
  }
  return inv_g * total;
}

double symbol_far(const PiecewisePoly& p1d, const PiecewisePoly& p2d, double beta,
                  double delta, int nodes) {
  require(beta > 0.0, "far-field kernel needs beta > 0");
  require(delta >= p1d.support_right() - 1e-12, "far-field form needs disjoint supports");
  double inv_g = 1.0 / gamma_fn(beta);
  double total = 0.0;
  for (int i = 0; i < p1d.num_pieces(); ++i) {
    QuadRule qs = gauss_legendre(nodes, p1d.breaks[i], p1d.breaks[i + 1]);
    for (int j = 0; j < p2d.num_pieces(); ++j) {
      QuadRule qy = gauss_legendre(nodes, p2d.breaks[j], p2d.breaks[j + 1]);
      for (size_t a = 0; a < qs.x.size(); ++a) {
        double fs = p1d.pieces[i].eval(qs.x[a] - p1d.breaks[i]);
        if (fs == 0.0) continue;
        double acc = 0.0;
        for (size_t b = 0; b < qy.x.size(); ++b) {
          double fy = p2d.pieces[j].eval(qy.x[b] - p2d.breaks[j]);
          acc += qy.w[b] * fy * std::pow(qy.x[b] + delta - qs.x[a], beta - 1.0);
        }
        total += qs.w[a] * fs * acc;
      }
    }
  }
  return inv_g * total;
}

}  // namespace fracwave
