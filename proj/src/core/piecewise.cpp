#include "core/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "core/common.hpp"

namespace fracwave {

namespace {
constexpr double kBreakTol = 1e-13;
}  // namespace

// ---------------------------------------------------------------------------
// Poly
// ---------------------------------------------------------------------------

double Poly::eval(double u) const {
  double r = 0.0;
  for (size_t k = c.size(); k-- > 0;) r = r * u + c[k];
  return r;
}

Poly Poly::derivative() const {
  Poly d;
  if (c.size() <= 1) return d;
  d.c.resize(c.size() - 1);
  for (size_t k = 1; k < c.size(); ++k) d.c[k - 1] = c[k] * static_cast<double>(k);
  return d;
}

Poly Poly::antiderivative() const {
  Poly a;
  a.c.resize(c.size() + 1, 0.0);
  for (size_t k = 0; k < c.size(); ++k) a.c[k + 1] = c[k] / static_cast<double>(k + 1);
  return a;
}

Poly Poly::shifted(double delta) const {
  // p(u + delta) = sum_k c[k] sum_{m<=k} C(k,m) delta^{k-m} u^m.
  Poly r;
  r.c.assign(c.size(), 0.0);
  for (size_t k = 0; k < c.size(); ++k) {
    double dp = 1.0;
    for (int m = static_cast<int>(k); m >= 0; --m) {
      r.c[m] += c[k] * binom(static_cast<int>(k), m) * dp;
      dp *= delta;
    }
  }
  return r;
}

Poly Poly::arg_scaled(double s) const {
  Poly r = *this;
  double p = 1.0;
  for (size_t k = 0; k < r.c.size(); ++k) {
    r.c[k] *= p;
    p *= s;
  }
  return r;
}

void Poly::trim() {
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
}

Poly operator+(const Poly& a, const Poly& b) {
  Poly r;
  r.c.resize(std::max(a.c.size(), b.c.size()), 0.0);
  for (size_t k = 0; k < a.c.size(); ++k) r.c[k] += a.c[k];
  for (size_t k = 0; k < b.c.size(); ++k) r.c[k] += b.c[k];
  return r;
}

Poly operator*(const Poly& a, const Poly& b) {
  Poly r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.assign(a.c.size() + b.c.size() - 1, 0.0);
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

Poly operator*(double s, const Poly& a) {
  Poly r = a;
  for (double& v : r.c) v *= s;
  return r;
}

// ---------------------------------------------------------------------------
// PiecewisePoly
// ---------------------------------------------------------------------------

namespace {
/// Index of the piece containing x, or -1 outside the support. At interior
/// breakpoints the right piece wins; at the last breakpoint the last piece.
int find_piece(const std::vector<double>& breaks, double x) {
  if (x < breaks.front() - kBreakTol || x > breaks.back() + kBreakTol) return -1;
  auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  int i = static_cast<int>(it - breaks.begin()) - 1;
  if (i < 0) i = 0;
  if (i >= static_cast<int>(breaks.size()) - 1) i = static_cast<int>(breaks.size()) - 2;
  return i;
}
}  // namespace

double PiecewisePoly::eval(double x) const {
  int i = find_piece(breaks, x);
  if (i < 0) return 0.0;
  return pieces[i].eval(x - breaks[i]);
}

double PiecewisePoly::eval_deriv_right(double x, int m) const {
  if (x >= breaks.back() - kBreakTol) return 0.0;
  if (x < breaks.front() - kBreakTol) return 0.0;
  int i = find_piece(breaks, x);
  if (i < 0) return 0.0;
  Poly p = pieces[i];
  for (int k = 0; k < m; ++k) p = p.derivative();
  return p.eval(x - breaks[i]);
}

double PiecewisePoly::eval_deriv_left(double x, int m) const {
  if (x <= breaks.front() + kBreakTol) return 0.0;
  if (x > breaks.back() + kBreakTol) return 0.0;
  // Find the piece whose closed right end is x.
  auto it = std::lower_bound(breaks.begin(), breaks.end(), x - kBreakTol);
  int i = static_cast<int>(it - breaks.begin()) - 1;
  if (i < 0 || i >= num_pieces()) {
    i = find_piece(breaks, x);
    if (i < 0) return 0.0;
  }
  Poly p = pieces[i];
  for (int k = 0; k < m; ++k) p = p.derivative();
  return p.eval(x - breaks[i]);
}

PiecewisePoly PiecewisePoly::derivative() const {
  PiecewisePoly d;
  d.breaks = breaks;
  d.pieces.reserve(pieces.size());
  for (const Poly& p : pieces) d.pieces.push_back(p.derivative());
  return d;
}

double PiecewisePoly::integral() const {
  double s = 0.0;
  for (size_t i = 0; i < pieces.size(); ++i) {
    Poly a = pieces[i].antiderivative();
    s += a.eval(breaks[i + 1] - breaks[i]);
  }
  return s;
}

double PiecewisePoly::integral(double a, double b) const {
  if (b <= a) return 0.0;
  a = std::max(a, breaks.front());
  b = std::min(b, breaks.back());
  if (b <= a) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < pieces.size(); ++i) {
    double lo = std::max(a, breaks[i]);
    double hi = std::min(b, breaks[i + 1]);
    if (hi <= lo) continue;
    Poly anti = pieces[i].antiderivative();
    s += anti.eval(hi - breaks[i]) - anti.eval(lo - breaks[i]);
  }
  return s;
}

PiecewisePoly PiecewisePoly::substituted(double s, double t) const {
  require(s != 0.0, "substituted: scale must be nonzero");
  PiecewisePoly r;
  const int n = num_pieces();
  r.breaks.resize(breaks.size());
  r.pieces.resize(n);
  if (s > 0) {
    // New piece i covers x in [(breaks[i]-t)/s, (breaks[i+1]-t)/s];
    // local u = x - new_left, original local coordinate = s*u.
    for (size_t i = 0; i < breaks.size(); ++i) r.breaks[i] = (breaks[i] - t) / s;
    for (int i = 0; i < n; ++i) r.pieces[i] = pieces[i].arg_scaled(s);
  } else {
    for (size_t i = 0; i < breaks.size(); ++i)
      r.breaks[breaks.size() - 1 - i] = (breaks[i] - t) / s;
    for (int i = 0; i < n; ++i) {
      // Original piece i on local v in [0, len], v = s*u + (breaks[i+1]-breaks[i])
      // when u is measured from the new (reversed) left end.
      double len = breaks[i + 1] - breaks[i];
      r.pieces[n - 1 - i] = pieces[i].shifted(len).arg_scaled(s);
      // shifted(len) gives p(v) with v = s*u + len expressed via p(len + s*u).
    }
  }
  return r;
}

void PiecewisePoly::scale(double s) {
  for (Poly& p : pieces)
    for (double& v : p.c) v *= s;
}

int PiecewisePoly::max_degree() const {
  int d = 0;
  for (const Poly& p : pieces) d = std::max(d, p.degree());
  return d;
}

namespace {
std::vector<double> merge_breaks(const std::vector<double>& a, const std::vector<double>& b,
                                 double lo, double hi) {
  std::vector<double> m;
  for (double x : a)
    if (x >= lo - kBreakTol && x <= hi + kBreakTol) m.push_back(x);
  for (double x : b)
    if (x >= lo - kBreakTol && x <= hi + kBreakTol) m.push_back(x);
  m.push_back(lo);
  m.push_back(hi);
  std::sort(m.begin(), m.end());
  std::vector<double> out;
  for (double x : m)
    if (out.empty() || x - out.back() > kBreakTol) out.push_back(x);
  return out;
}

/// Polynomial of `src` on [left, right] re-expanded in u = x - left.
/// Requires [left, right] to lie within a single piece of src (or outside its
/// support, giving 0).
Poly rebase_piece(const PiecewisePoly& src, double left, double right) {
  double mid = 0.5 * (left + right);
  int i = find_piece(src.breaks, mid);
  if (i < 0) return Poly{{0.0}};
  return src.pieces[i].shifted(left - src.breaks[i]);
}
}  // namespace

PiecewisePoly pw_add(const PiecewisePoly& a, const PiecewisePoly& b) {
  double lo = std::min(a.support_left(), b.support_left());
  double hi = std::max(a.support_right(), b.support_right());
  PiecewisePoly r;
  r.breaks = merge_breaks(a.breaks, b.breaks, lo, hi);
  for (size_t i = 0; i + 1 < r.breaks.size(); ++i) {
    Poly pa = rebase_piece(a, r.breaks[i], r.breaks[i + 1]);
    Poly pb = rebase_piece(b, r.breaks[i], r.breaks[i + 1]);
    r.pieces.push_back(pa + pb);
  }
  return r;
}

PiecewisePoly pw_mul(const PiecewisePoly& a, const PiecewisePoly& b) {
  double lo = std::max(a.support_left(), b.support_left());
  double hi = std::min(a.support_right(), b.support_right());
  PiecewisePoly r;
  if (hi - lo < kBreakTol) {
    r.breaks = {0.0, 1.0};
    r.pieces = {Poly{{0.0}}};
    return r;
  }
  r.breaks = merge_breaks(a.breaks, b.breaks, lo, hi);
  for (size_t i = 0; i + 1 < r.breaks.size(); ++i) {
    Poly pa = rebase_piece(a, r.breaks[i], r.breaks[i + 1]);
    Poly pb = rebase_piece(b, r.breaks[i], r.breaks[i + 1]);
    r.pieces.push_back(pa * pb);
  }
  return r;
}

// ---------------------------------------------------------------------------
// PlusPowerSum
// ---------------------------------------------------------------------------

double PlusPowerSum::eval(double x) const {
  double s = 0.0;
  for (const PlusPowerTerm& t : terms) {
    double d = x - t.anchor;
    if (d <= 0.0) continue;
    s += t.coef * std::pow(d, t.expo);
  }
  return s;
}

PlusPowerSum PlusPowerSum::derivative() const {
  PlusPowerSum d;
  d.terms.reserve(terms.size());
  for (const PlusPowerTerm& t : terms) {
    if (t.expo == 0.0) continue;  // constant step: derivative 0 away from anchor
    d.terms.push_back({t.coef * t.expo, t.anchor, t.expo - 1.0});
  }
  return d;
}

void PlusPowerSum::scale(double s) {
  for (PlusPowerTerm& t : terms) t.coef *= s;
}

void PlusPowerSum::append(const PlusPowerSum& other) {
  terms.insert(terms.end(), other.terms.begin(), other.terms.end());
}

void PlusPowerSum::compress() {
  std::sort(terms.begin(), terms.end(), [](const PlusPowerTerm& a, const PlusPowerTerm& b) {
    if (a.anchor != b.anchor) return a.anchor < b.anchor;
    return a.expo < b.expo;
  });
  std::vector<PlusPowerTerm> out;
  for (const PlusPowerTerm& t : terms) {
    if (!out.empty() && out.back().anchor == t.anchor && out.back().expo == t.expo) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  terms.clear();
  for (const PlusPowerTerm& t : out)
    if (std::abs(t.coef) > 0.0) terms.push_back(t);
}

PlusPowerSum to_plus_power(const PiecewisePoly& p) {
  PlusPowerSum s;
  int maxdeg = p.max_degree();
  double fact = 1.0;
  for (int m = 0; m <= maxdeg; ++m) {
    if (m > 0) fact *= m;
    std::vector<double> jumps(p.breaks.size());
    double scale = 0.0;
    for (size_t i = 0; i < p.breaks.size(); ++i) {
      double r = p.eval_deriv_right(p.breaks[i], m);
      double l = p.eval_deriv_left(p.breaks[i], m);
      jumps[i] = r - l;
      scale = std::max({scale, std::abs(r), std::abs(l)});
    }
    for (size_t i = 0; i < p.breaks.size(); ++i) {
      // Drop pure roundoff: a true jump of the m-th derivative is never 12
      // digits below that derivative's overall magnitude.
      if (std::abs(jumps[i]) <= 1e-12 * scale) continue;
      s.terms.push_back({jumps[i] / fact, p.breaks[i], static_cast<double>(m)});
    }
  }
  s.compress();
  return s;
}

}  // namespace fracwave
