#pragma once
/// Exact piecewise-polynomial and "plus-power" representations.
///
/// Splines, their derivatives, and the closed-form fractional derivatives of
/// splines all live in two small algebras:
///
///  - PiecewisePoly: polynomial pieces between dyadic breakpoints, each piece
///    stored in the local coordinate (x - left breakpoint). All breakpoints in
///    this project are dyadic rationals, hence exact doubles.
///
///  - PlusPowerSum: sum of terms c * (x - a)_+^mu with real exponents mu > -1.
///    A piecewise polynomial that vanishes left of its first breakpoint has an
///    exact plus-power form (jump extraction); applying a Riemann-Liouville
///    fractional integral/derivative is then termwise exact.

#include <vector>

namespace fracwave {

/// Dense polynomial p(u) = sum_k c[k] u^k.
struct Poly {
  std::vector<double> c;

  double eval(double u) const;
  Poly derivative() const;
  Poly antiderivative() const;  // constant term 0
  /// Taylor re-expansion p(u + delta) as a polynomial in u.
  Poly shifted(double delta) const;
  /// p(s * u) as a polynomial in u.
  Poly arg_scaled(double s) const;
  int degree() const { return static_cast<int>(c.size()) - 1; }
  void trim();
};

Poly operator+(const Poly& a, const Poly& b);
Poly operator*(const Poly& a, const Poly& b);
Poly operator*(double s, const Poly& a);

/// Piecewise polynomial on [breaks.front(), breaks.back()], zero outside.
/// pieces[i] is the polynomial on [breaks[i], breaks[i+1]] in the local
/// coordinate u = x - breaks[i].
struct PiecewisePoly {
  std::vector<double> breaks;
  std::vector<Poly> pieces;

  double eval(double x) const;
  /// m-th derivative evaluated from the right at x (one-sided limit), used by
  /// jump extraction; returns 0 outside the support.
  double eval_deriv_right(double x, int m) const;
  double eval_deriv_left(double x, int m) const;

  PiecewisePoly derivative() const;
  /// Exact integral of the piecewise polynomial over its whole support.
  double integral() const;
  /// Exact integral over [a, b].
  double integral(double a, double b) const;
  /// Affine substitution: returns q with q(x) = this(s * x + t), breakpoints
  /// mapped accordingly (s != 0; s < 0 reverses orientation).
  PiecewisePoly substituted(double s, double t) const;
  /// Multiply by a scalar in place.
  void scale(double s);
  int num_pieces() const { return static_cast<int>(pieces.size()); }
  double support_left() const { return breaks.front(); }
  double support_right() const { return breaks.back(); }
  int max_degree() const;
};

/// Pointwise sum on merged breakpoints.
PiecewisePoly pw_add(const PiecewisePoly& a, const PiecewisePoly& b);
/// Pointwise product on merged breakpoints (restricted to overlapping support).
PiecewisePoly pw_mul(const PiecewisePoly& a, const PiecewisePoly& b);

/// One term c * (x - a)_+^mu.
struct PlusPowerTerm {
  double coef;
  double anchor;
  double expo;
};

/// f(x) = sum of plus-power terms. Terms are kept sorted by anchor.
struct PlusPowerSum {
  std::vector<PlusPowerTerm> terms;

  /// Direct evaluation. Far from the anchors this may lose precision to
  /// cancellation (the assembly code uses integral forms there instead).
  double eval(double x) const;
  /// Termwise derivative; requires all exponents >= 1 or anchored exactly at
  /// x (terms with mu == 0 are piecewise constant: their derivative is 0 away
  /// from anchors and the caller must not differentiate across anchors).
  PlusPowerSum derivative() const;
  void scale(double s);
  void append(const PlusPowerSum& other);
  /// Merge terms with identical (anchor, expo) and drop zero coefficients.
  void compress();
};

/// Exact plus-power form of a piecewise polynomial (which vanishes left of its
/// support): jumps of the m-th derivative at each breakpoint contribute
/// (jump/m!) (x - b)_+^m.
PlusPowerSum to_plus_power(const PiecewisePoly& p);

}  // namespace fracwave
