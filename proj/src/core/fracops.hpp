#pragma once
/// Riemann-Liouville fractional integrals and derivatives of splines.
///
/// All operators here are LEFT-sided with base point at the left end of the
/// function's support; for functions vanishing left of their support this
/// coincides with any base point further left (translation covariance), which
/// is what makes level-independent caching of stiffness entries possible.
/// Right-sided operators are obtained by callers through reflection.
///
/// Two evaluation regimes:
///  - termwise closed forms on plus-power sums: exact, but suffer catastrophic
///    cancellation far to the right of the support (the terms grow like
///    dist^expo while the function decays like dist^{beta-1-d});
///  - kernel quadrature: stable far from (and inside) the support.
/// Assembly code picks the regime by distance.

#include "core/piecewise.hpp"

namespace fracwave {

/// 1/Gamma(x) with the convention 1/Gamma(nonpositive integer) = 0.
double inv_gamma(double x);

/// Termwise left fractional integral of order mu > 0:
/// (x-a)_+^nu -> Gamma(nu+1)/Gamma(nu+1+mu) (x-a)_+^{nu+mu}.
PlusPowerSum frac_integral_left(const PlusPowerSum& f, double mu);

/// Termwise left fractional derivative of order gamma in (0,2):
/// (x-a)_+^nu -> Gamma(nu+1)/Gamma(nu+1-gamma) (x-a)_+^{nu-gamma}.
/// Terms whose image exponent is a nonpositive... lands on 1/Gamma poles drop
/// out (classical derivative of lower-degree terms). Valid for nu - gamma > -1.
PlusPowerSum frac_deriv_left(const PlusPowerSum& f, double gamma);

/// frac_deriv_left applied to the exact plus-power form of a piecewise
/// polynomial that vanishes left of its support.
PlusPowerSum frac_deriv_left_pw(const PiecewisePoly& f, double gamma);

/// Exact integral of f * g over the support of g (f a plus-power sum, g a
/// piecewise polynomial): evaluated termwise with closed-form antiderivatives.
/// Exact but cancellation-prone when g lives far right of f's anchors.
double inner_product(const PlusPowerSum& f, const PiecewisePoly& g);

/// (D^{-mu} g)(x) = 1/Gamma(mu) * int_{-inf}^{x} (x-s)^{mu-1} g(s) ds by
/// quadrature: Gauss-Legendre on pieces left of x, a Gauss-Jacobi rule with
/// the (x-s)^{mu-1} weight on the piece containing x. Stable everywhere;
/// `nodes` points per piece (exact for the piecewise-polynomial g once nodes
/// exceeds half the degree, up to the smooth-kernel truncation error).
double frac_integral_quad(const PiecewisePoly& g, double mu, double x, int nodes = 24);

/// Far-field stiffness entry int (D^{1-beta} p1)(v) * p2d(v - delta) dv for
/// delta >= width(p1), where p1d = p1' and p2d = p2' are the derivative
/// piecewise polynomials. Uses the smooth double-integral kernel
///   1/Gamma(beta) * int int p1d(s) p2d(y) (y + delta - s)^{beta-1} ds dy,
/// which has no cancellation. Requires beta > 0 (for beta = 0 the entry is
/// exactly zero at this distance).
double symbol_far(const PiecewisePoly& p1d, const PiecewisePoly& p2d, double beta,
                  double delta, int nodes = 20);

}  // namespace fracwave
