#pragma once
/// Gaussian quadrature rules used by the assembly and error-measurement code.
///
/// Two node families are provided:
///  - Gauss-Legendre on an arbitrary interval (smooth integrands);
///  - Gauss-Jacobi with weight (x-a)^mu or (b-x)^mu on [a,b], which absorbs
///    the algebraic endpoint singularities produced by fractional integrals
///    and derivatives of splines.
///
/// Node/weight generation is delegated to GSL; everything above the node
/// tables is ours.

#include <functional>
#include <vector>

namespace fracwave {

struct QuadRule {
  std::vector<double> x;  ///< nodes
  std::vector<double> w;  ///< weights
};

/// n-point Gauss-Legendre rule on [a,b].
QuadRule gauss_legendre(int n, double a, double b);

/// n-point Gauss-Jacobi rule on [a,b] for the weight (x-a)^mu (mu > -1).
/// The weight is *included* in the returned weights: sum_i w_i f(x_i)
/// approximates (and for polynomial f of degree <= 2n-1 equals)
/// integral_a^b (x-a)^mu f(x) dx.
QuadRule gauss_jacobi_left(int n, double a, double b, double mu);

/// Same with weight (b-x)^mu.
QuadRule gauss_jacobi_right(int n, double a, double b, double mu);

/// Integrate a smooth callable on [a,b] with a composite Gauss-Legendre rule,
/// bisecting until the relative change is below rel_tol.
double integrate_smooth(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-12);

/// Integrate f(x) * (x-a)^mu over [a,b] (f smooth) by a Gauss-Jacobi rule with
/// geometric composite refinement toward the singular endpoint until the
/// relative change is below rel_tol.
double integrate_singular_left(const std::function<double(double)>& f, double a, double b,
                               double mu, double rel_tol = 1e-12);

}  // namespace fracwave
