#pragma once
/// Collocation discretizations for the one-dimensional variable-coefficient
/// space-fractional diffusion equation
///
///   u_t = k1 x^{2-b} (D_{0+}^{2-b} u)(x) + k2 (1-x)^{2-b} (D_{1-}^{2-b} u)(x) + f
///
/// on (0,1) with homogeneous Dirichlet data and 0 <= b < 1 (b = 0 reduces the
/// operator to the classical degenerate diffusion k1 x^2 u'' + k2 (1-x)^2 u'').
///
/// Two piecewise-cubic trial spaces are available:
///  - smooth_cubic:   C^2 cubic splines on the dyadic grid, vanishing at both
///                    endpoints (dimension 2^J + 1), collocated at the interior
///                    knots plus one half-cell point next to each endpoint;
///  - hermite_cubic:  C^1 cubic Hermite functions vanishing at both endpoints
///                    (dimension 2^{J+1}), collocated either at offset
///                    equispaced points or at two Gauss-Legendre points per
///                    cell.
///
/// The semidiscrete system C c'(t) = G c(t) + F(t) (C = point-evaluation
/// matrix, G = collocated spatial operator) is advanced with the trapezoidal
/// rule, factoring the time-stepping matrix once.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "core/piecewise.hpp"

namespace fracwave {

enum class CollocSpace { smooth_cubic, hermite_cubic };

enum class CollocPointSet {
  knots_and_halves,  ///< 1/2^{J+1}, k/2^J (k=1..2^J-1), 1 - 1/2^{J+1}
  cell_thirds,       ///< the two interior third points of every dyadic cell
  gauss_pairs        ///< two Gauss-Legendre points per dyadic cell
};

class CollocationSystem {
 public:
  CollocationSystem(CollocSpace space, CollocPointSet points, int level,
                    double beta, double k1, double k2);
  ~CollocationSystem();
  CollocationSystem(CollocationSystem&&) noexcept;

  int size() const { return n_; }
  int level() const { return level_; }
  double beta() const { return beta_; }
  const std::vector<double>& points() const { return pts_; }

  /// C[i][j] = phi_j(x_i).
  const Eigen::MatrixXd& value_matrix() const { return cmat_; }
  /// A_l[i][j] = (D_{0+}^{2-b} phi_j)(x_i).
  const Eigen::MatrixXd& left_matrix() const { return amat_l_; }
  /// A_r[i][j] = (D_{1-}^{2-b} phi_j)(x_i). For the smooth cubic space the
  /// mirror symmetry of basis and points makes this the index-reversed copy of
  /// A_l, and it is produced exactly that way; the Hermite space has no such
  /// symmetry and the right-sided derivatives are evaluated directly.
  const Eigen::MatrixXd& right_matrix() const { return amat_r_; }
  /// G[i][j] = k1 x_i^{2-b} A_l[i][j] + k2 (1-x_i)^{2-b} A_r[i][j].
  const Eigen::MatrixXd& operator_matrix() const { return gmat_; }

  /// phi_j evaluated anywhere (j = 0..size()-1).
  double basis_value(int j, double x) const;
  /// sum_j coef[j] phi_j(x).
  double eval(const std::vector<double>& coef, double x) const;

  /// Coefficients interpolating g at the collocation points (solves C c = g).
  std::vector<double> interpolate(const std::function<double(double)>& g) const;

  /// Trapezoidal-rule stepping of C c' = G c + F from t = 0 to t = T:
  ///   (C - dt/2 G) c^{n+1} = (C + dt/2 G) c^n + dt F(t_n + dt/2),
  /// with initial coefficients interpolating u0. Returns the coefficients at
  /// the final time.
  std::vector<double> run(const std::function<double(double, double)>& f,
                          const std::function<double(double)>& u0, double dt,
                          double T) const;

  /// max_i |sum_j c_j phi_j(x_i) - g(x_i)| over the collocation points.
  double max_error_at_points(const std::vector<double>& coef,
                             const std::function<double(double)>& g) const;

  /// Max-norm error sampled on a uniform grid of max(2^10, 2^{J+2}) panels
  /// (the global discrete max norm used by the accuracy studies).
  double max_error_uniform(const std::vector<double>& coef,
                           const std::function<double(double)>& g) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  int level_ = 0;
  double beta_ = 0.0;
  std::vector<double> pts_;
  Eigen::MatrixXd cmat_;
  Eigen::MatrixXd amat_l_;
  Eigen::MatrixXd amat_r_;
  Eigen::MatrixXd gmat_;
};

/// Left-sided evaluator for w(xi) = (D_{0+}^{2-b} R)(xi) of a piecewise-cubic
/// prototype R supported on [0, width]. Near the support the exact plus-power
/// form is used; far to the right it switches to a smooth-kernel quadrature
/// that avoids the cancellation of the termwise form. For b = 0 the value is
/// simply R''(xi) (from the right at breakpoints).
class FracDerivEvaluator {
 public:
  FracDerivEvaluator(const PiecewisePoly& proto, double beta);
  double operator()(double xi) const;

 private:
  PiecewisePoly proto_;
  PiecewisePoly second_;   // beta == 0 only
  PlusPowerSum termwise_;  // beta > 0 only
  double beta_;
  double support_right_ = 0.0;
  double far_cut_ = 0.0;
  double far_gamma_factor_ = 0.0;  // 1/Gamma(beta-2)
};

}  // namespace fracwave
