#pragma once
/// Dyadic spline bases on [0,1] vanishing at both endpoints.
///
/// For order d in {2,3,4} and level J the basis is
///   phi_{J,k}(x) = 2^{J/2} P_k(2^J x),   k = 1..N,  N = 2^J + d - 3,
/// where P_k is an integer translate of the interior B-spline prototype or a
/// (possibly reflected) boundary prototype:
///
///   d=2: hat function, interior only.
///   d=3: quadratic B-spline + one boundary prototype per side.
///   d=4: cubic B-spline + two boundary prototypes per side.
///
/// All prototypes are stored as exact piecewise polynomials on integer knots.
/// L2 inner products between basis functions depend only on prototype ids and
/// the integer offset, so they are cached level-independently.

#include <map>
#include <tuple>
#include <vector>

#include "core/piecewise.hpp"

namespace fracwave {

/// proto = 0: interior B-spline of order d (support [0, d]).
/// proto = 1: outermost boundary prototype (d=3: theta with theta(0)=0 and
///            support [0,2]; d=4: phi_a with phi_a(0)=0, support [0,2]).
/// proto = 2: second boundary prototype (d=4 only: phi_b, support [0,3]).
PiecewisePoly spline_prototype(int d, int proto);

/// Number of boundary prototypes per side (0 for d=2, 1 for d=3, 2 for d=4).
int num_boundary_protos(int d);

class SplineBasis {
 public:
  SplineBasis(int d, int J);

  int order() const { return d_; }
  int level() const { return J_; }
  int size() const { return n_; }

  /// Descriptor of P_k in the scaled coordinate y = 2^J x:
  /// non-mirrored: P_k(y) = proto(y - anchor); mirrored: proto(2^J - y - anchor)
  /// ... anchored so the support is [anchor, anchor + width].
  struct Desc {
    int proto;
    bool mirrored;
    long anchor;  // left end of support in y units
    int width;    // support width in y units
  };
  Desc desc(int k) const;

  /// Support of phi_{J,k} in x.
  double support_lo(int k) const;
  double support_hi(int k) const;

  /// phi_{J,k}(x) (includes the 2^{J/2} normalization).
  double eval(int k, double x) const;
  /// m-th derivative of phi_{J,k} at x (from the right at breakpoints).
  double eval_deriv(int k, double x, int m) const;

  /// phi_{J,k} as an explicit piecewise polynomial in x.
  PiecewisePoly as_piecewise(int k) const;
  /// P_k as a piecewise polynomial in y = 2^J x (no 2^{J/2} factor).
  PiecewisePoly proto_in_y(int k) const;

  /// Exact mass entry (phi_{J,k1}, phi_{J,k2})_{L2(0,1)}.
  double mass(int k1, int k2) const;

  /// Exact cross-mass (phi_{J,k}, phi_{J+1,kf})_{L2(0,1)} against the basis
  /// one level finer (same order).
  double cross_mass_fine(int k, const SplineBasis& fine, int kf) const;

  /// Basis indices whose support contains x (at most d + boundary extras).
  std::vector<int> supported_at(double x) const;

  /// sum_k coef[k-1] * phi_{J,k}(x).
  double eval_expansion(const std::vector<double>& coef, double x) const;

 private:
  int d_, J_, n_;
  long two_j_;
  std::vector<PiecewisePoly> protos_;           // index by proto id
  std::vector<PiecewisePoly> protos_mirrored_;  // proto(width - y), support [0,width]

  mutable std::map<std::tuple<int, bool, int, bool, long>, double> mass_cache_;
  mutable std::map<std::tuple<int, bool, int, bool, long>, double> cross_cache_;
};

}  // namespace fracwave
