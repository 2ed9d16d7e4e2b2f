#include "core/collocation.hpp"

#include <cmath>
#include <utility>

#include "core/common.hpp"
#include "core/fracops.hpp"
#include "core/quadrature.hpp"
#include "core/splines.hpp"

namespace fracwave {

namespace {

// Cubic Hermite nodal prototypes on integer knots (value/slope of 1 at the
// center knot, zero value and slope at the support ends).
PiecewisePoly hermite_value_proto() {
  PiecewisePoly p;
  p.breaks = {0.0, 1.0, 2.0};
  p.pieces = {Poly{{0.0, 0.0, 3.0, -2.0}},    // 3u^2 - 2u^3
              Poly{{1.0, 0.0, -3.0, 2.0}}};   // (u+1-2)^2 (2(u+1)-1)
  return p;
}

PiecewisePoly hermite_slope_proto() {
  PiecewisePoly p;
  p.breaks = {0.0, 1.0, 2.0};
  p.pieces = {Poly{{0.0, 0.0, -1.0, 1.0}},    // u^3 - u^2
              Poly{{0.0, 1.0, -2.0, 1.0}}};   // (u+1-2)^2 ((u+1)-1)
  return p;
}

// Right half of the slope prototype, used at the domain endpoints (value zero,
// unit slope at the support start).
PiecewisePoly hermite_edge_slope_proto() {
  PiecewisePoly p;
  p.breaks = {0.0, 1.0};
  p.pieces = {Poly{{0.0, 1.0, -2.0, 1.0}}};   // u (u-1)^2
  return p;
}

}  // namespace

FracDerivEvaluator::FracDerivEvaluator(const PiecewisePoly& proto, double beta)
    : proto_(proto), beta_(beta) {
  require(!proto.breaks.empty() && proto.breaks.front() == 0.0,
          "colloc: prototype support must start at 0");
  require(beta >= 0.0 && beta < 1.0, "colloc: beta must lie in [0,1)");
  support_right_ = proto.breaks.back();
  if (beta_ == 0.0) {
    second_ = proto_.derivative().derivative();
  } else {
    termwise_ = frac_deriv_left_pw(proto_, 2.0 - beta_);
    // Beyond this the termwise plus-power form cancels too severely; switch to
    // the smooth-kernel integral, which is accurate exactly where the
    // termwise form degrades.
    far_cut_ = support_right_ + 8.0;
    far_gamma_factor_ = inv_gamma(beta_ - 2.0);
  }
}

double FracDerivEvaluator::operator()(double xi) const {
  if (xi <= 0.0) return 0.0;
  if (beta_ == 0.0) {
    // Pure second derivative; zero beyond the support (the trial spaces are
    // C^2 across the support's right end wherever this is ever evaluated).
    if (xi >= support_right_) return 0.0;
    return second_.eval(xi);
  }
  if (xi < far_cut_) return termwise_.eval(xi);
  // For xi right of the support, differentiating under the integral sign gives
  //   (D_{0+}^{2-b} R)(xi) = (1/Gamma(b-2)) int_0^w R(s) (xi-s)^{b-3} ds,
  // a smooth positive-kernel integral handled exactly by Gauss-Legendre up to
  // the kernel's (rapidly converging) Taylor truncation.
  double acc = 0.0;
  for (size_t p = 0; p + 1 < proto_.breaks.size(); ++p) {
    const QuadRule rule = gauss_legendre(16, proto_.breaks[p], proto_.breaks[p + 1]);
    for (size_t m = 0; m < rule.x.size(); ++m)
      acc += rule.w[m] * proto_.eval(rule.x[m]) * std::pow(xi - rule.x[m], beta_ - 3.0);
  }
  return far_gamma_factor_ * acc;
}

struct CollocationSystem::Impl {
  // phi(x) = scale * left(2^J x - a_left) = scale * right(2^J (1-x) - a_right).
  struct BasisFn {
    PiecewisePoly left;
    double a_left;
    PiecewisePoly right;
    double a_right;
    double scale;
  };
  std::vector<BasisFn> fns;
  double k1 = 0.0, k2 = 0.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> clu;  // factorization of value_matrix

  // `anchor` is the support's left end in grid units y = 2^J x for both
  // orientations; a mirrored function is proto(anchor + width - y). The
  // right-form anchor (support-left in the reflected coordinate s = 2^J - y)
  // is cells - anchor - width in both cases, with the prototype flipped in
  // exactly one of the two forms.
  void add(const PiecewisePoly& proto, double anchor, bool mirrored, double scale,
           double cells) {
    const double width = proto.breaks.back();
    PiecewisePoly flipped = proto.substituted(-1.0, width);
    const double other = cells - anchor - width;
    if (!mirrored) {
      fns.push_back({proto, anchor, std::move(flipped), other, scale});
    } else {
      fns.push_back({std::move(flipped), anchor, proto, other, scale});
    }
  }
};

CollocationSystem::CollocationSystem(CollocSpace space, CollocPointSet points,
                                     int level, double beta, double k1, double k2)
    : impl_(new Impl), level_(level), beta_(beta) {
  require(level >= 2 && level <= 24, "colloc: level out of range");
  require(beta >= 0.0 && beta < 1.0, "colloc: beta must lie in [0,1)");
  impl_->k1 = k1;
  impl_->k2 = k2;
  const long cells = 1L << level;
  const double nc = static_cast<double>(cells);

  // Trial space.
  if (space == CollocSpace::smooth_cubic) {
    SplineBasis basis(4, level);
    const double scale = std::exp2(0.5 * level);
    for (int k = 1; k <= basis.size(); ++k) {
      const SplineBasis::Desc d = basis.desc(k);
      impl_->add(spline_prototype(4, d.proto), static_cast<double>(d.anchor),
                 d.mirrored, scale, nc);
    }
  } else {
    const PiecewisePoly value = hermite_value_proto();
    const PiecewisePoly slope = hermite_slope_proto();
    const PiecewisePoly edge = hermite_edge_slope_proto();
    impl_->add(edge, 0.0, false, 1.0, nc);
    for (long k = 1; k < cells; ++k) {
      impl_->add(value, static_cast<double>(k - 1), false, 1.0, nc);
      impl_->add(slope, static_cast<double>(k - 1), false, 1.0, nc);
    }
    impl_->add(edge, nc - 1.0, true, 1.0, nc);
  }
  n_ = static_cast<int>(impl_->fns.size());

  // Collocation points.
  if (points == CollocPointSet::knots_and_halves) {
    require(space == CollocSpace::smooth_cubic,
            "colloc: knots_and_halves pairs with the smooth cubic space");
    pts_.push_back(0.5 / nc);
    for (long k = 1; k < cells; ++k) pts_.push_back(static_cast<double>(k) / nc);
    pts_.push_back(1.0 - 0.5 / nc);
  } else if (points == CollocPointSet::cell_thirds) {
    for (long i = 0; i < cells; ++i) {
      pts_.push_back((3.0 * static_cast<double>(i) + 1.0) / (3.0 * nc));
      pts_.push_back((3.0 * static_cast<double>(i) + 2.0) / (3.0 * nc));
    }
  } else {
    for (long k = 0; k < cells; ++k) {
      const QuadRule rule = gauss_legendre(2, static_cast<double>(k) / nc,
                                           static_cast<double>(k + 1) / nc);
      pts_.insert(pts_.end(), rule.x.begin(), rule.x.end());
    }
  }
  require(static_cast<int>(pts_.size()) == n_,
          "colloc: point count must match the trial-space dimension");

  // Point-evaluation matrix C and the left-derivative matrix A_l. Scaling:
  // phi_j(x) = scale * R(2^J x - a), so (D_{0+}^{2-b} phi_j)(x_i) equals
  // scale * 2^{J(2-b)} * (D_{0+}^{2-b} R)(y_i - a) with y_i = 2^J x_i.
  cmat_.resize(n_, n_);
  amat_l_.resize(n_, n_);
  amat_r_.resize(n_, n_);
  const double deriv_scale = std::pow(nc, 2.0 - beta_);
  for (int j = 0; j < n_; ++j) {
    const Impl::BasisFn& f = impl_->fns[j];
    FracDerivEvaluator dl(f.left, beta_);
    for (int i = 0; i < n_; ++i) {
      const double y = nc * pts_[i];
      cmat_(i, j) = f.scale * f.left.eval(y - f.a_left);
      amat_l_(i, j) = f.scale * deriv_scale * dl(y - f.a_left);
    }
  }

  // Right-derivative matrix A_r. The smooth cubic basis and its point set are
  // mirror-symmetric (phi_{n+1-j}(1-x) = phi_j(x), x_{n+1-i} = 1 - x_i), so
  // (D_{1-}^{2-b} phi_j)(x_i) = (D_{0+}^{2-b} phi_{n+1-j})(x_{n+1-i}): A_r is
  // the index-reversed copy of A_l. The Hermite slope functions flip sign
  // under mirroring and the offset points are asymmetric, so there the
  // right-sided derivative of phi_j(x) = scale * Rt(2^J (1-x) - a) is
  // evaluated directly as scale * 2^{J(2-b)} * (D_{0+}^{2-b} Rt)(2^J - y - a).
  if (space == CollocSpace::smooth_cubic) {
    amat_r_ = amat_l_.reverse();
  } else {
    for (int j = 0; j < n_; ++j) {
      const Impl::BasisFn& f = impl_->fns[j];
      FracDerivEvaluator dr(f.right, beta_);
      for (int i = 0; i < n_; ++i) {
        const double s = nc - nc * pts_[i];
        amat_r_(i, j) = f.scale * deriv_scale * dr(s - f.a_right);
      }
    }
  }

  // Collocated spatial operator with the variable coefficients applied as row
  // scalings.
  gmat_.resize(n_, n_);
  const double w1 = 2.0 - beta_;
  for (int i = 0; i < n_; ++i) {
    const double xl = (k1 != 0.0) ? k1 * std::pow(pts_[i], w1) : 0.0;
    const double xr = (k2 != 0.0) ? k2 * std::pow(1.0 - pts_[i], w1) : 0.0;
    for (int j = 0; j < n_; ++j)
      gmat_(i, j) = xl * amat_l_(i, j) + xr * amat_r_(i, j);
  }
  impl_->clu.compute(cmat_);
}

CollocationSystem::~CollocationSystem() = default;
CollocationSystem::CollocationSystem(CollocationSystem&&) noexcept = default;

double CollocationSystem::basis_value(int j, double x) const {
  require(j >= 0 && j < n_, "colloc: basis index out of range");
  const Impl::BasisFn& f = impl_->fns[j];
  const double y = std::exp2(level_) * x;
  return f.scale * f.left.eval(y - f.a_left);
}

double CollocationSystem::eval(const std::vector<double>& coef, double x) const {
  require(static_cast<int>(coef.size()) == n_, "colloc: coefficient size mismatch");
  double acc = 0.0;
  for (int j = 0; j < n_; ++j)
    if (coef[j] != 0.0) acc += coef[j] * basis_value(j, x);
  return acc;
}

std::vector<double> CollocationSystem::interpolate(
    const std::function<double(double)>& g) const {
  Eigen::VectorXd rhs(n_);
  for (int i = 0; i < n_; ++i) rhs[i] = g(pts_[i]);
  const Eigen::VectorXd c = impl_->clu.solve(rhs);
  return std::vector<double>(c.data(), c.data() + n_);
}

std::vector<double> CollocationSystem::run(
    const std::function<double(double, double)>& f,
    const std::function<double(double)>& u0, double dt, double T) const {
  require(dt > 0.0 && T > 0.0, "colloc: bad time parameters");
  const long steps = std::llround(T / dt);
  require(steps >= 1 && std::abs(steps * dt - T) <= 1e-9 * T,
          "colloc: dt must divide the final time");
  const Eigen::MatrixXd bplus = cmat_ - 0.5 * dt * gmat_;
  const Eigen::MatrixXd bminus = cmat_ + 0.5 * dt * gmat_;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(bplus);

  Eigen::VectorXd c(n_), load(n_);
  for (int i = 0; i < n_; ++i) c[i] = u0(pts_[i]);
  c = impl_->clu.solve(c);
  for (long sn = 0; sn < steps; ++sn) {
    const double tmid = (static_cast<double>(sn) + 0.5) * dt;
    for (int i = 0; i < n_; ++i) load[i] = f(pts_[i], tmid);
    c = lu.solve((bminus * c + dt * load).eval());
  }
  return std::vector<double>(c.data(), c.data() + n_);
}

double CollocationSystem::max_error_at_points(
    const std::vector<double>& coef, const std::function<double(double)>& g) const {
  require(static_cast<int>(coef.size()) == n_, "colloc: coefficient size mismatch");
  const Eigen::Map<const Eigen::VectorXd> c(coef.data(), n_);
  const Eigen::VectorXd vals = cmat_ * c;
  double err = 0.0;
  for (int i = 0; i < n_; ++i) err = std::max(err, std::abs(vals[i] - g(pts_[i])));
  return err;
}

double CollocationSystem::max_error_uniform(
    const std::vector<double>& coef, const std::function<double(double)>& g) const {
  const long m = std::max(1024L, 4L * (1L << level_));
  double err = 0.0;
  for (long k = 1; k < m; ++k) {
    const double x = static_cast<double>(k) / static_cast<double>(m);
    err = std::max(err, std::abs(eval(coef, x) - g(x)));
  }
  return err;
}

}  // namespace fracwave
