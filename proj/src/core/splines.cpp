#include "core/splines.hpp"

#include <algorithm>
#include <cmath>

#include "core/common.hpp"

namespace fracwave {

namespace {
PiecewisePoly make_pw(std::vector<double> breaks, std::vector<std::vector<double>> coef) {
  PiecewisePoly p;
  p.breaks = std::move(breaks);
  for (auto& c : coef) p.pieces.push_back(Poly{std::move(c)});
  return p;
}
}  // namespace

PiecewisePoly spline_prototype(int d, int proto) {
  // All pieces are in the local coordinate u = y - (left breakpoint).
  if (d == 2) {
    require(proto == 0, "order 2 has no boundary prototypes");
    return make_pw({0, 1, 2}, {{0, 1}, {1, -1}});
  }
  if (d == 3) {
    if (proto == 0)  // quadratic B-spline on [0,3]
      return make_pw({0, 1, 2, 3}, {{0, 0, 0.5}, {0.5, 1, -1}, {0.5, -1, 0.5}});
    require(proto == 1, "order 3 has one boundary prototype");
    // theta(y) = 2y - 3y^2/2 on [0,1], (2-y)^2/2 on [1,2]; theta(0) = 0.
    return make_pw({0, 1, 2}, {{0, 2, -1.5}, {0.5, -1, 0.5}});
  }
  require(d == 4, "spline order must be 2, 3, or 4");
  if (proto == 0)  // cubic B-spline on [0,4]
    return make_pw({0, 1, 2, 3, 4},
                   {{0, 0, 0, 1.0 / 6},
                    {1.0 / 6, 0.5, 0.5, -0.5},
                    {2.0 / 3, 0, -1, 0.5},
                    {1.0 / 6, -0.5, 0.5, -1.0 / 6}});
  if (proto == 1)  // outermost boundary cubic on [0,2], value 0 and slope 3 at 0
    return make_pw({0, 1, 2}, {{0, 3, -4.5, 1.75}, {0.25, -0.75, 0.75, -0.25}});
  require(proto == 2, "order 4 has two boundary prototypes");
  // second boundary cubic on [0,3]
  return make_pw({0, 1, 2, 3},
                 {{0, 0, 1.5, -11.0 / 12},
                  {7.0 / 12, 0.25, -1.25, 7.0 / 12},
                  {1.0 / 6, -0.5, 0.5, -1.0 / 6}});
}

int num_boundary_protos(int d) { return d - 2; }

SplineBasis::SplineBasis(int d, int J) : d_(d), J_(J) {
  require(d >= 2 && d <= 4, "spline order must be 2, 3, or 4");
  // Minimum level at which every basis function fits inside [0,1]
  // (d=2 allows the empty level-0 space).
  require(J >= (d == 2 ? 0 : (d == 3 ? 1 : 2)), "level too small for this spline order");
  n_ = basis_size(d, J);
  two_j_ = 1L << J;
  int np = 1 + num_boundary_protos(d);
  for (int p = 0; p < np; ++p) {
    PiecewisePoly q = spline_prototype(d, p);
    double w = q.support_right();
    protos_.push_back(q);
    protos_mirrored_.push_back(q.substituted(-1.0, w));
  }
}

SplineBasis::Desc SplineBasis::desc(int k) const {
  require(k >= 1 && k <= n_, "basis index out of range");
  if (d_ == 2) return {0, false, k - 1, 2};
  if (d_ == 3) {
    if (k == 1) return {1, false, 0, 2};
    if (k == n_) return {1, true, two_j_ - 2, 2};
    return {0, false, k - 2, 3};
  }
  if (k == 1) return {1, false, 0, 2};
  if (k == 2) return {2, false, 0, 3};
  if (k == n_ - 1) return {2, true, two_j_ - 3, 3};
  if (k == n_) return {1, true, two_j_ - 2, 2};
  return {0, false, k - 3, 4};
}

double SplineBasis::support_lo(int k) const {
  Desc dd = desc(k);
  return static_cast<double>(dd.anchor) / static_cast<double>(two_j_);
}

double SplineBasis::support_hi(int k) const {
  Desc dd = desc(k);
  return static_cast<double>(dd.anchor + dd.width) / static_cast<double>(two_j_);
}

double SplineBasis::eval(int k, double x) const {
  Desc dd = desc(k);
  double y = std::ldexp(x, J_) - static_cast<double>(dd.anchor);
  const PiecewisePoly& q = dd.mirrored ? protos_mirrored_[dd.proto] : protos_[dd.proto];
  return pow2half(J_) * q.eval(y);
}

double SplineBasis::eval_deriv(int k, double x, int m) const {
  Desc dd = desc(k);
  double y = std::ldexp(x, J_) - static_cast<double>(dd.anchor);
  const PiecewisePoly& q = dd.mirrored ? protos_mirrored_[dd.proto] : protos_[dd.proto];
  double v;
  if (y >= q.support_right() - 1e-13)
    v = q.eval_deriv_left(y, m);
  else
    v = q.eval_deriv_right(y, m);
  return pow2half(J_) * std::ldexp(v, J_ * m);
}

PiecewisePoly SplineBasis::as_piecewise(int k) const {
  Desc dd = desc(k);
  const PiecewisePoly& q = dd.mirrored ? protos_mirrored_[dd.proto] : protos_[dd.proto];
  PiecewisePoly r = q.substituted(static_cast<double>(two_j_), -static_cast<double>(dd.anchor));
  r.scale(pow2half(J_));
  return r;
}

PiecewisePoly SplineBasis::proto_in_y(int k) const {
  Desc dd = desc(k);
  const PiecewisePoly& q = dd.mirrored ? protos_mirrored_[dd.proto] : protos_[dd.proto];
  return q.substituted(1.0, -static_cast<double>(dd.anchor));
}

double SplineBasis::mass(int k1, int k2) const {
  Desc a = desc(k1), b = desc(k2);
  long delta = b.anchor - a.anchor;
  if (delta >= a.width || -delta >= b.width) return 0.0;
  auto key = std::make_tuple(a.proto, a.mirrored, b.proto, b.mirrored, delta);
  auto it = mass_cache_.find(key);
  if (it != mass_cache_.end()) return it->second;
  const PiecewisePoly& qa = a.mirrored ? protos_mirrored_[a.proto] : protos_[a.proto];
  const PiecewisePoly& qb = b.mirrored ? protos_mirrored_[b.proto] : protos_[b.proto];
  PiecewisePoly qbs = qb.substituted(1.0, -static_cast<double>(delta));
  double v = pw_mul(qa, qbs).integral();
  mass_cache_[key] = v;
  return v;
}

double SplineBasis::cross_mass_fine(int k, const SplineBasis& fine, int kf) const {
  require(fine.d_ == d_ && fine.J_ == J_ + 1, "cross_mass_fine needs the next finer basis");
  Desc a = desc(k), b = fine.desc(kf);
  // In fine y units the coarse function occupies [2 anchor, 2(anchor+width)].
  long delta = b.anchor - 2 * a.anchor;
  if (delta >= 2 * a.width || -delta >= b.width) return 0.0;
  auto key = std::make_tuple(a.proto, a.mirrored, b.proto, b.mirrored, delta);
  auto it = cross_cache_.find(key);
  if (it != cross_cache_.end()) return it->second;
  const PiecewisePoly& qa = a.mirrored ? protos_mirrored_[a.proto] : protos_[a.proto];
  const PiecewisePoly& qb = b.mirrored ? protos_mirrored_[b.proto] : protos_[b.proto];
  PiecewisePoly qa_half = qa.substituted(0.5, 0.0);  // qa(y/2), support [0, 2 width]
  PiecewisePoly qbs = qb.substituted(1.0, -static_cast<double>(delta));
  double v = pw_mul(qa_half, qbs).integral() / std::sqrt(2.0);
  cross_cache_[key] = v;
  return v;
}

std::vector<int> SplineBasis::supported_at(double x) const {
  std::vector<int> out;
  if (x < 0.0 || x > 1.0) return out;
  double y = std::ldexp(x, J_);
  int nb = num_boundary_protos(d_);
  auto test = [&](int k) {
    if (k < 1 || k > n_) return;
    Desc dd = desc(k);
    if (y >= static_cast<double>(dd.anchor) && y <= static_cast<double>(dd.anchor + dd.width))
      out.push_back(k);
  };
  for (int k = 1; k <= nb; ++k) test(k);
  for (int k = n_ - nb + 1; k <= n_; ++k) test(k);
  int ybase = static_cast<int>(std::floor(y));
  for (int a = ybase - d_; a <= ybase; ++a) {
    int k = a + d_ - 1;
    if (k <= nb || k > n_ - nb) continue;
    test(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double SplineBasis::eval_expansion(const std::vector<double>& coef, double x) const {
  require(static_cast<int>(coef.size()) == n_, "coefficient size mismatch");
  double s = 0.0;
  for (int k : supported_at(x)) s += coef[k - 1] * eval(k, x);
  return s;
}

}  // namespace fracwave
