#include "core/adaptive.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "core/collocation.hpp"
#include "core/common.hpp"
#include "core/linalg.hpp"

namespace fracwave {

// ---------------------------------------------------------------------------
// AdaptiveIndexSet

AdaptiveIndexSet::AdaptiveIndexSet(int coarse_level, int max_detail_level)
    : j0_(coarse_level), jcap_(max_detail_level) {
  require(coarse_level >= 0, "adaptive set: coarse level must be >= 0");
  require(max_detail_level >= coarse_level,
          "adaptive set: detail cap below coarse level");
}

bool AdaptiveIndexSet::contains(int j, long k) const {
  return set_.count({j, k}) != 0;
}

bool AdaptiveIndexSet::insert(int j, long k) {
  require(j >= j0_, "adaptive set: level below coarse level");
  if (j > jcap_) {
    saturated_ = true;
    return false;
  }
  require(k >= 0 && k < (1L << j), "adaptive set: translate out of range");
  return set_.insert({j, k}).second;
}

void AdaptiveIndexSet::complete_grading() {
  // Walk down from the finest level so added parents are themselves visited.
  for (int j = max_active_level(); j > j0_; --j) {
    std::vector<long> ks;
    for (const auto& e : set_)
      if (e.first == j) ks.push_back(e.second);
    for (long k : ks) set_.insert({j - 1, k / 2});
  }
}

bool AdaptiveIndexSet::graded() const {
  for (const auto& e : set_) {
    if (e.first == j0_) continue;
    if (!set_.count({e.first - 1, e.second / 2})) return false;
  }
  return true;
}

int AdaptiveIndexSet::max_active_level() const {
  int m = j0_ - 1;
  for (const auto& e : set_) m = std::max(m, e.first);
  return m;
}

std::vector<WaveletIndex> AdaptiveIndexSet::indices() const {
  std::vector<WaveletIndex> out;
  out.reserve(set_.size());
  for (const auto& e : set_) out.push_back({e.first, e.second});
  return out;
}

// ---------------------------------------------------------------------------
// Threshold and adjacent-zone extension

std::vector<WaveletIndex> significant_indices(const AdaptiveCoeffs& coeffs,
                                              const ThresholdPolicy& policy) {
  std::vector<WaveletIndex> out;
  for (const auto& e : coeffs.detail)
    if (std::abs(e.second) >= policy.eps(e.first.first))
      out.push_back({e.first.first, e.first.second});
  return out;
}

AdaptiveIndexSet threshold(const AdaptiveCoeffs& coeffs, int coarse_level,
                           int max_detail_level,
                           const ThresholdPolicy& policy) {
  AdaptiveIndexSet s(coarse_level, max_detail_level);
  for (const auto& ix : significant_indices(coeffs, policy))
    s.insert(ix.j, ix.k);
  return s;
}

AdaptiveIndexSet extend(const std::vector<WaveletIndex>& significant,
                        int coarse_level, int max_detail_level,
                        int neighbor_width) {
  AdaptiveIndexSet out(coarse_level, max_detail_level);
  for (const auto& ix : significant) {
    out.insert(ix.j, ix.k);
    // Both children; beyond the cap they are dropped and the flag raised.
    if (ix.j + 1 > max_detail_level) {
      out.set_saturated();
    } else {
      out.insert(ix.j + 1, 2 * ix.k);
      out.insert(ix.j + 1, 2 * ix.k + 1);
    }
  }
  // Lateral neighbors of the extended set, clamped to the valid range.
  for (const auto& ix : out.indices())
    for (int s = 1; s <= neighbor_width; ++s) {
      if (ix.k - s >= 0) out.insert(ix.j, ix.k - s);
      if (ix.k + s < (1L << ix.j)) out.insert(ix.j, ix.k + s);
    }
  out.complete_grading();
  return out;
}

AdaptiveIndexSet extend(const AdaptiveIndexSet& sig,
                        const ThresholdPolicy& policy) {
  AdaptiveIndexSet out = extend(sig.indices(), sig.coarse_level(),
                                sig.max_detail_level(), policy.neighbor_width);
  if (sig.saturated()) out.set_saturated();
  return out;
}

// ---------------------------------------------------------------------------
// Active-basis machinery: each active function (coarse scaling function or
// wavelet) expanded in the single-scale basis at a common fine level L, kept
// as a contiguous coefficient segment.

namespace {

struct Segment {
  int lo = 0;
  std::vector<double> v;
};

Segment sparse_col_segment(const SpMat& m, int col) {
  int lo = std::numeric_limits<int>::max(), hi = -1;
  for (SpMat::InnerIterator it(m, col); it; ++it) {
    lo = std::min(lo, static_cast<int>(it.row()));
    hi = std::max(hi, static_cast<int>(it.row()));
  }
  Segment s;
  if (hi < 0) return s;
  s.lo = lo;
  s.v.assign(hi - lo + 1, 0.0);
  for (SpMat::InnerIterator it(m, col); it; ++it)
    s.v[it.row() - lo] += it.value();
  return s;
}

Segment refine_segment(const SpMat& refine, const Segment& s) {
  int lo = std::numeric_limits<int>::max(), hi = -1;
  for (size_t t = 0; t < s.v.size(); ++t) {
    if (s.v[t] == 0.0) continue;
    for (SpMat::InnerIterator it(refine, s.lo + static_cast<int>(t)); it; ++it) {
      lo = std::min(lo, static_cast<int>(it.row()));
      hi = std::max(hi, static_cast<int>(it.row()));
    }
  }
  Segment out;
  if (hi < 0) return out;
  out.lo = lo;
  out.v.assign(hi - lo + 1, 0.0);
  for (size_t t = 0; t < s.v.size(); ++t) {
    double c = s.v[t];
    if (c == 0.0) continue;
    for (SpMat::InnerIterator it(refine, s.lo + static_cast<int>(t)); it; ++it)
      out.v[it.row() - lo] += c * it.value();
  }
  return out;
}

class ActiveBasis {
 public:
  ActiveBasis(int order, const std::string& family, int j0, int fine_level,
              const std::vector<WaveletIndex>& wavelets)
      : order_(order), j0_(j0), L_(fine_level), wav_(wavelets) {
    require(L_ > j0_, "active basis: fine level must exceed coarse level");
    const StencilFamily& fam = stencil_family(family);
    require(fam.order == order_, "active basis: family order mismatch");
    std::vector<SpMat> refine;  // level j0 + i -> j0 + i + 1
    for (int j = j0_; j < L_; ++j) refine.push_back(refinement_matrix(order_, j));
    std::map<int, SpMat> sten;
    for (const auto& ix : wav_) {
      require(ix.j >= j0_ && ix.j < L_, "active basis: wavelet level out of range");
      if (!sten.count(ix.j)) sten.emplace(ix.j, stencil_matrix(fam, ix.j));
    }
    int nc = basis_size(order_, j0_);
    seg_.reserve(nc + wav_.size());
    for (int k = 0; k < nc; ++k) {
      Segment s;
      s.lo = k;
      s.v = {1.0};
      for (int j = j0_; j < L_; ++j) s = refine_segment(refine[j - j0_], s);
      seg_.push_back(std::move(s));
    }
    for (const auto& ix : wav_) {
      Segment s = sparse_col_segment(sten.at(ix.j), static_cast<int>(ix.k));
      for (int j = ix.j + 1; j < L_; ++j) s = refine_segment(refine[j - j0_], s);
      seg_.push_back(std::move(s));
    }
  }

  int order() const { return order_; }
  int coarse_level() const { return j0_; }
  int fine_level() const { return L_; }
  int coarse_count() const { return basis_size(order_, j0_); }
  int total() const { return static_cast<int>(seg_.size()); }
  const std::vector<WaveletIndex>& wavelets() const { return wav_; }
  const Segment& segment(int slot) const { return seg_[slot]; }

  void scatter(int slot, std::vector<double>& full) const {
    std::fill(full.begin(), full.end(), 0.0);
    const Segment& s = seg_[slot];
    std::copy(s.v.begin(), s.v.end(), full.begin() + s.lo);
  }

  double dot(int slot, const std::vector<double>& full) const {
    const Segment& s = seg_[slot];
    double r = 0.0;
    for (size_t t = 0; t < s.v.size(); ++t) r += s.v[t] * full[s.lo + t];
    return r;
  }

 private:
  int order_, j0_, L_;
  std::vector<WaveletIndex> wav_;
  std::vector<Segment> seg_;
};

// Inverse square roots a(psi,psi)^{-1/2} for the active slots, drawn from the
// full multiscale layout so that thresholding and assembly use identical
// scales everywhere.
std::vector<double> active_inv_norms(const ActiveBasis& ab,
                                     const WaveletTransform& wt,
                                     const LevelDiagonal& diag) {
  std::vector<double> w(ab.total());
  for (int k = 0; k < ab.coarse_count(); ++k) w[k] = diag.diag[k];
  const auto& wav = ab.wavelets();
  for (size_t i = 0; i < wav.size(); ++i)
    w[ab.coarse_count() + i] =
        diag.diag[wt.detail_offset(wav[i].j) + wav[i].k];
  return w;
}

// Dense restricted Galerkin matrix in the scaled basis: entry (a, b) =
// a(psihat_b, psihat_a), built from one fast operator product per column.
Eigen::MatrixXd restricted_stiffness(const ActiveBasis& ab,
                                     const StiffnessOperator& a,
                                     const std::vector<double>& inv_norm) {
  int n = ab.total();
  int nfull = a.size();
  Eigen::MatrixXd m(n, n);
  std::vector<double> x(nfull), z(nfull);
  for (int b = 0; b < n; ++b) {
    ab.scatter(b, x);
    a.apply(x, z);
    for (int r = 0; r < n; ++r) m(r, b) = ab.dot(r, z) * inv_norm[r] * inv_norm[b];
  }
  return m;
}

Eigen::MatrixXd restricted_mass(const ActiveBasis& ab, const SplineBasis& basis,
                                const std::vector<double>& inv_norm) {
  int n = ab.total();
  int nfull = basis.size();
  Eigen::MatrixXd m(n, n);
  std::vector<double> x(nfull), z(nfull);
  for (int b = 0; b < n; ++b) {
    ab.scatter(b, x);
    mass_apply(basis, x, z);
    for (int r = 0; r < n; ++r) m(r, b) = ab.dot(r, z) * inv_norm[r] * inv_norm[b];
  }
  return m;
}

std::vector<double> restricted_load(const ActiveBasis& ab,
                                    const std::vector<double>& full_load,
                                    const std::vector<double>& inv_norm) {
  std::vector<double> rhs(ab.total());
  for (int r = 0; r < ab.total(); ++r)
    rhs[r] = ab.dot(r, full_load) * inv_norm[r];
  return rhs;
}

// Iterative solve with the unit-diagonal scaling as the preconditioner and a
// warm start, with a direct fallback. GMRES is run on the correction
// equation M delta = rhs - M x0 with Jacobi scaling.
std::vector<double> solve_restricted(const Eigen::MatrixXd& m,
                                     const std::vector<double>& rhs,
                                     const std::vector<double>& warm,
                                     double* iters, bool* direct) {
  int n = static_cast<int>(rhs.size());
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  if (!warm.empty()) {
    require(static_cast<int>(warm.size()) == n, "warm start size mismatch");
    x0 = Eigen::Map<const Eigen::VectorXd>(warm.data(), n);
  }
  Eigen::VectorXd d = m.diagonal();
  bool diag_ok = true;
  for (int i = 0; i < n; ++i)
    if (!(std::abs(d[i]) > 1e-14)) diag_ok = false;
  if (diag_ok) {
    Eigen::VectorXd r0 = b - m * x0;
    std::vector<double> bp(n);
    for (int i = 0; i < n; ++i) bp[i] = r0[i] / d[i];
    LinearOp op = [&](const std::vector<double>& in, std::vector<double>& out) {
      Eigen::Map<const Eigen::VectorXd> vi(in.data(), n);
      Eigen::VectorXd vo = m * vi;
      out.resize(n);
      for (int i = 0; i < n; ++i) out[i] = vo[i] / d[i];
    };
    SolveOptions so;
    so.tol = 1e-12;
    so.maxit = n;
    SolveResult sr = solve_gmres(op, bp, so);
    if (sr.converged) {
      if (iters) *iters = sr.iters;
      if (direct) *direct = false;
      std::vector<double> out(n);
      for (int i = 0; i < n; ++i) out[i] = x0[i] + sr.x[i];
      return out;
    }
  }
  Eigen::VectorXd x = m.partialPivLu().solve(b);
  if (iters) *iters = static_cast<double>(n);
  if (direct) *direct = true;
  return std::vector<double>(x.data(), x.data() + n);
}

// Raw (unscaled-basis) multiscale vector for the full layout of wt, from
// scaled coefficients over the active slots.
std::vector<double> full_multiscale(const ActiveBasis& ab,
                                    const WaveletTransform& wt,
                                    const std::vector<double>& coeff,
                                    const std::vector<double>& inv_norm) {
  std::vector<double> multi(wt.size(), 0.0);
  for (int k = 0; k < ab.coarse_count(); ++k) multi[k] = coeff[k] * inv_norm[k];
  const auto& wav = ab.wavelets();
  for (size_t i = 0; i < wav.size(); ++i) {
    int slot = ab.coarse_count() + static_cast<int>(i);
    multi[wt.detail_offset(wav[i].j) + wav[i].k] =
        coeff[slot] * inv_norm[slot];
  }
  return multi;
}

AdaptiveCoeffs coeffs_from_slots(const ActiveBasis& ab,
                                 const std::vector<double>& coeff) {
  AdaptiveCoeffs c;
  c.coarse.assign(coeff.begin(), coeff.begin() + ab.coarse_count());
  const auto& wav = ab.wavelets();
  for (size_t i = 0; i < wav.size(); ++i)
    c.detail[{wav[i].j, wav[i].k}] = coeff[ab.coarse_count() + i];
  return c;
}

std::vector<double> slots_from_coeffs(const ActiveBasis& ab,
                                      const AdaptiveCoeffs& c) {
  std::vector<double> x(ab.total(), 0.0);
  int nc = ab.coarse_count();
  for (int k = 0; k < nc && k < static_cast<int>(c.coarse.size()); ++k)
    x[k] = c.coarse[k];
  const auto& wav = ab.wavelets();
  for (size_t i = 0; i < wav.size(); ++i) {
    auto it = c.detail.find({wav[i].j, wav[i].k});
    if (it != c.detail.end()) x[nc + i] = it->second;
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stationary adaptive solver

AdaptiveBvpResult adaptive_bvp_solve(const AdaptiveBvpOptions& opt,
                                     const std::function<double(double)>& f) {
  const int j0 = opt.coarse_level;
  AdaptiveBvpResult result;
  AdaptiveIndexSet active(j0, opt.max_detail_level);
  for (long k = 0; k < (1L << j0); ++k) active.insert(j0, k);

  AdaptiveCoeffs prev;  // zero warm start for the first pass
  for (int m = 0;; ++m) {
    int fine = std::max(active.max_active_level() + 1, j0 + 1);
    ActiveBasis ab(opt.order, opt.family, j0, fine, active.indices());
    WaveletTransform wt(opt.order, opt.family, j0, fine);
    LevelDiagonal diag = level_diag_sqrt_inv(wt, opt.prm);
    std::vector<double> inv_norm = active_inv_norms(ab, wt, diag);

    StiffnessOperator a(opt.order, fine, opt.prm);
    Eigen::MatrixXd mat = restricted_stiffness(ab, a, inv_norm);
    std::vector<double> full_load =
        load_vector_singular(a.basis(), f, opt.quad_nodes);
    std::vector<double> rhs = restricted_load(ab, full_load, inv_norm);

    AdaptivePass pass{active, ab.total(), fine, {}, {}, {}, 0.0, false};
    std::vector<double> warm = slots_from_coeffs(ab, prev);
    std::vector<double> coeff =
        solve_restricted(mat, rhs, warm, &pass.solver_iters, &pass.direct_fallback);
    pass.coeffs = coeffs_from_slots(ab, coeff);
    wt.reconstruct(full_multiscale(ab, wt, coeff, inv_norm), pass.single);
    pass.significant = significant_indices(pass.coeffs, opt.policy);
    int newest = active.max_active_level();
    bool newest_active = false;
    for (const auto& ix : pass.significant)
      if (ix.j == newest) newest_active = true;
    result.passes.push_back(std::move(pass));

    if (!newest_active) break;
    if (m + 1 > opt.policy.it_max) break;
    AdaptiveIndexSet next =
        extend(result.passes.back().significant, j0, opt.max_detail_level,
               opt.policy.neighbor_width);
    if (next.saturated()) result.saturated = true;
    if (next == active) break;
    prev = result.passes.back().coeffs;
    active = next;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Time stepper

struct AdaptiveIbvpStepper::Impl {
  AdaptiveIbvpOptions opt;
  AdaptiveIndexSet active;
  AdaptiveCoeffs coeffs;
  bool saturated = false;
  double last_iters = 0.0;

  // Cached per-index-set system pieces (dt independent).
  bool cache_ok = false;
  AdaptiveIndexSet cache_set;
  int fine = 0;
  std::unique_ptr<ActiveBasis> ab;
  std::unique_ptr<WaveletTransform> wt;
  std::unique_ptr<SplineBasis> basis;
  std::vector<double> inv_norm;
  std::unique_ptr<StiffnessOperator> a_op;  // galerkin path
  Eigen::MatrixXd ahat, mhat;               // galerkin path
  Eigen::MatrixXd cmat, gmat;               // collocation path
  std::vector<double> pts;                  // collocation path

  mutable bool single_ok = false;
  mutable std::vector<double> single;

  explicit Impl(const AdaptiveIbvpOptions& o)
      : opt(o), active(o.coarse_level, o.max_detail_level) {
    require(stencil_family(o.family).order == o.order,
            "adaptive stepper: family order mismatch");
    if (o.scheme == AdaptiveScheme::collocation)
      require(o.order == 4, "collocation stepping needs the cubic basis");
  }

  void invalidate() {
    cache_ok = false;
    single_ok = false;
  }

  void ensure_cache() {
    if (cache_ok && cache_set == active) return;
    fine = std::max(active.max_active_level() + 1, opt.coarse_level + 1);
    ab = std::make_unique<ActiveBasis>(opt.order, opt.family, opt.coarse_level,
                                       fine, active.indices());
    wt = std::make_unique<WaveletTransform>(opt.order, opt.family,
                                            opt.coarse_level, fine);
    LevelDiagonal diag = level_diag_sqrt_inv(*wt, opt.prm);
    inv_norm = active_inv_norms(*ab, *wt, diag);
    basis = std::make_unique<SplineBasis>(opt.order, fine);
    if (opt.scheme == AdaptiveScheme::galerkin) {
      a_op = std::make_unique<StiffnessOperator>(opt.order, fine, opt.prm);
      ahat = restricted_stiffness(*ab, *a_op, inv_norm);
      mhat = restricted_mass(*ab, *basis, inv_norm);
    } else {
      build_collocation();
    }
    cache_set = active;
    cache_ok = true;
  }

  // Collocation points: interior coarse knots plus two near-boundary dyadic
  // points for the full scaling block, then the dyadic midpoint of each
  // active wavelet index. If a level-j0 extreme wavelet already owns the
  // half point, the coarse extra point moves to the quarter point.
  static std::vector<double> collocation_points_for(
      int j0, const std::vector<WaveletIndex>& wav) {
    std::vector<double> pts;
    bool left_taken = false, right_taken = false;
    for (const auto& ix : wav) {
      if (ix.j == j0 && ix.k == 0) left_taken = true;
      if (ix.j == j0 && ix.k == (1L << j0) - 1) right_taken = true;
    }
    double h = pow2d(-j0);
    pts.push_back(left_taken ? h / 4.0 : h / 2.0);
    for (long k = 1; k < (1L << j0); ++k) pts.push_back(k * h);
    pts.push_back(1.0 - (right_taken ? h / 4.0 : h / 2.0));
    for (const auto& ix : wav)
      pts.push_back((2.0 * ix.k + 1.0) * pow2d(-(ix.j + 1)));
    return pts;
  }

  void build_collocation() {
    pts = collocation_points_for(opt.coarse_level, ab->wavelets());
    require(static_cast<int>(pts.size()) == ab->total(),
            "collocation point count mismatch");
    int n = ab->total();
    int nfull = basis->size();
    const double beta = opt.prm.beta;
    const double scale =
        std::pow(pow2d(fine), 2.0 - beta) * pow2half(fine) * opt.prm.kappa;

    // Pointwise action of the operator on every fine-level basis function at
    // every collocation point, via the one-sided fractional derivative of the
    // prototype polynomial and its reflection.
    std::map<int, PiecewisePoly> proto_fwd;
    for (int k = 1; k <= nfull; ++k) {
      SplineBasis::Desc dd = basis->desc(k);
      if (!dd.mirrored && !proto_fwd.count(dd.proto)) {
        PiecewisePoly r = basis->proto_in_y(k).substituted(
            1.0, static_cast<double>(dd.anchor));
        proto_fwd.emplace(dd.proto, std::move(r));
      }
    }
    std::map<int, FracDerivEvaluator> ev_fwd, ev_rev;
    for (const auto& e : proto_fwd) {
      double w = e.second.support_right();
      ev_fwd.emplace(e.first, FracDerivEvaluator(e.second, beta));
      ev_rev.emplace(e.first,
                     FracDerivEvaluator(e.second.substituted(-1.0, w), beta));
    }

    Eigen::MatrixXd z(n, nfull);
    const double c = pow2d(fine);
    for (int m = 1; m <= nfull; ++m) {
      SplineBasis::Desc dd = basis->desc(m);
      const auto& fwd = ev_fwd.at(dd.proto);
      const auto& rev = ev_rev.at(dd.proto);
      double a_left = static_cast<double>(dd.anchor);
      double a_right = c - dd.anchor - dd.width;
      const FracDerivEvaluator& eleft = dd.mirrored ? rev : fwd;
      const FracDerivEvaluator& eright = dd.mirrored ? fwd : rev;
      for (int i = 0; i < n; ++i) {
        double left = opt.prm.p != 0.0 ? eleft(c * pts[i] - a_left) : 0.0;
        double right =
            opt.prm.p != 1.0 ? eright(c * (1.0 - pts[i]) - a_right) : 0.0;
        z(i, m - 1) =
            -scale * (opt.prm.p * left + (1.0 - opt.prm.p) * right);
      }
    }

    cmat.resize(n, n);
    gmat.resize(n, n);
    for (int b = 0; b < n; ++b) {
      const Segment& s = ab->segment(b);
      for (int i = 0; i < n; ++i) {
        double g = 0.0;
        for (size_t t = 0; t < s.v.size(); ++t)
          g += s.v[t] * z(i, s.lo + static_cast<int>(t));
        gmat(i, b) = g * inv_norm[b];
        double cv = 0.0;
        for (int k : basis->supported_at(pts[i])) {
          int slot = k - 1;
          if (slot >= s.lo && slot < s.lo + static_cast<int>(s.v.size()))
            cv += s.v[slot - s.lo] * basis->eval(k, pts[i]);
        }
        cmat(i, b) = cv * inv_norm[b];
      }
    }
  }

  std::vector<double> slot_values() const {
    return slots_from_coeffs(*ab, coeffs);
  }

  void set_from_slots(const std::vector<double>& coeff) {
    coeffs = coeffs_from_slots(*ab, coeff);
    single_ok = false;
  }

  void threshold_and_extend() {
    std::vector<WaveletIndex> sig = significant_indices(coeffs, opt.policy);
    AdaptiveIndexSet next = extend(sig, opt.coarse_level, opt.max_detail_level,
                                   opt.policy.neighbor_width);
    if (next.saturated()) saturated = true;
    if (!(next == active)) {
      // Keep coefficients for surviving indices, zero-init the new ones.
      AdaptiveCoeffs trimmed;
      trimmed.coarse = coeffs.coarse;
      for (const auto& ix : next.indices()) {
        auto it = coeffs.detail.find({ix.j, ix.k});
        trimmed.detail[{ix.j, ix.k}] = it == coeffs.detail.end() ? 0.0 : it->second;
      }
      coeffs = std::move(trimmed);
      active = next;
      invalidate();
    } else {
      // Same set: drop entries that fell out of the kept map? The set is
      // unchanged, so all active entries stay; nothing to do.
    }
  }

  void rebuild_single() const {
    std::vector<double> coeff = slots_from_coeffs(*ab, coeffs);
    std::vector<double> multi = full_multiscale(*ab, *wt, coeff, inv_norm);
    wt->reconstruct(multi, single);
    single_ok = true;
  }
};

AdaptiveIbvpStepper::AdaptiveIbvpStepper(const AdaptiveIbvpOptions& opt)
    : impl_(std::make_unique<Impl>(opt)) {}
AdaptiveIbvpStepper::~AdaptiveIbvpStepper() = default;

void AdaptiveIbvpStepper::initialize(const std::function<double(double)>& u0) {
  Impl& s = *impl_;
  const auto& opt = s.opt;
  int lc = opt.max_detail_level + 1;
  SplineBasis basis(opt.order, lc);
  std::vector<double> load = load_vector_singular(basis, u0, opt.quad_nodes);
  LinearOp mass_op = [&](const std::vector<double>& x, std::vector<double>& y) {
    mass_apply(basis, x, y);
  };
  SolveOptions so;
  so.tol = 1e-13;
  so.maxit = 10000;
  SolveResult pr = solve_cg(mass_op, load, so);
  require(pr.converged, "initial projection: mass solve failed");

  WaveletTransform wt(opt.order, opt.family, opt.coarse_level, lc);
  std::vector<double> multi;
  wt.decompose(pr.x, multi);
  LevelDiagonal diag = level_diag_sqrt_inv(wt, opt.prm);

  AdaptiveCoeffs full;
  full.coarse.assign(multi.begin(), multi.begin() + wt.scaling_size());
  for (int k = 0; k < wt.scaling_size(); ++k) full.coarse[k] /= diag.diag[k];
  for (int j = opt.coarse_level; j < lc; ++j)
    for (int k = 0; k < (1 << j); ++k) {
      int off = wt.detail_offset(j) + k;
      full.detail[{j, k}] = multi[off] / diag.diag[off];
    }

  std::vector<WaveletIndex> sig = significant_indices(full, opt.policy);
  AdaptiveIndexSet g0 = extend(sig, opt.coarse_level, opt.max_detail_level,
                               opt.policy.neighbor_width);
  if (g0.saturated()) s.saturated = true;

  s.active = g0;
  s.coeffs.coarse = full.coarse;
  s.coeffs.detail.clear();
  for (const auto& ix : g0.indices()) {
    auto it = full.detail.find({ix.j, ix.k});
    s.coeffs.detail[{ix.j, ix.k}] = it == full.detail.end() ? 0.0 : it->second;
  }
  s.invalidate();
}

void AdaptiveIbvpStepper::step(const std::function<double(double, double)>& f,
                               double t, double dt) {
  Impl& s = *impl_;
  s.ensure_cache();
  int n = s.ab->total();
  std::vector<double> cur = s.slot_values();
  Eigen::Map<const Eigen::VectorXd> c0(cur.data(), n);
  Eigen::MatrixXd lhs;
  Eigen::VectorXd rhs;
  if (s.opt.scheme == AdaptiveScheme::galerkin) {
    lhs = s.mhat + 0.5 * dt * s.ahat;
    double tau = t + 0.5 * dt;
    std::vector<double> load = load_vector_singular(
        *s.basis, [&](double x) { return f(x, tau); }, s.opt.quad_nodes);
    std::vector<double> fr = restricted_load(*s.ab, load, s.inv_norm);
    rhs = (s.mhat - 0.5 * dt * s.ahat) * c0 +
          dt * Eigen::Map<const Eigen::VectorXd>(fr.data(), n);
  } else {
    lhs = s.cmat + 0.5 * dt * s.gmat;
    double tau = t + 0.5 * dt;
    Eigen::VectorXd fv(n);
    for (int i = 0; i < n; ++i) fv[i] = f(s.pts[i], tau);
    rhs = (s.cmat - 0.5 * dt * s.gmat) * c0 + dt * fv;
  }
  std::vector<double> rhs_v(rhs.data(), rhs.data() + n);
  std::vector<double> next =
      solve_restricted(lhs, rhs_v, cur, &s.last_iters, nullptr);
  s.set_from_slots(next);
  s.threshold_and_extend();
}

void AdaptiveIbvpStepper::solve_stationary(
    const std::function<double(double)>& g) {
  Impl& s = *impl_;
  s.ensure_cache();
  int n = s.ab->total();
  std::vector<double> rhs;
  const Eigen::MatrixXd* mat = nullptr;
  if (s.opt.scheme == AdaptiveScheme::galerkin) {
    std::vector<double> load =
        load_vector_singular(*s.basis, g, s.opt.quad_nodes);
    rhs = restricted_load(*s.ab, load, s.inv_norm);
    mat = &s.ahat;
  } else {
    rhs.resize(n);
    for (int i = 0; i < n; ++i) rhs[i] = g(s.pts[i]);
    mat = &s.gmat;
  }
  std::vector<double> warm = s.slot_values();
  bool direct = false;
  std::vector<double> c =
      solve_restricted(*mat, rhs, warm, &s.last_iters, &direct);
  s.set_from_slots(c);
}

const AdaptiveIndexSet& AdaptiveIbvpStepper::active() const {
  return impl_->active;
}
const AdaptiveCoeffs& AdaptiveIbvpStepper::coeffs() const {
  return impl_->coeffs;
}
bool AdaptiveIbvpStepper::saturated() const { return impl_->saturated; }
int AdaptiveIbvpStepper::fine_level() const {
  impl_->ensure_cache();
  return impl_->fine;
}
std::vector<double> AdaptiveIbvpStepper::single_scale() const {
  impl_->ensure_cache();
  if (!impl_->single_ok) impl_->rebuild_single();
  return impl_->single;
}
double AdaptiveIbvpStepper::eval(double x) const {
  impl_->ensure_cache();
  if (!impl_->single_ok) impl_->rebuild_single();
  return impl_->basis->eval_expansion(impl_->single, x);
}
std::vector<double> AdaptiveIbvpStepper::collocation_points() const {
  require(impl_->opt.scheme == AdaptiveScheme::collocation,
          "collocation points exist only for the collocation scheme");
  impl_->ensure_cache();
  return impl_->pts;
}
double AdaptiveIbvpStepper::last_solver_iters() const {
  return impl_->last_iters;
}

}  // namespace fracwave
