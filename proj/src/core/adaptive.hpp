#pragma once
/// Adaptive multiscale solvers: coefficient thresholding, child/neighbor
/// index-set extension, and restricted solves over an active wavelet set.
///
/// The active degrees of freedom are the full coarse scaling block at level
/// j0 plus a set of wavelet indices (j, k), j0 <= j <= max detail level,
/// k in [0, 2^j). Every basis function is scaled by a(psi,psi)^{-1/2}, so the
/// restricted stiffness matrix has unit diagonal (the scaling is the diagonal
/// preconditioner) and coefficient magnitudes are comparable across levels,
/// which is what the threshold acts on.
///
/// Two drivers are provided:
///  - adaptive_bvp_solve: stationary problem; repeats solve -> threshold ->
///    extend (children of the significant set, then lateral neighbors),
///    warm-starting each refined solve from the previous coefficients padded
///    with zeros, until no coefficient on the newest level reaches the
///    threshold or the pass limit is hit.
///  - AdaptiveIbvpStepper: time stepping (Crank-Nicolson) where each step
///    solves on the previous index set, thresholds the new coefficients,
///    extends, and zero-initializes newly activated coefficients. Test
///    functionals are either the same scaled multiscale basis (galerkin) or
///    point evaluations at dyadic points matched to the active indices
///    (collocation).

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "core/assembly.hpp"
#include "core/wavelets.hpp"

namespace fracwave {

struct WaveletIndex {
  int j = 0;
  long k = 0;
};
inline bool operator<(const WaveletIndex& a, const WaveletIndex& b) {
  return a.j != b.j ? a.j < b.j : a.k < b.k;
}
inline bool operator==(const WaveletIndex& a, const WaveletIndex& b) {
  return a.j == b.j && a.k == b.k;
}

/// Set of active wavelet indices between the coarse level and an inclusive
/// detail-level cap. The coarse scaling block is implicitly always active.
/// insert() is raw (no parent completion); complete_grading() adds missing
/// parents so that every entry (j, k) with j > coarse has its parent
/// (j-1, k/2) present. Attempts to insert beyond the cap are dropped and
/// flagged via saturated().
class AdaptiveIndexSet {
 public:
  AdaptiveIndexSet(int coarse_level, int max_detail_level);

  int coarse_level() const { return j0_; }
  int max_detail_level() const { return jcap_; }

  bool contains(int j, long k) const;
  /// Adds (j, k); returns whether it was newly added. k out of [0, 2^j) is
  /// rejected (throws); j > cap sets the saturation flag and is dropped;
  /// j < coarse level throws.
  bool insert(int j, long k);
  void complete_grading();
  bool graded() const;

  bool saturated() const { return saturated_; }
  void set_saturated() { saturated_ = true; }

  int count() const { return static_cast<int>(set_.size()); }
  /// Highest level present, or coarse_level() - 1 when empty.
  int max_active_level() const;
  std::vector<WaveletIndex> indices() const;  // sorted by (j, k)

  bool operator==(const AdaptiveIndexSet& o) const {
    return j0_ == o.j0_ && jcap_ == o.jcap_ && set_ == o.set_;
  }

 private:
  int j0_, jcap_;
  bool saturated_ = false;
  std::set<std::pair<int, long>> set_;
};

/// Threshold/extension policy. eps(j) is the per-level keep threshold on the
/// scaled coefficients (kept iff |d| >= eps(j)); it_max bounds the number of
/// refinement passes after the initial solve; neighbor_width lateral
/// neighbors are added on each side during extension.
struct ThresholdPolicy {
  std::function<double(int)> eps = [](int) { return 1e-5; };
  int it_max = 12;
  int neighbor_width = 1;
};

/// Scaled multiscale coefficients over an active set: the coarse scaling
/// block (dense) plus one value per active wavelet index. Missing keys mean
/// zero.
struct AdaptiveCoeffs {
  std::vector<double> coarse;
  std::map<std::pair<int, long>, double> detail;
};

/// Indices whose scaled coefficient satisfies |d| >= eps(j). The result is
/// exactly the kept set (no grading completion).
std::vector<WaveletIndex> significant_indices(const AdaptiveCoeffs& coeffs,
                                              const ThresholdPolicy& policy);

/// Threshold as a set operation: wraps significant_indices into an index set
/// with the given bounds (raw; may be non-graded).
AdaptiveIndexSet threshold(const AdaptiveCoeffs& coeffs, int coarse_level,
                           int max_detail_level, const ThresholdPolicy& policy);

/// Adjacent-zone closure: starting from the significant indices, add both
/// children of each, then the lateral neighbors (clamped to [0, 2^j)) of the
/// whole extended set, then complete grading. Children beyond the cap are
/// dropped and flagged on the result.
AdaptiveIndexSet extend(const std::vector<WaveletIndex>& significant,
                        int coarse_level, int max_detail_level,
                        int neighbor_width = 1);
/// Same, treating every entry of `sig` as significant; bounds carry over.
AdaptiveIndexSet extend(const AdaptiveIndexSet& sig,
                        const ThresholdPolicy& policy);

/// One refinement pass of the stationary solver.
struct AdaptivePass {
  AdaptiveIndexSet active;
  int dof = 0;         ///< coarse block + active wavelet count
  int fine_level = 0;  ///< synthesis level L = max active level + 1
  std::vector<double> single;  ///< single-scale coefficients at fine_level
  AdaptiveCoeffs coeffs;       ///< scaled multiscale coefficients
  std::vector<WaveletIndex> significant;  ///< after this pass's solve
  double solver_iters = 0.0;
  bool direct_fallback = false;
};

struct AdaptiveBvpOptions {
  int order = 3;
  std::string family = "bior33";
  int coarse_level = 3;
  int max_detail_level = 16;
  OperatorParams prm;
  ThresholdPolicy policy;
  int quad_nodes = 12;  ///< load-vector Gauss nodes per cell
};

struct AdaptiveBvpResult {
  std::vector<AdaptivePass> passes;
  bool saturated = false;
};

/// Stationary adaptive solve of a(u, v) = (f, v). The first pass uses the
/// full detail block at the coarse level; each refined solve is warm-started
/// from the previous coefficients padded with zeros. Stops when the pass
/// limit is exceeded, no coefficient on the newest level reaches eps, or the
/// index set stabilizes. Endpoint-singular sources are handled by graded
/// quadrature in the load assembly.
AdaptiveBvpResult adaptive_bvp_solve(const AdaptiveBvpOptions& opt,
                                     const std::function<double(double)>& f);

enum class AdaptiveScheme { galerkin, collocation };

struct AdaptiveIbvpOptions {
  int order = 4;
  std::string family = "semiinterp4";
  int coarse_level = 3;
  int max_detail_level = 9;  ///< finest space level is this + 1
  AdaptiveScheme scheme = AdaptiveScheme::collocation;
  OperatorParams prm;
  ThresholdPolicy policy;
  int quad_nodes = 12;
};

/// Crank-Nicolson stepper for q u_t + A u = f over an evolving index set.
class AdaptiveIbvpStepper {
 public:
  explicit AdaptiveIbvpStepper(const AdaptiveIbvpOptions& opt);
  ~AdaptiveIbvpStepper();

  /// Builds the initial index set and coefficients from the initial data:
  /// fine-level L2 projection, decomposition into scaled coefficients,
  /// threshold, extension; coefficients restricted to the result.
  void initialize(const std::function<double(double)>& u0);

  /// One step t -> t + dt: Crank-Nicolson solve on the current set, then
  /// threshold the new coefficients, extend, and zero-initialize newly
  /// activated indices.
  void step(const std::function<double(double, double)>& f, double t,
            double dt);

  /// Steady solve a(u, v) = (g, v) (or its collocated analogue) on the
  /// current index set, replacing the coefficients; used for steady-state
  /// starts and tests.
  void solve_stationary(const std::function<double(double)>& g);

  const AdaptiveIndexSet& active() const;
  const AdaptiveCoeffs& coeffs() const;
  bool saturated() const;
  int fine_level() const;
  /// Single-scale coefficients at fine_level().
  std::vector<double> single_scale() const;
  double eval(double x) const;
  /// Collocation points of the current set (collocation scheme only).
  std::vector<double> collocation_points() const;
  double last_solver_iters() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fracwave
