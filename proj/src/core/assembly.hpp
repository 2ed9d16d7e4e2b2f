#pragma once
/// Galerkin assembly of the two-sided fractional diffusion form on the dyadic
/// spline bases.
///
/// The operator is -kappa * D ( p * Ileft^beta + (1-p) * Iright^beta ) D with
/// homogeneous endpoint values; its bilinear form on functions vanishing at
/// the endpoints is
///
///   a(u,v) = kappa [ p (Dleft^{1-beta} u, v') + (1-p) (u', Dleft^{1-beta} v) ].
///
/// Interior-interior matrix entries depend only on the index distance and a
/// level scale 2^{J(2-beta)}, so the matrix is Toeplitz up to corrections in
/// the rows and columns of the boundary-adapted functions. The matrix-vector
/// product runs in O(N log N) through a circulant embedding of the Toeplitz
/// part (FFT) plus O(N) dense boundary corrections.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "core/splines.hpp"

namespace fracwave {

struct OperatorParams {
  double beta = 0.0;   ///< order in [0,1): the diffusion order is 2 - beta
  double p = 1.0;      ///< weight of the left-sided part, in [0,1]
  double kappa = 1.0;  ///< diffusion coefficient, > 0
};

class StiffnessOperator {
 public:
  /// entries_only skips the Toeplitz cache, boundary corrections, and FFT
  /// state: entry() and toeplitz_left() work (computed on demand), apply()
  /// does not. Used where only a handful of entries is needed.
  enum class Build { full, entries_only };

  StiffnessOperator(int order, int level, OperatorParams prm,
                    Build mode = Build::full);
  ~StiffnessOperator();
  StiffnessOperator(const StiffnessOperator&) = delete;
  StiffnessOperator& operator=(const StiffnessOperator&) = delete;

  int size() const { return basis_.size(); }
  int order() const { return basis_.order(); }
  int level() const { return basis_.level(); }
  const OperatorParams& params() const { return prm_; }
  const SplineBasis& basis() const { return basis_; }

  /// Matrix entry a(phi_j, phi_i), 1-based (row = test index).
  double entry(int i, int j) const;

  /// y = A x in O(N log N). Not thread-safe across concurrent calls on the
  /// same operator (shared FFT buffers).
  void apply(const std::vector<double>& x, std::vector<double>& y) const;

  /// Dense matrix (small sizes: direct solves, studies, tests).
  Eigen::MatrixXd dense() const;

  /// Toeplitz value of the left-sided part at row-column distance m (includes
  /// the level scale, excludes kappa and the p-weights). Zero for m <= -order.
  double toeplitz_left(int m) const;

 private:
  double left_entry(int i, int j) const;  // (Dleft^{1-beta} phi_j, phi_i')
  double symbol(int proto1, bool mir1, int proto2, bool mir2, long delta) const;

  SplineBasis basis_;
  OperatorParams prm_;
  double level_scale_;        // 2^{J(2-beta)}
  std::vector<double> tau_;   // toeplitz_left(m), m = -order .. N-1
  // Boundary corrections: for boundary index b, the full column
  // (left_entry(i, b) - toeplitz) and full row (left_entry(b, j) - toeplitz,
  // zeroed at boundary columns to avoid double counting).
  std::vector<int> boundary_;
  std::vector<std::vector<double>> corr_col_, corr_row_;

  struct Fft;                       // circulant embedding state
  std::unique_ptr<Fft> fft_;
  mutable std::vector<PlusPowerSum> fracderiv_;   // per (proto, mirrored) slot
  mutable std::vector<PiecewisePoly> protoderiv_; // per (proto, mirrored) slot
};

/// Load vector entries (f, phi_i) by per-cell Gauss quadrature (the basis
/// function is polynomial on each dyadic cell).
std::vector<double> load_vector(const SplineBasis& basis,
                                const std::function<double(double)>& f, int nodes = 12);

/// Load vector for sources with integrable endpoint singularities (types
/// x^{mu} or (1-x)^{mu}, mu > -1): the cells touching an endpoint are
/// geometrically graded toward it, every other cell uses plain Gauss.
std::vector<double> load_vector_singular(const SplineBasis& basis,
                                         const std::function<double(double)>& f,
                                         int nodes = 12, int grade_levels = 50);

/// Banded mass-matrix product y = M x in O(N * order).
void mass_apply(const SplineBasis& basis, const std::vector<double>& x,
                std::vector<double>& y);

/// Dense mass matrix.
Eigen::MatrixXd mass_dense(const SplineBasis& basis);

}  // namespace fracwave
