#pragma once
/// Krylov solvers, the diagonal multilevel preconditioner, and power-iteration
/// spectral estimation for the fractional stiffness systems.
///
/// The preconditioned system is the wavelet-coordinate operator
///   K T^t A T K,
/// where T reconstructs single-scale coefficients from the multiscale vector
/// (so T^t A T is the stiffness matrix in the wavelet basis) and K is a
/// positive diagonal: either the theoretical per-level weights 2^{-j alpha}
/// or the inverse square roots of the wavelet-basis diagonal.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "core/assembly.hpp"
#include "core/wavelets.hpp"

namespace fracwave {

/// y = A x; implementations must accept aliasing-free distinct buffers.
using LinearOp =
    std::function<void(const std::vector<double>&, std::vector<double>&)>;

struct SolveOptions {
  double tol = 1e-8;  ///< stop when ||r_k|| / ||r_0|| <= tol (start x = 0)
  int maxit = 0;      ///< 0: dimension-based default per method
};

struct SolveResult {
  std::vector<double> x;
  double iters = 0.0;  ///< bicgstab counts a converged first half-step as 0.5
  bool converged = false;
  std::string note;  ///< breakdown / stagnation diagnostics, empty if clean
  std::vector<double> residual_history;  ///< relative residual per (half-)step
};

/// Conjugate gradients; requires a symmetric positive definite operator.
SolveResult solve_cg(const LinearOp& op, const std::vector<double>& b,
                     SolveOptions opt = {});

/// Full GMRES (no restart). Residual stagnation over 50 consecutive
/// iterations is reported in `note` but the iteration continues to maxit.
SolveResult solve_gmres(const LinearOp& op, const std::vector<double>& b,
                        SolveOptions opt = {});

/// Bi-CGSTAB; scalar breakdown aborts with a note.
SolveResult solve_bicgstab(const LinearOp& op, const std::vector<double>& b,
                           SolveOptions opt = {});

/// Positive diagonal over the multiscale layout [c_{j0} | d_{j0} | ... |
/// d_{J-1}] used as the two-sided preconditioner K.
struct LevelDiagonal {
  std::vector<double> diag;
};

/// Theoretical weights 2^{-j alpha}, with j the block level (scaling block ->
/// coarse level).
LevelDiagonal level_diag_theoretical(const WaveletTransform& wt, double alpha);

/// Inverse square roots of the wavelet-basis operator diagonal
/// a(psi_{j,k}, psi_{j,k}). Within a level, interior entries coincide by
/// shift invariance, so only boundary-adjacent columns plus one interior
/// column per level are evaluated (O(levels) quadratic forms) and the
/// interior value is replicated.
LevelDiagonal level_diag_sqrt_inv(const WaveletTransform& wt,
                                  const OperatorParams& prm);

/// The preconditioned operator y = K T^t A T K x with A applied in
/// O(N log N) and T, T^t as fast transforms.
class PreconditionedOperator {
 public:
  PreconditionedOperator(const StiffnessOperator& a, const WaveletTransform& wt,
                         LevelDiagonal k);

  int size() const { return a_.size(); }
  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  /// Right-hand side in preconditioned coordinates: K T^t f.
  std::vector<double> rhs(const std::vector<double>& f) const;
  /// Single-scale coefficients of a preconditioned solution: T K y.
  std::vector<double> recover(const std::vector<double>& y) const;
  const LevelDiagonal& k() const { return k_; }

 private:
  const StiffnessOperator& a_;
  const WaveletTransform& wt_;
  LevelDiagonal k_;
};

struct SpectralEstimate {
  double lmax = 0.0;  ///< largest eigenvalue (spd) or singular value (sv)
  double lmin = 0.0;  ///< smallest eigenvalue (spd) or singular value (sv)
  double cond = 0.0;  ///< lmax / lmin
  bool converged = false;
};

/// Extreme eigenvalues of a symmetric positive definite operator: power
/// iteration for lmax, inverse power iteration through `solve` for lmin.
/// Deterministic start vector; stops on relative Rayleigh change <= rel_tol.
SpectralEstimate estimate_spectrum_spd(const LinearOp& op, const LinearOp& solve,
                                       int n, double rel_tol = 1e-6,
                                       int maxit = 2000);

/// Extreme singular values of a general operator: power iterations on
/// x -> A^t A x and x -> A^{-1} A^{-t} x through the supplied transposed
/// companions.
SpectralEstimate estimate_spectrum_sv(const LinearOp& op, const LinearOp& op_t,
                                      const LinearOp& solve,
                                      const LinearOp& solve_t, int n,
                                      double rel_tol = 1e-6, int maxit = 2000);

/// Dense matrix of a linear operator (columns op(e_k)); small sizes only.
Eigen::MatrixXd dense_from_op(const LinearOp& op, int n);

}  // namespace fracwave
