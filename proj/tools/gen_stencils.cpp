// Regenerates the derived boundary columns of the wavelet stencil table and
// checks the shipped table against them. The interior taps are classical
// filters; the boundary columns near the interval ends are determined by the
// construction's defining conditions:
//
//   semiorth2    orthogonality to the two coarse hats the window touches
//   bior22/24    vanishing moments of a (staggered) difference window
//   bior33       vanishing of the first three moments over a 4-tap window
//                against the boundary-adapted quadratic scaling functions
//   semiinterp4  point-value vanishing at the coarse grid points
//
// Each condition leaves a one-dimensional solution space; the table stores one
// integer-scaled representative. Exit code 0 means every derived column in the
// shipped table spans the same space as the regenerated one.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/splines.hpp"
#include "core/wavelets.hpp"

using namespace fracwave;

namespace {

int g_failures = 0;

// Exact moment integral of one fine basis function against x^q.
double fine_moment(const SplineBasis& fine, int m, int q) {
  PiecewisePoly p = fine.as_piecewise(m);
  PiecewisePoly mono;
  mono.breaks = {0.0, 1.0};
  Poly monoq;
  monoq.c.assign(q + 1, 0.0);
  monoq.c[q] = 1.0;
  mono.pieces = {monoq};
  return pw_mul(p, mono).integral();
}

// Nullspace vector of an (n-1) x n condition matrix, scaled so the smallest
// nonzero magnitude is about 1 (the table stores columns up to scale anyway).
Eigen::VectorXd one_dim_nullspace(const Eigen::MatrixXd& cond) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cond);
  Eigen::MatrixXd kernel = lu.kernel();
  if (kernel.cols() != 1) {
    std::printf("  ERROR: condition matrix has a %d-dimensional nullspace\n",
                static_cast<int>(kernel.cols()));
    ++g_failures;
    return Eigen::VectorXd::Zero(cond.cols());
  }
  Eigen::VectorXd v = kernel.col(0);
  double smallest = 1e300;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-9) smallest = std::min(smallest, std::abs(v(i)));
  return v / smallest;
}

void compare_with_table(const std::string& family, int which, const Eigen::VectorXd& derived) {
  const StencilFamily& fam = stencil_family(family);
  const auto& [row, taps] = fam.left.at(which);
  std::printf("  %s left[%d] (rows %d..%zu): derived (", family.c_str(), which, row,
              row + taps.size() - 1);
  for (int i = 0; i < derived.size(); ++i)
    std::printf("%s%.6g", i ? ", " : "", derived(i));
  std::printf(")  table (");
  for (size_t i = 0; i < taps.size(); ++i) std::printf("%s%.6g", i ? ", " : "", taps[i]);
  std::printf(")\n");
  if (static_cast<size_t>(derived.size()) != taps.size()) {
    std::printf("  ERROR: length mismatch\n");
    ++g_failures;
    return;
  }
  // Same one-dimensional space: cross-ratios must agree.
  double scale = 0.0;
  for (size_t i = 0; i < taps.size(); ++i)
    if (std::abs(derived(i)) > 1e-9) {
      scale = taps[i] / derived(i);
      break;
    }
  for (size_t i = 0; i < taps.size(); ++i) {
    if (std::abs(taps[i] - scale * derived(i)) > 1e-9 * (1.0 + std::abs(taps[i]))) {
      std::printf("  ERROR: tap %zu differs from the table beyond roundoff\n", i);
      ++g_failures;
      return;
    }
  }
}

// Boundary column against moment conditions: taps at fine rows start..start+n
// must annihilate x^q for q < nmoments.
void derive_moment_column(const std::string& family, int which, int j) {
  const StencilFamily& fam = stencil_family(family);
  const auto& [start, taps] = fam.left.at(which);
  const int n = static_cast<int>(taps.size());
  SplineBasis fine(fam.order, j + 1);
  Eigen::MatrixXd cond(n - 1, n);
  for (int q = 0; q < n - 1; ++q)
    for (int i = 0; i < n; ++i) cond(q, i) = fine_moment(fine, start + i, q);
  // Moments scale with the level; that only rescales rows, not the nullspace.
  compare_with_table(family, which, one_dim_nullspace(cond));
}

// semiorth2 boundary column: three taps at rows 1..3 orthogonal to the two
// coarse hats whose support meets the window.
void derive_semiorth_column(int j) {
  SplineBasis coarse(2, j), fine(2, j + 1);
  Eigen::MatrixXd cond(2, 3);
  for (int kc = 1; kc <= 2; ++kc)
    for (int i = 0; i < 3; ++i) cond(kc - 1, i) = coarse.cross_mass_fine(kc, fine, 1 + i);
  compare_with_table("semiorth2", 0, one_dim_nullspace(cond));
}

// semiinterp4 boundary column: taps at rows 2..3 vanish at every coarse grid
// point (only x = 1/2^j gives a nontrivial condition).
void derive_semiinterp_column(int j) {
  SplineBasis fine(4, j + 1);
  Eigen::MatrixXd cond(1, 2);
  double x = 1.0 / (1 << j);
  cond(0, 0) = fine.eval(2, x);
  cond(0, 1) = fine.eval(3, x);
  compare_with_table("semiinterp4", 0, one_dim_nullspace(cond));
}

}  // namespace

int main() {
  std::printf("regenerating derived boundary columns (coarse level 4)\n");
  derive_semiorth_column(4);
  derive_moment_column("bior22", 0, 4);
  derive_moment_column("bior24", 0, 4);
  derive_moment_column("bior24", 1, 4);
  derive_moment_column("bior33", 0, 4);
  derive_moment_column("bior33", 1, 4);
  derive_semiinterp_column(4);
  if (g_failures) {
    std::printf("%d derived column(s) disagree with the shipped table\n", g_failures);
    return 1;
  }
  std::printf("all derived columns match the shipped table\n");
  return 0;
}
