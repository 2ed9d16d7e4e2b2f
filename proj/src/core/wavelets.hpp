#pragma once

// Dyadic spline wavelet constructions: two-scale refinement matrices,
// stencil-defined wavelet bases, and the multilevel transform between
// single-scale and multiscale coefficient vectors.

#include <Eigen/Sparse>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core/splines.hpp"

namespace fracwave {

using SpMat = Eigen::SparseMatrix<double>;

// One wavelet construction on the dyadic spline spaces of a given order:
// taps expanding each coarse-level wavelet in the next finer scaling basis.
struct StencilFamily {
  std::string name;
  int order = 0;      // spline order d of the underlying spaces
  int minlevel = 0;   // lowest coarse level the construction is valid at
  int offset = 0;     // first fine row of interior wavelet k = 0
  std::vector<double> interior;  // interior taps (fine rows offset+2k+i)
  // Left-edge boundary columns, outermost first: (first fine row, taps).
  std::vector<std::pair<int, std::vector<double>>> left;
};

// Parses the stencil table format (see data/wavelet_stencils.txt for the
// grammar). Throws Error on malformed input.
std::map<std::string, StencilFamily> parse_stencil_table(const std::string& text);

// The built-in table, parsed once.
const std::map<std::string, StencilFamily>& stencil_table();

// Convenience lookup in the built-in table; throws on unknown name.
const StencilFamily& stencil_family(const std::string& name);

// Two-scale refinement matrix: expands every level-j scaling function in the
// level-(j+1) scaling basis. Shape basis_size(order, j+1) x basis_size(order, j).
// Interior columns carry the binomial two-scale coefficients; boundary columns
// are obtained exactly from a small local Gram system (the coarse space is
// nested in the fine one).
SpMat refinement_matrix(int order, int coarse_level);

// Wavelet stencil matrix for one family at coarse level j: expands every
// level-j wavelet in the level-(j+1) scaling basis. Shape
// basis_size(order, j+1) x 2^j. Columns run left to right: left boundary
// columns (outermost first), interior columns, mirrored right boundary
// columns. Throws if the level is below the family's minlevel or the column
// count does not close.
SpMat stencil_matrix(const StencilFamily& family, int coarse_level);

// Multilevel transform between the single-scale basis at level J and the
// multiscale basis {scaling level j0} + {wavelets at levels j0..J-1}.
// Multiscale vector layout: [ c_{j0} | d_{j0} | d_{j0+1} | ... | d_{J-1} ].
// Below the family's minlevel the interpolatory construction of the same
// order is substituted (order 2 only; other orders require j0 >= minlevel).
class WaveletTransform {
 public:
  WaveletTransform(int order, const std::string& family, int coarse_level,
                   int fine_level);

  int order() const { return order_; }
  int coarse_level() const { return j0_; }
  int fine_level() const { return J_; }
  int size() const;           // total coefficients == basis_size(order, J)
  int scaling_size() const;   // basis_size(order, j0)
  int detail_offset(int j) const;  // start of the d_j block
  int detail_size(int j) const { return 1 << j; }
  // Level associated with a multiscale index (norm-equivalence convention:
  // scaling block -> j0, detail block d_j -> j).
  int level_of(int index) const;

  const SpMat& refinement(int j) const;  // level j -> j+1 scaling expansion
  const SpMat& stencils(int j) const;    // level j wavelets in level j+1 basis

  // Multiscale coefficients -> single-scale coefficients (synthesis T).
  void reconstruct(const std::vector<double>& multi,
                   std::vector<double>& single) const;
  // Single-scale -> multiscale, the exact inverse of reconstruct (solves the
  // square two-scale system [refinement | stencils] per level).
  void decompose(const std::vector<double>& single,
                 std::vector<double>& multi) const;
  // Adjoint of reconstruct: maps a single-scale vector to the multiscale
  // vector T^T y (used to form wavelet-basis Galerkin operators).
  void synthesis_adjoint(const std::vector<double>& single,
                         std::vector<double>& multi) const;

 private:
  struct Level {
    SpMat m0, m1;
    SpMat two_scale;  // [m0 | m1], square
    std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
  };
  int order_, j0_, J_;
  std::vector<Level> levels_;         // index l corresponds to j = j0 + l
  std::vector<int> detail_offsets_;   // per level, plus total at the end
};

}  // namespace fracwave
