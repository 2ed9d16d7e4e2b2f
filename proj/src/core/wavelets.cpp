#include "core/wavelets.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "core/common.hpp"
#include "stencil_table_data.hpp"

namespace fracwave {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Parses an integer, decimal, or rational "a/b" token.
double parse_tap(const std::string& tok) {
  auto slash = tok.find('/');
  try {
    if (slash == std::string::npos) return std::stod(tok);
    double num = std::stod(tok.substr(0, slash));
    double den = std::stod(tok.substr(slash + 1));
    require(den != 0.0, "stencil table: zero denominator in '" + tok + "'");
    return num / den;
  } catch (const std::invalid_argument&) {
    fail("stencil table: bad number '" + tok + "'");
  }
}

// Interior fine-row band: rows of level-(j+1) scaling functions that are
// plain B-spline translates (not boundary-adapted).
void interior_band(int d, int fine_size, int* lo, int* hi) {
  *lo = d - 1;
  *hi = fine_size - (d - 2);
}

}  // namespace

std::map<std::string, StencilFamily> parse_stencil_table(const std::string& text) {
  std::map<std::string, StencilFamily> table;
  StencilFamily* cur = nullptr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto where = [&] { return " (line " + std::to_string(lineno) + ")"; };
    if (word == "family") {
      StencilFamily fam;
      std::string key;
      require(static_cast<bool>(ls >> fam.name), "stencil table: missing family name" + where());
      while (ls >> key) {
        int val;
        require(static_cast<bool>(ls >> val),
                "stencil table: missing value for '" + key + "'" + where());
        if (key == "order")
          fam.order = val;
        else if (key == "minlevel")
          fam.minlevel = val;
        else if (key == "offset")
          fam.offset = val;
        else
          fail("stencil table: unknown attribute '" + key + "'" + where());
      }
      require(fam.order >= 2 && fam.order <= 4, "stencil table: bad order" + where());
      require(!table.count(fam.name), "stencil table: duplicate family" + where());
      cur = &table.emplace(fam.name, std::move(fam)).first->second;
    } else if (word == "interior") {
      require(cur != nullptr, "stencil table: taps before any family" + where());
      std::string tok;
      while (ls >> tok) cur->interior.push_back(parse_tap(tok));
      require(!cur->interior.empty(), "stencil table: empty interior line" + where());
    } else if (word == "left") {
      require(cur != nullptr, "stencil table: taps before any family" + where());
      int row;
      require(static_cast<bool>(ls >> row), "stencil table: missing row" + where());
      std::vector<double> taps;
      std::string tok;
      while (ls >> tok) taps.push_back(parse_tap(tok));
      require(!taps.empty(), "stencil table: empty boundary line" + where());
      cur->left.emplace_back(row, std::move(taps));
    } else {
      fail("stencil table: unknown directive '" + word + "'" + where());
    }
  }
  for (const auto& [name, fam] : table)
    require(!fam.interior.empty(), "stencil table: family '" + name + "' has no interior taps");
  return table;
}

const std::map<std::string, StencilFamily>& stencil_table() {
  static const std::map<std::string, StencilFamily> table =
      parse_stencil_table(detail::kStencilTableText);
  return table;
}

const StencilFamily& stencil_family(const std::string& name) {
  const auto& table = stencil_table();
  auto it = table.find(name);
  if (it == table.end()) fail("unknown wavelet family '" + name + "'");
  return it->second;
}

SpMat refinement_matrix(int order, int coarse_level) {
  const int d = order;
  SplineBasis coarse(d, coarse_level), fine(d, coarse_level + 1);
  const int nc = coarse.size(), nf = fine.size();
  std::vector<Eigen::Triplet<double>> trips;

  // Interior columns: binomial two-scale relation of the order-d B-spline,
  // P(y) = 2^{1-d} sum_m C(d,m) P(2y - m), with the L2 normalization factor.
  const double scale = pow2d(1 - d) * kInvSqrt2;
  for (int k = d - 1; k <= nc - (d - 2); ++k) {
    for (int m = 0; m <= d; ++m) {
      int mf = 2 * k - (d - 1) + m;  // interior fine index with anchor 2a+m
      trips.emplace_back(mf - 1, k - 1, scale * binom(d, m));
    }
  }

  // Boundary columns: the coarse function lies in the fine space exactly, so
  // its coefficients solve the local Gram system over the fine functions
  // whose support meets its own.
  auto solve_boundary = [&](int k, const std::vector<int>& cand) {
    const int n = static_cast<int>(cand.size());
    Eigen::MatrixXd g(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
      rhs(i) = coarse.cross_mass_fine(k, fine, cand[i]);
      for (int j = 0; j < n; ++j) g(i, j) = fine.mass(cand[i], cand[j]);
    }
    Eigen::VectorXd c = Eigen::LLT<Eigen::MatrixXd>(g).solve(rhs);
    for (int i = 0; i < n; ++i)
      if (std::abs(c(i)) > 1e-13) trips.emplace_back(cand[i] - 1, k - 1, c(i));
  };
  for (int k = 1; k <= d - 2; ++k) {
    std::vector<int> cand;
    for (int m = 1; m <= nf && fine.support_lo(m) < coarse.support_hi(k) - 1e-12; ++m)
      cand.push_back(m);
    solve_boundary(k, cand);
  }
  for (int k = nc - (d - 3); k <= nc; ++k) {
    std::vector<int> cand;
    for (int m = nf; m >= 1 && fine.support_hi(m) > coarse.support_lo(k) + 1e-12; --m)
      cand.push_back(m);
    solve_boundary(k, cand);
  }

  SpMat m0(nf, nc);
  m0.setFromTriplets(trips.begin(), trips.end());
  m0.makeCompressed();
  return m0;
}

SpMat stencil_matrix(const StencilFamily& family, int coarse_level) {
  const int d = family.order;
  const int j = coarse_level;
  require(j >= family.minlevel, "wavelet family '" + family.name + "' needs level >= " +
                                    std::to_string(family.minlevel));
  const int nf = basis_size(d, j + 1);
  const int nwav = 1 << j;
  const int nb = static_cast<int>(family.left.size());
  int lo, hi;
  interior_band(d, nf, &lo, &hi);
  require(family.offset >= lo, "wavelet family '" + family.name + "': offset below interior band");
  const int len = static_cast<int>(family.interior.size());
  // Interior windows offset+2k .. offset+2k+len-1 that fit in the band.
  const int kint = std::max(0, (hi - (family.offset + len - 1)) / 2 + 1);
  require(kint + 2 * nb == nwav,
          "wavelet family '" + family.name + "': column count does not close at level " +
              std::to_string(j));

  std::vector<Eigen::Triplet<double>> trips;
  auto add_left = [&](int col, const std::pair<int, std::vector<double>>& bnd) {
    for (size_t i = 0; i < bnd.second.size(); ++i) {
      int row = bnd.first + static_cast<int>(i);
      require(row >= 1 && row <= nf, "wavelet family '" + family.name + "': boundary row out of range");
      trips.emplace_back(row - 1, col, bnd.second[i] * kInvSqrt2);
    }
  };
  auto add_right = [&](int col, const std::pair<int, std::vector<double>>& bnd) {
    for (size_t i = 0; i < bnd.second.size(); ++i) {
      int row = nf + 1 - (bnd.first + static_cast<int>(i));
      require(row >= 1 && row <= nf, "wavelet family '" + family.name + "': boundary row out of range");
      trips.emplace_back(row - 1, col, bnd.second[i] * kInvSqrt2);
    }
  };
  for (int b = 0; b < nb; ++b) add_left(b, family.left[b]);
  for (int k = 0; k < kint; ++k)
    for (int i = 0; i < len; ++i)
      trips.emplace_back(family.offset + 2 * k + i - 1, nb + k, family.interior[i] * kInvSqrt2);
  // Right boundary columns mirror the left ones; the outermost ends up last.
  for (int b = 0; b < nb; ++b) add_right(nwav - 1 - b, family.left[b]);

  SpMat m1(nf, nwav);
  m1.setFromTriplets(trips.begin(), trips.end());
  m1.makeCompressed();
  return m1;
}

WaveletTransform::WaveletTransform(int order, const std::string& family, int coarse_level,
                                   int fine_level)
    : order_(order), j0_(coarse_level), J_(fine_level) {
  require(j0_ >= 0 && j0_ <= J_, "wavelet transform: need 0 <= coarse level <= fine level");
  const StencilFamily& fam = stencil_family(family);
  require(fam.order == order, "wavelet family '" + family + "' is for spline order " +
                                  std::to_string(fam.order));
  levels_.reserve(J_ - j0_);
  detail_offsets_.resize(J_ - j0_ + 1);
  int off = scaling_size();
  for (int j = j0_; j < J_; ++j) {
    detail_offsets_[j - j0_] = off;
    off += 1 << j;
    const StencilFamily* use = &fam;
    if (j < fam.minlevel) {
      require(order == 2, "wavelet family '" + family + "' needs coarse level >= " +
                              std::to_string(fam.minlevel) + " for spline order " +
                              std::to_string(order));
      use = &stencil_family("interp2");
    }
    Level lvl;
    lvl.m0 = refinement_matrix(order, j);
    lvl.m1 = stencil_matrix(*use, j);
    const int nf = basis_size(order, j + 1);
    std::vector<Eigen::Triplet<double>> trips;
    for (int c = 0; c < lvl.m0.outerSize(); ++c)
      for (SpMat::InnerIterator it(lvl.m0, c); it; ++it)
        trips.emplace_back(it.row(), c, it.value());
    for (int c = 0; c < lvl.m1.outerSize(); ++c)
      for (SpMat::InnerIterator it(lvl.m1, c); it; ++it)
        trips.emplace_back(it.row(), lvl.m0.cols() + c, it.value());
    lvl.two_scale = SpMat(nf, nf);
    lvl.two_scale.setFromTriplets(trips.begin(), trips.end());
    lvl.two_scale.makeCompressed();
    lvl.lu = std::make_unique<Eigen::SparseLU<SpMat>>();
    lvl.lu->compute(lvl.two_scale);
    require(lvl.lu->info() == Eigen::Success,
            "wavelet family '" + family + "': two-scale matrix is singular at level " +
                std::to_string(j));
    levels_.push_back(std::move(lvl));
  }
  detail_offsets_[J_ - j0_] = off;
}

int WaveletTransform::size() const { return basis_size(order_, J_); }

int WaveletTransform::scaling_size() const { return basis_size(order_, j0_); }

int WaveletTransform::detail_offset(int j) const {
  require(j >= j0_ && j < J_, "detail_offset: level out of range");
  return detail_offsets_[j - j0_];
}

int WaveletTransform::level_of(int index) const {
  require(index >= 0 && index < size(), "level_of: index out of range");
  if (index < scaling_size()) return j0_;
  for (int j = j0_; j < J_; ++j)
    if (index < detail_offsets_[j - j0_ + 1]) return j;
  fail("level_of: internal layout error");
}

const SpMat& WaveletTransform::refinement(int j) const {
  require(j >= j0_ && j < J_, "refinement: level out of range");
  return levels_[j - j0_].m0;
}

const SpMat& WaveletTransform::stencils(int j) const {
  require(j >= j0_ && j < J_, "stencils: level out of range");
  return levels_[j - j0_].m1;
}

void WaveletTransform::reconstruct(const std::vector<double>& multi,
                                   std::vector<double>& single) const {
  require(static_cast<int>(multi.size()) == size(), "reconstruct: bad input size");
  Eigen::VectorXd cur =
      Eigen::Map<const Eigen::VectorXd>(multi.data(), scaling_size());
  for (int j = j0_; j < J_; ++j) {
    const Level& lvl = levels_[j - j0_];
    Eigen::Map<const Eigen::VectorXd> d(multi.data() + detail_offset(j), 1 << j);
    cur = (lvl.m0 * cur + lvl.m1 * d).eval();
  }
  single.assign(cur.data(), cur.data() + cur.size());
}

void WaveletTransform::decompose(const std::vector<double>& single,
                                 std::vector<double>& multi) const {
  require(static_cast<int>(single.size()) == size(), "decompose: bad input size");
  multi.resize(size());
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(single.data(), single.size());
  for (int j = J_ - 1; j >= j0_; --j) {
    const Level& lvl = levels_[j - j0_];
    Eigen::VectorXd y = lvl.lu->solve(x);
    require(lvl.lu->info() == Eigen::Success, "decompose: two-scale solve failed");
    const int nc = basis_size(order_, j);
    Eigen::Map<Eigen::VectorXd>(multi.data() + detail_offset(j), 1 << j) = y.tail(1 << j);
    x = y.head(nc).eval();
  }
  Eigen::Map<Eigen::VectorXd>(multi.data(), scaling_size()) = x;
}

void WaveletTransform::synthesis_adjoint(const std::vector<double>& single,
                                         std::vector<double>& multi) const {
  require(static_cast<int>(single.size()) == size(), "synthesis_adjoint: bad input size");
  multi.resize(size());
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(single.data(), single.size());
  for (int j = J_ - 1; j >= j0_; --j) {
    const Level& lvl = levels_[j - j0_];
    Eigen::Map<Eigen::VectorXd>(multi.data() + detail_offset(j), 1 << j) =
        lvl.m1.transpose() * y;
    y = (lvl.m0.transpose() * y).eval();
  }
  Eigen::Map<Eigen::VectorXd>(multi.data(), scaling_size()) = y;
}

}  // namespace fracwave
