#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "core/assembly.hpp"
#include "core/common.hpp"
#include "core/linalg.hpp"
#include "core/wavelets.hpp"
#include "doctest.h"

using namespace fracwave;

namespace {

std::vector<double> random_vector(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(gen);
  return v;
}

LinearOp mat_op(std::shared_ptr<Eigen::MatrixXd> m) {
  return [m](const std::vector<double>& x, std::vector<double>& y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
    Eigen::VectorXd r = (*m) * xv;
    y.assign(r.data(), r.data() + r.size());
  };
}

LinearOp lu_op(const Eigen::MatrixXd& m) {
  auto lu = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXd>>(m);
  return [lu](const std::vector<double>& x, std::vector<double>& y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
    Eigen::VectorXd r = lu->solve(xv);
    y.assign(r.data(), r.data() + r.size());
  };
}

LinearOp op_of(const StiffnessOperator& a) {
  return [&a](const std::vector<double>& x, std::vector<double>& y) {
    a.apply(x, y);
  };
}

LinearOp op_of(const PreconditionedOperator& p) {
  return [&p](const std::vector<double>& x, std::vector<double>& y) {
    p.apply(x, y);
  };
}

double inf_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Loads for the two-sided diffusion problem with exact solution x^2 - x on
// homogeneous boundary values; the one-sided variant weights only the left
// memory term, the symmetric variant averages both sides.
double source_left_only(double x, double beta) {
  return (-2.0 * std::pow(x, beta) + beta * std::pow(x, beta - 1.0)) /
         std::tgamma(1.0 + beta);
}

double source_symmetric(double x, double beta) {
  const double y = 1.0 - x;
  return 0.5 *
         (-2.0 * std::pow(x, beta) + beta * std::pow(x, beta - 1.0) -
          2.0 * std::pow(y, beta) + beta * std::pow(y, beta - 1.0)) /
         std::tgamma(1.0 + beta);
}

// Multiscale reconstruction matrix (columns are reconstructed unit vectors).
Eigen::MatrixXd reconstruction_matrix(const WaveletTransform& wt) {
  const int n = wt.size();
  Eigen::MatrixXd m(n, n);
  std::vector<double> e(n, 0.0), col;
  for (int k = 0; k < n; ++k) {
    e[k] = 1.0;
    wt.reconstruct(e, col);
    for (int i = 0; i < n; ++i) m(i, k) = col[i];
    e[k] = 0.0;
  }
  return m;
}

// Diagonal preconditioner recomputed without any replication shortcut: every
// wavelet column gets its own quadratic form.
LevelDiagonal brute_force_sqrt_inv(const WaveletTransform& wt,
                                   const OperatorParams& prm) {
  LevelDiagonal out;
  out.diag.assign(wt.size(), 0.0);
  const int nsc = wt.scaling_size();
  if (nsc > 0) {
    StiffnessOperator a0(wt.order(), wt.coarse_level(), prm,
                         StiffnessOperator::Build::entries_only);
    for (int k = 1; k <= nsc; ++k)
      out.diag[k - 1] = 1.0 / std::sqrt(a0.entry(k, k));
  }
  for (int j = wt.coarse_level(); j < wt.fine_level(); ++j) {
    StiffnessOperator aj(wt.order(), j + 1, prm,
                         StiffnessOperator::Build::entries_only);
    const SpMat& s = wt.stencils(j);
    const int off = wt.detail_offset(j);
    for (int k = 0; k < s.cols(); ++k) {
      std::vector<int> rows;
      std::vector<double> taps;
      for (SpMat::InnerIterator it(s, k); it; ++it) {
        rows.push_back(static_cast<int>(it.row()));
        taps.push_back(it.value());
      }
      double q = 0.0;
      for (size_t a = 0; a < rows.size(); ++a)
        for (size_t c = 0; c < rows.size(); ++c)
          q += taps[a] * taps[c] * aj.entry(rows[a] + 1, rows[c] + 1);
      out.diag[off + k] = 1.0 / std::sqrt(q);
    }
  }
  return out;
}

double median_window_fraction(const Eigen::VectorXd& eigs) {
  std::vector<double> v(eigs.data(), eigs.data() + eigs.size());
  std::sort(v.begin(), v.end());
  const double med = v[v.size() / 2];
  int inside = 0;
  for (double x : v)
    if (x >= 0.5 * med && x <= 2.0 * med) ++inside;
  return static_cast<double>(inside) / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("krylov solvers match a dense direct solve") {
  const int n = 40;
  auto m = std::make_shared<Eigen::MatrixXd>(n, n);
  {
    std::mt19937 gen(7u);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        (*m)(i, j) = 0.5 * dist(gen) + (i == j ? 5.0 : 0.0);
  }
  const std::vector<double> b = random_vector(n, 11u);
  Eigen::Map<const Eigen::VectorXd> bv(b.data(), n);
  Eigen::VectorXd xd = m->partialPivLu().solve(bv);
  std::vector<double> xref(xd.data(), xd.data() + n);

  SolveOptions opt;
  opt.tol = 1e-12;
  auto g = solve_gmres(mat_op(m), b, opt);
  CHECK(g.converged);
  CHECK(g.note.empty());
  CHECK(inf_diff(g.x, xref) < 1e-9);
  CHECK(g.residual_history.size() == static_cast<size_t>(g.iters));
  for (size_t i = 1; i < g.residual_history.size(); ++i)
    CHECK(g.residual_history[i] <= g.residual_history[i - 1] * (1.0 + 1e-12));

  auto bi = solve_bicgstab(mat_op(m), b, opt);
  CHECK(bi.converged);
  CHECK(inf_diff(bi.x, xref) < 1e-8);

  // Symmetric positive definite variant for conjugate gradients.
  auto spd = std::make_shared<Eigen::MatrixXd>(
      0.5 * (*m + m->transpose()) + 10.0 * Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd xs = spd->partialPivLu().solve(bv);
  std::vector<double> xsref(xs.data(), xs.data() + n);
  auto cg = solve_cg(mat_op(spd), b, opt);
  CHECK(cg.converged);
  CHECK(inf_diff(cg.x, xsref) < 1e-9);
}

TEST_CASE("gmres converges immediately on the identity") {
  const int n = 25;
  auto id = std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Identity(n, n));
  const std::vector<double> b = random_vector(n, 3u);
  auto g = solve_gmres(mat_op(id), b, {});
  CHECK(g.converged);
  CHECK(g.iters == doctest::Approx(1.0));
  CHECK(inf_diff(g.x, b) < 1e-14);
}

TEST_CASE("gmres reports stagnation on a cyclic shift but still solves") {
  const int n = 60;
  LinearOp shift = [n](const std::vector<double>& x, std::vector<double>& y) {
    y.resize(n);
    for (int i = 0; i < n; ++i) y[i] = x[(i + 1) % n];
  };
  std::vector<double> b(n, 0.0);
  b[0] = 1.0;
  auto g = solve_gmres(shift, b, {});
  CHECK(g.converged);
  CHECK(g.iters == doctest::Approx(static_cast<double>(n)));
  CHECK(!g.note.empty());
  CHECK(g.note.find("stagnation") != std::string::npos);
  std::vector<double> expect(n, 0.0);
  expect[1] = 1.0;
  CHECK(inf_diff(g.x, expect) < 1e-12);
}

TEST_CASE("bicgstab reports breakdown on a skew rotation") {
  auto m = std::make_shared<Eigen::MatrixXd>(2, 2);
  *m << 0.0, 1.0, -1.0, 0.0;
  const std::vector<double> b = {1.0, 0.0};
  auto bi = solve_bicgstab(mat_op(m), b, {});
  CHECK(!bi.converged);
  CHECK(!bi.note.empty());
  CHECK(bi.note.find("breakdown") != std::string::npos);
  // The same system is fine for gmres.
  auto g = solve_gmres(mat_op(m), b, {});
  CHECK(g.converged);
  CHECK(inf_diff(g.x, {0.0, 1.0}) < 1e-13);
}

TEST_CASE("matvec is affine in the direction weight") {
  const int d = 3, level = 5;
  const double beta = 0.4, kappa = 1.7, p = 0.35;
  StiffnessOperator mix(d, level, {beta, p, kappa});
  StiffnessOperator left(d, level, {beta, 1.0, 1.0});
  StiffnessOperator right(d, level, {beta, 0.0, 1.0});
  const int n = mix.size();
  const std::vector<double> x = random_vector(n, 21u);
  std::vector<double> ym(n), yl(n), yr(n);
  mix.apply(x, ym);
  left.apply(x, yl);
  right.apply(x, yr);
  double scale = 0.0, diff = 0.0;
  for (int i = 0; i < n; ++i) {
    const double combo = kappa * (p * yl[i] + (1.0 - p) * yr[i]);
    diff = std::max(diff, std::abs(ym[i] - combo));
    scale = std::max(scale, std::abs(ym[i]));
  }
  CHECK(diff <= 1e-12 * scale);
}

TEST_CASE("theoretical level diagonal follows block levels") {
  WaveletTransform wt(2, "interp2", 2, 5);
  const double alpha = 0.75;
  LevelDiagonal k = level_diag_theoretical(wt, alpha);
  REQUIRE(static_cast<int>(k.diag.size()) == wt.size());
  for (int i = 0; i < wt.scaling_size(); ++i)
    CHECK(k.diag[i] == doctest::Approx(std::exp2(-2.0 * alpha)));
  for (int j = 2; j < 5; ++j) {
    const int off = wt.detail_offset(j);
    for (int i = 0; i < wt.detail_size(j); ++i)
      CHECK(k.diag[off + i] == doctest::Approx(std::exp2(-j * alpha)));
  }
}

TEST_CASE("diagonal preconditioner replication matches full extraction") {
  // Replication shortcut versus per-column quadratic forms.
  const OperatorParams prm{0.4, 0.7, 1.3};
  for (const char* family : {"semiorth2", "bior22"}) {
    WaveletTransform wt(2, family, 0, 6);
    LevelDiagonal fast = level_diag_sqrt_inv(wt, prm);
    LevelDiagonal slow = brute_force_sqrt_inv(wt, prm);
    double rel = 0.0;
    for (int i = 0; i < wt.size(); ++i)
      rel = std::max(rel,
                     std::abs(fast.diag[i] - slow.diag[i]) / slow.diag[i]);
    CAPTURE(family);
    CHECK(rel <= 1e-13);
  }

  // Versus the diagonal of the dense wavelet-basis matrix M^t A M.
  const OperatorParams prm2{0.5, 1.0, 1.0};
  WaveletTransform wt(2, "interp2", 0, 8);
  StiffnessOperator a(2, 8, prm2);
  const Eigen::MatrixXd m = reconstruction_matrix(wt);
  const Eigen::MatrixXd ahat = m.transpose() * a.dense() * m;
  LevelDiagonal fast = level_diag_sqrt_inv(wt, prm2);
  // The dense reference loses accuracy on coarse blocks: the quadratic form
  // cancels fine-level-scale entries down to an O(1) value, so its rounding
  // error grows toward coarse levels. Hold fine blocks to 1e-12 and give the
  // coarse blocks the corresponding cancellation headroom.
  double rel_fine = 0.0, rel_all = 0.0;
  for (int j = 0; j < 8; ++j) {
    const int off = wt.detail_offset(j);
    for (int i = 0; i < wt.detail_size(j); ++i) {
      const double ref = 1.0 / std::sqrt(ahat(off + i, off + i));
      const double rel = std::abs(fast.diag[off + i] - ref) / ref;
      rel_all = std::max(rel_all, rel);
      if (j >= 3) rel_fine = std::max(rel_fine, rel);
    }
  }
  CHECK(rel_fine <= 1e-12);
  CHECK(rel_all <= 5e-12);
}

TEST_CASE("preconditioned solve recovers the direct solution") {
  const int level = 6;
  const OperatorParams prm{0.5, 0.5, 1.0};
  StiffnessOperator a(2, level, prm);
  const SplineBasis& basis = a.basis();
  const int n = a.size();
  auto f = [](double x) { return std::sin(3.0 * x) + 0.25 * x; };
  const std::vector<double> rhs = load_vector(basis, f);

  Eigen::MatrixXd ad = a.dense();
  Eigen::Map<const Eigen::VectorXd> fv(rhs.data(), n);
  Eigen::VectorXd cd = ad.partialPivLu().solve(fv);

  WaveletTransform wt(2, "interp2", 0, level);
  PreconditionedOperator pre(a, wt, level_diag_sqrt_inv(wt, prm));
  auto res = solve_gmres(op_of(pre), pre.rhs(rhs), {});
  CHECK(res.converged);
  const std::vector<double> c = pre.recover(res.x);
  double diff = 0.0;
  for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(c[i] - cd(i)));
  CHECK(diff <= 1e-7 * cd.cwiseAbs().maxCoeff());
}

TEST_CASE("spectral estimates match dense eigenvalues") {
  const int level = 6;

  // Symmetric case: extreme eigenvalues.
  {
    const OperatorParams prm{0.3, 0.5, 1.0};
    StiffnessOperator a(2, level, prm);
    const int n = a.size();
    Eigen::MatrixXd ad = a.dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (ad + ad.transpose()));
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    auto est = estimate_spectrum_spd(op_of(a), lu_op(ad), n);
    CHECK(est.converged);
    CHECK(est.lmax == doctest::Approx(lmax).epsilon(0.01));
    CHECK(est.lmin == doctest::Approx(lmin).epsilon(0.01));
    CHECK(est.cond == doctest::Approx(lmax / lmin).epsilon(0.01));
  }

  // Nonsymmetric case: extreme singular values. The transposed operator is
  // the one with the complementary direction weight.
  {
    StiffnessOperator a(2, level, {0.5, 1.0, 1.0});
    StiffnessOperator at(2, level, {0.5, 0.0, 1.0});
    const int n = a.size();
    Eigen::MatrixXd ad = a.dense();
    Eigen::MatrixXd atd = at.dense();
    CHECK((atd - ad.transpose()).cwiseAbs().maxCoeff() <=
          1e-12 * ad.cwiseAbs().maxCoeff());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ad);
    const double smax = svd.singularValues().maxCoeff();
    const double smin = svd.singularValues().minCoeff();
    auto est = estimate_spectrum_sv(op_of(a), op_of(at), lu_op(ad),
                                    lu_op(Eigen::MatrixXd(ad.transpose())), n);
    CHECK(est.converged);
    CHECK(est.lmax == doctest::Approx(smax).epsilon(0.01));
    CHECK(est.lmin == doctest::Approx(smin).epsilon(0.01));
  }
}

TEST_CASE("unpreconditioned conditioning grows at rate 2 - beta") {
  const double beta = 0.5;
  double cond[2];
  for (int idx = 0; idx < 2; ++idx) {
    const int level = 7 + idx;
    StiffnessOperator a(2, level, {beta, 0.5, 1.0});
    auto est = estimate_spectrum_spd(op_of(a), lu_op(a.dense()), a.size());
    CHECK(est.converged);
    cond[idx] = est.cond;
  }
  const double rate = std::log2(cond[1] / cond[0]);
  CHECK(rate == doctest::Approx(2.0 - beta).epsilon(0.04));
}

TEST_CASE("preconditioning flattens the condition number") {
  // One-sided operator: condition number from singular values.
  const OperatorParams prm{0.5, 1.0, 1.0};
  const OperatorParams prm_t{0.5, 0.0, 1.0};
  double cond[2];
  for (int idx = 0; idx < 2; ++idx) {
    const int level = 7 + idx;
    StiffnessOperator a(2, level, prm);
    StiffnessOperator at(2, level, prm_t);
    WaveletTransform wt(2, "interp2", 0, level);
    LevelDiagonal k = level_diag_sqrt_inv(wt, prm);
    PreconditionedOperator pre(a, wt, k);
    PreconditionedOperator pre_t(at, wt, k);
    Eigen::MatrixXd pd = dense_from_op(op_of(pre), pre.size());
    auto est = estimate_spectrum_sv(op_of(pre), op_of(pre_t), lu_op(pd),
                                    lu_op(Eigen::MatrixXd(pd.transpose())),
                                    pre.size());
    cond[idx] = est.cond;
  }
  CHECK(cond[1] == doctest::Approx(3.0970).epsilon(0.15));
  CHECK(std::abs(cond[1] / cond[0] - 1.0) < 0.10);

  // Weaker memory: even flatter.
  {
    const int level = 8;
    const OperatorParams prm5{0.2, 1.0, 1.0};
    StiffnessOperator a(2, level, prm5);
    StiffnessOperator at(2, level, {0.2, 0.0, 1.0});
    WaveletTransform wt(2, "interp2", 0, level);
    LevelDiagonal k = level_diag_sqrt_inv(wt, prm5);
    PreconditionedOperator pre(a, wt, k);
    PreconditionedOperator pre_t(at, wt, k);
    Eigen::MatrixXd pd = dense_from_op(op_of(pre), pre.size());
    auto est = estimate_spectrum_sv(op_of(pre), op_of(pre_t), lu_op(pd),
                                    lu_op(Eigen::MatrixXd(pd.transpose())),
                                    pre.size());
    CHECK(est.cond <= 2.0);
  }
}

TEST_CASE("preconditioning clusters the spectrum") {
  const int level = 8;
  const OperatorParams prm{0.5, 0.5, 1.0};
  StiffnessOperator a(2, level, prm);
  Eigen::MatrixXd ad = a.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_a(
      0.5 * (ad + ad.transpose()));

  WaveletTransform wt(2, "interp2", 0, level);
  PreconditionedOperator pre(a, wt, level_diag_sqrt_inv(wt, prm));
  Eigen::MatrixXd pd = dense_from_op(op_of(pre), pre.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_p(
      0.5 * (pd + pd.transpose()));

  const double frac_plain = median_window_fraction(eig_a.eigenvalues());
  const double frac_pre = median_window_fraction(eig_p.eigenvalues());
  CAPTURE(frac_plain);
  CAPTURE(frac_pre);
  CHECK(frac_pre > frac_plain);
}

TEST_CASE("iteration counts with and without the level preconditioner") {
  const int level = 8;
  const double beta = 0.2;
  StiffnessOperator a1(2, level, {beta, 1.0, 1.0});
  StiffnessOperator ah(2, level, {beta, 0.5, 1.0});
  const int n = a1.size();
  REQUIRE(n == 255);
  const std::vector<double> f1 = load_vector_singular(
      a1.basis(), [&](double x) { return source_left_only(x, beta); });
  const std::vector<double> fh = load_vector_singular(
      ah.basis(), [&](double x) { return source_symmetric(x, beta); });

  // Without preconditioning the one-sided operator exhausts the full space.
  auto g1 = solve_gmres(op_of(a1), f1, {});
  CHECK(g1.iters == doctest::Approx(static_cast<double>(n)));
  auto gh = solve_gmres(op_of(ah), fh, {});
  CHECK(gh.converged);
  CHECK(gh.iters >= 94);
  CHECK(gh.iters <= 142);

  WaveletTransform wt(2, "interp2", 0, level);
  PreconditionedOperator p1(a1, wt, level_diag_sqrt_inv(wt, {beta, 1.0, 1.0}));
  PreconditionedOperator ph(ah, wt, level_diag_sqrt_inv(wt, {beta, 0.5, 1.0}));
  auto pg1 = solve_gmres(op_of(p1), p1.rhs(f1), {});
  CHECK(pg1.converged);
  CHECK(pg1.iters >= 11);
  CHECK(pg1.iters <= 15);
  auto pgh = solve_gmres(op_of(ph), ph.rhs(fh), {});
  CHECK(pgh.converged);
  CHECK(pgh.iters >= 7);
  CHECK(pgh.iters <= 11);
  auto pbh = solve_bicgstab(op_of(ph), ph.rhs(fh), {});
  CHECK(pbh.converged);
  CHECK(pbh.iters >= 4.5);
  CHECK(pbh.iters <= 8.5);

  // Preconditioned and direct answers agree.
  Eigen::MatrixXd ad = ah.dense();
  Eigen::Map<const Eigen::VectorXd> fv(fh.data(), n);
  Eigen::VectorXd cd = ad.partialPivLu().solve(fv);
  const std::vector<double> c = ph.recover(pgh.x);
  double diff = 0.0;
  for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(c[i] - cd(i)));
  CHECK(diff <= 1e-6 * cd.cwiseAbs().maxCoeff());
}
