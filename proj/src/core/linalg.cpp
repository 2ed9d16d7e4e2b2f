#include "core/linalg.hpp"

#include <cmath>
#include <random>

#include "core/common.hpp"

namespace fracwave {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Fixed-seed start vector so every spectral estimate is reproducible.
std::vector<double> seed_vector(int n) {
  std::minstd_rand rng(20240817u);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  const double s = norm(v);
  require(s > 0.0, "spectral estimate: empty start vector");
  for (auto& x : v) x /= s;
  return v;
}

// Largest Rayleigh quotient of a symmetric operator by power iteration.
double power_largest(const LinearOp& op, int n, double rel_tol, int maxit,
                     bool& converged) {
  std::vector<double> v = seed_vector(n), w(n);
  double lam = 0.0;
  converged = false;
  for (int it = 1; it <= maxit; ++it) {
    op(v, w);
    const double lam_new = dot(v, w);
    const double nw = norm(w);
    if (nw == 0.0) {
      converged = true;
      return 0.0;
    }
    for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    if (it > 1 && std::abs(lam_new - lam) <= rel_tol * std::abs(lam_new)) {
      converged = true;
      return lam_new;
    }
    lam = lam_new;
  }
  return lam;
}

}  // namespace

SolveResult solve_cg(const LinearOp& op, const std::vector<double>& b,
                     SolveOptions opt) {
  const int n = static_cast<int>(b.size());
  SolveResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  const int maxit = opt.maxit > 0 ? opt.maxit : 4 * n;
  std::vector<double> r = b, p = b, ap(n);
  double rs = dot(r, r);
  for (int it = 1; it <= maxit; ++it) {
    op(p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) {
      out.note = "operator not positive definite (p^T A p <= 0)";
      break;
    }
    const double alpha = rs / pap;
    axpy(out.x, alpha, p);
    axpy(r, -alpha, ap);
    const double rs_new = dot(r, r);
    out.iters = it;
    const double res = std::sqrt(rs_new) / bnorm;
    out.residual_history.push_back(res);
    if (res <= opt.tol) {
      out.converged = true;
      break;
    }
    const double beta = rs_new / rs;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_new;
  }
  return out;
}

SolveResult solve_gmres(const LinearOp& op, const std::vector<double>& b,
                        SolveOptions opt) {
  const int n = static_cast<int>(b.size());
  SolveResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  const int maxit = opt.maxit > 0 ? opt.maxit : n;
  std::vector<std::vector<double>> basis;  // orthonormal Krylov vectors
  std::vector<std::vector<double>> hcols;  // rotated Hessenberg columns
  std::vector<double> cs, sn, g;
  {
    std::vector<double> v0 = b;
    for (auto& x : v0) x /= bnorm;
    basis.push_back(std::move(v0));
  }
  g.push_back(bnorm);
  double best = 1.0;
  int stall = 0, k = 0;
  for (int j = 0; j < maxit; ++j) {
    std::vector<double> w(n);
    op(basis[j], w);
    std::vector<double> h(j + 2, 0.0);
    for (int i = 0; i <= j; ++i) {
      h[i] = dot(w, basis[i]);
      axpy(w, -h[i], basis[i]);
    }
    const double hnext = norm(w);
    h[j + 1] = hnext;
    for (int i = 0; i < j; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double denom = std::hypot(h[j], h[j + 1]);
    const double c = denom > 0.0 ? h[j] / denom : 1.0;
    const double s = denom > 0.0 ? h[j + 1] / denom : 0.0;
    cs.push_back(c);
    sn.push_back(s);
    h[j] = denom;
    h[j + 1] = 0.0;
    g.push_back(-s * g[j]);
    g[j] = c * g[j];
    hcols.push_back(std::move(h));
    k = j + 1;
    const double res = std::abs(g[j + 1]) / bnorm;
    out.residual_history.push_back(res);
    if (res <= opt.tol) {
      out.converged = true;
      break;
    }
    if (res < best * (1.0 - 1e-12)) {
      best = res;
      stall = 0;
    } else if (++stall >= 50 && out.note.empty()) {
      out.note = "stagnation: relative residual not decreasing over 50 "
                 "iterations (first flagged at iteration " +
                 std::to_string(j + 1) + ")";
    }
    if (hnext == 0.0) break;  // Krylov space closed; best solution below
    std::vector<double> vnext = w;
    for (auto& x : vnext) x /= hnext;
    basis.push_back(std::move(vnext));
  }
  out.iters = k;
  std::vector<double> y(k, 0.0);
  for (int i = k - 1; i >= 0; --i) {
    double v = g[i];
    for (int m = i + 1; m < k; ++m) v -= hcols[m][i] * y[m];
    y[i] = hcols[i][i] != 0.0 ? v / hcols[i][i] : 0.0;
  }
  for (int m = 0; m < k; ++m) axpy(out.x, y[m], basis[m]);
  return out;
}

SolveResult solve_bicgstab(const LinearOp& op, const std::vector<double>& b,
                           SolveOptions opt) {
  const int n = static_cast<int>(b.size());
  SolveResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  const int maxit = opt.maxit > 0 ? opt.maxit : 4 * n;
  std::vector<double> r = b, rhat = b, p(n, 0.0), v(n, 0.0), s(n), t(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= maxit; ++it) {
    const double rho_new = dot(rhat, r);
    if (std::abs(rho_new) <= 1e-14 * norm(rhat) * norm(r)) {
      out.note = "breakdown: rho vanished at iteration " + std::to_string(it);
      break;
    }
    if (it == 1) {
      p = r;
    } else {
      const double beta = (rho_new / rho) * (alpha / omega);
      for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    op(p, v);
    const double rv = dot(rhat, v);
    if (std::abs(rv) <= 1e-14 * norm(rhat) * norm(v)) {
      out.note = "breakdown: direction lost at iteration " + std::to_string(it);
      break;
    }
    alpha = rho_new / rv;
    for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    const double res_half = norm(s) / bnorm;
    out.residual_history.push_back(res_half);
    if (res_half <= opt.tol) {
      axpy(out.x, alpha, p);
      out.iters = it - 0.5;
      out.converged = true;
      break;
    }
    op(s, t);
    const double tt = dot(t, t);
    if (tt == 0.0) {
      out.note = "breakdown: stabilization step vanished at iteration " +
                 std::to_string(it);
      axpy(out.x, alpha, p);
      out.iters = it - 0.5;
      break;
    }
    omega = dot(t, s) / tt;
    for (int i = 0; i < n; ++i) out.x[i] += alpha * p[i] + omega * s[i];
    for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    out.iters = it;
    const double res = norm(r) / bnorm;
    out.residual_history.push_back(res);
    if (res <= opt.tol) {
      out.converged = true;
      break;
    }
    rho = rho_new;
  }
  return out;
}

LevelDiagonal level_diag_theoretical(const WaveletTransform& wt, double alpha) {
  LevelDiagonal out;
  out.diag.resize(wt.size());
  for (int i = 0; i < wt.size(); ++i)
    out.diag[i] = std::exp2(-static_cast<double>(wt.level_of(i)) * alpha);
  return out;
}

LevelDiagonal level_diag_sqrt_inv(const WaveletTransform& wt,
                                  const OperatorParams& prm) {
  const int d = wt.order();
  const int j0 = wt.coarse_level(), fine = wt.fine_level();
  const int nb = num_boundary_protos(d);
  LevelDiagonal out;
  out.diag.assign(wt.size(), 0.0);
  auto push = [&](int idx, double q) {
    require(q > 0.0, "preconditioner: nonpositive operator diagonal");
    out.diag[idx] = 1.0 / std::sqrt(q);
  };

  // Scaling block: the level-j0 operator diagonal. Interior entries coincide
  // by shift invariance, so one interior evaluation is replicated.
  const int nsc = wt.scaling_size();
  if (nsc > 0) {
    StiffnessOperator a0(d, j0, prm, StiffnessOperator::Build::entries_only);
    double interior = 0.0;
    bool have_interior = false;
    for (int k = 1; k <= nsc; ++k) {
      const bool boundary = k <= nb || k > nsc - nb;
      if (boundary || !have_interior) {
        const double q = a0.entry(k, k);
        if (!boundary) {
          interior = q;
          have_interior = true;
        }
        push(k - 1, q);
      } else {
        push(k - 1, interior);
      }
    }
  }

  // Wavelet blocks: a(psi_{j,k}, psi_{j,k}) is the quadratic form of the
  // stencil column with the level-(j+1) operator. Columns whose taps are a
  // pure 2-shift of the previous column and whose rows stay clear of the
  // boundary-adapted indices reuse the previous value.
  for (int j = j0; j < fine; ++j) {
    StiffnessOperator aj(d, j + 1, prm, StiffnessOperator::Build::entries_only);
    const int nf = basis_size(d, j + 1);
    const SpMat& stencil = wt.stencils(j);
    const int off = wt.detail_offset(j);
    std::vector<int> prev_rows;
    std::vector<double> prev_taps;
    double prev_q = 0.0;
    bool prev_interior = false;
    for (int k = 0; k < stencil.cols(); ++k) {
      std::vector<int> rows;
      std::vector<double> taps;
      for (SpMat::InnerIterator it(stencil, k); it; ++it) {
        rows.push_back(static_cast<int>(it.row()));
        taps.push_back(it.value());
      }
      require(!rows.empty(), "preconditioner: empty wavelet column");
      const bool interior =
          rows.front() >= nb && rows.back() <= nf - nb - 1;
      bool replicate = interior && prev_interior && taps == prev_taps &&
                       rows.size() == prev_rows.size();
      if (replicate)
        for (size_t a = 0; a < rows.size(); ++a)
          if (rows[a] != prev_rows[a] + 2) {
            replicate = false;
            break;
          }
      double q;
      if (replicate) {
        q = prev_q;
      } else {
        q = 0.0;
        for (size_t a = 0; a < rows.size(); ++a)
          for (size_t c = 0; c < rows.size(); ++c)
            q += taps[a] * taps[c] * aj.entry(rows[a] + 1, rows[c] + 1);
      }
      push(off + k, q);
      prev_rows = std::move(rows);
      prev_taps = std::move(taps);
      prev_q = q;
      prev_interior = interior;
    }
  }
  return out;
}

PreconditionedOperator::PreconditionedOperator(const StiffnessOperator& a,
                                               const WaveletTransform& wt,
                                               LevelDiagonal k)
    : a_(a), wt_(wt), k_(std::move(k)) {
  require(wt_.order() == a_.order() && wt_.fine_level() == a_.level(),
          "preconditioned operator: basis mismatch");
  require(static_cast<int>(k_.diag.size()) == wt_.size(),
          "preconditioned operator: diagonal size mismatch");
}

void PreconditionedOperator::apply(const std::vector<double>& x,
                                   std::vector<double>& y) const {
  const int n = size();
  require(static_cast<int>(x.size()) == n, "preconditioned apply: bad size");
  std::vector<double> kx(n), single, asingle;
  for (int i = 0; i < n; ++i) kx[i] = k_.diag[i] * x[i];
  wt_.reconstruct(kx, single);
  a_.apply(single, asingle);
  wt_.synthesis_adjoint(asingle, y);
  for (int i = 0; i < n; ++i) y[i] *= k_.diag[i];
}

std::vector<double> PreconditionedOperator::rhs(
    const std::vector<double>& f) const {
  std::vector<double> out;
  wt_.synthesis_adjoint(f, out);
  for (int i = 0; i < size(); ++i) out[i] *= k_.diag[i];
  return out;
}

std::vector<double> PreconditionedOperator::recover(
    const std::vector<double>& y) const {
  const int n = size();
  std::vector<double> ky(n), out;
  for (int i = 0; i < n; ++i) ky[i] = k_.diag[i] * y[i];
  wt_.reconstruct(ky, out);
  return out;
}

SpectralEstimate estimate_spectrum_spd(const LinearOp& op, const LinearOp& solve,
                                       int n, double rel_tol, int maxit) {
  SpectralEstimate est;
  bool ok_max = false, ok_min = false;
  est.lmax = power_largest(op, n, rel_tol, maxit, ok_max);
  const double mu = power_largest(solve, n, rel_tol, maxit, ok_min);
  require(mu > 0.0, "spectral estimate: inverse iteration failed");
  est.lmin = 1.0 / mu;
  est.cond = est.lmax / est.lmin;
  est.converged = ok_max && ok_min;
  return est;
}

SpectralEstimate estimate_spectrum_sv(const LinearOp& op, const LinearOp& op_t,
                                      const LinearOp& solve,
                                      const LinearOp& solve_t, int n,
                                      double rel_tol, int maxit) {
  LinearOp gram = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::vector<double> mid;
    op(x, mid);
    op_t(mid, y);
  };
  LinearOp gram_inv = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::vector<double> mid;
    solve_t(x, mid);
    solve(mid, y);
  };
  SpectralEstimate est;
  bool ok_max = false, ok_min = false;
  const double lam = power_largest(gram, n, rel_tol, maxit, ok_max);
  const double mu = power_largest(gram_inv, n, rel_tol, maxit, ok_min);
  require(lam > 0.0 && mu > 0.0, "spectral estimate: iteration failed");
  est.lmax = std::sqrt(lam);
  est.lmin = 1.0 / std::sqrt(mu);
  est.cond = est.lmax / est.lmin;
  est.converged = ok_max && ok_min;
  return est;
}

Eigen::MatrixXd dense_from_op(const LinearOp& op, int n) {
  Eigen::MatrixXd a(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (int k = 0; k < n; ++k) {
    e[k] = 1.0;
    op(e, col);
    for (int i = 0; i < n; ++i) a(i, k) = col[i];
    e[k] = 0.0;
  }
  return a;
}

}  // namespace fracwave
