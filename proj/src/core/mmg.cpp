#include "core/mmg.hpp"

#include <cmath>
#include <random>

#include "core/common.hpp"
#include "core/linalg.hpp"
#include "core/quadrature.hpp"

namespace fracwave {

namespace {

// Diagonal of the mass matrix: exact Gauss integration of phi_k^2 cell by
// cell (the integrand is a polynomial of degree 2(order-1) per cell).
std::vector<double> mass_diagonal(const SplineBasis& basis) {
  const int n = basis.size();
  const long cells = 1L << basis.level();
  std::vector<double> diag(n, 0.0);
  for (int k = 1; k <= n; ++k) {
    const long c0 = std::lround(basis.support_lo(k) * cells);
    const long c1 = std::lround(basis.support_hi(k) * cells);
    double acc = 0.0;
    for (long c = c0; c < c1; ++c) {
      QuadRule rule = gauss_legendre(basis.order() + 1,
                                     static_cast<double>(c) / cells,
                                     static_cast<double>(c + 1) / cells);
      for (size_t qi = 0; qi < rule.x.size(); ++qi) {
        const double v = basis.eval(k, rule.x[qi]);
        acc += rule.w[qi] * v * v;
      }
    }
    diag[k - 1] = acc;
  }
  return diag;
}

}  // namespace

MmgHierarchy::MmgHierarchy(int order, int fine_level, int coarse_level,
                           OperatorParams prm, double q, double theta)
    : fine_(fine_level), coarse_(coarse_level), q_(q), theta_(theta) {
  require(fine_ > coarse_, "mmg: fine level must exceed the coarse level");
  levels_.reserve(fine_ - coarse_ + 1);
  for (int j = coarse_; j <= fine_; ++j) {
    Level lv;
    lv.a = std::make_unique<StiffnessOperator>(order, j, prm);
    const SplineBasis& bs = lv.a->basis();
    std::vector<double> mdiag = q_ != 0.0 ? mass_diagonal(bs)
                                          : std::vector<double>(bs.size(), 0.0);
    lv.bdiag.resize(bs.size());
    for (int k = 1; k <= bs.size(); ++k) {
      lv.bdiag[k - 1] = q_ * mdiag[k - 1] + theta_ * lv.a->entry(k, k);
      require(lv.bdiag[k - 1] > 0.0, "mmg: nonpositive smoother diagonal");
    }
    if (j > coarse_) lv.refine = refinement_matrix(order, j - 1);
    levels_.push_back(std::move(lv));
  }
  // Dense factorization of the coarsest system.
  const SplineBasis& cb = levels_.front().a->basis();
  Eigen::MatrixXd bc = theta_ * levels_.front().a->dense();
  if (q_ != 0.0) bc += q_ * mass_dense(cb);
  coarse_lu_.compute(bc);
}

int MmgHierarchy::size() const { return levels_.back().a->size(); }

const StiffnessOperator& MmgHierarchy::stiffness(int j) const {
  return *at(j).a;
}

const SplineBasis& MmgHierarchy::basis(int j) const { return at(j).a->basis(); }

void MmgHierarchy::apply_b(int j, const std::vector<double>& x,
                           std::vector<double>& y) const {
  const Level& lv = at(j);
  lv.a->apply(x, y);
  if (theta_ != 1.0)
    for (double& v : y) v *= theta_;
  if (q_ != 0.0) {
    std::vector<double> m;
    mass_apply(lv.a->basis(), x, m);
    for (size_t i = 0; i < y.size(); ++i) y[i] += q_ * m[i];
  }
}

double MmgHierarchy::lmax() const {
  if (lmax_ > 0.0) return lmax_;
  const int n = size();
  std::minstd_rand rng(20240817u);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n), w(n);
  for (auto& x : v) x = u(rng);
  double nv = 0.0;
  for (double x : v) nv += x * x;
  nv = std::sqrt(nv);
  for (auto& x : v) x /= nv;
  double lam = 0.0;
  const std::vector<double>& diag = levels_.back().bdiag;
  for (int it = 0; it < 2000; ++it) {
    apply_b(fine_, v, w);
    for (int i = 0; i < n; ++i) w[i] /= diag[i];
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) norm2 += w[i] * w[i];
    const double lam_new = std::sqrt(norm2);  // growth of a unit 2-norm vector
    for (int i = 0; i < n; ++i) v[i] = w[i] / lam_new;
    if (it > 0 && std::abs(lam_new - lam) <= 1e-8 * lam_new) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  require(lam > 0.0, "mmg: spectral radius estimate failed");
  lmax_ = lam;
  return lmax_;
}

void MmgHierarchy::smooth(int j, std::vector<double>& x,
                          const std::vector<double>& b, double omega,
                          std::vector<double>& scratch) const {
  apply_b(j, x, scratch);
  const std::vector<double>& diag = at(j).bdiag;
  for (size_t i = 0; i < x.size(); ++i)
    x[i] += omega * (b[i] - scratch[i]) / diag[i];
}

void MmgHierarchy::cycle_level(int j, std::vector<double>& x,
                               const std::vector<double>& b,
                               double omega) const {
  if (j == coarse_) {
    Eigen::Map<const Eigen::VectorXd> bv(b.data(), b.size());
    Eigen::VectorXd s = coarse_lu_.solve(bv);
    x.assign(s.data(), s.data() + s.size());
    return;
  }
  const Level& lv = at(j);
  const int n = static_cast<int>(x.size());
  std::vector<double> scratch(n);
  smooth(j, x, b, omega, scratch);
  apply_b(j, x, scratch);
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) r(i) = b[i] - scratch[i];
  Eigen::VectorXd rc = lv.refine.transpose() * r;
  std::vector<double> bc(rc.data(), rc.data() + rc.size());
  std::vector<double> e(bc.size(), 0.0);
  cycle_level(j - 1, e, bc, omega);
  Eigen::Map<const Eigen::VectorXd> ev(e.data(), e.size());
  Eigen::VectorXd up = lv.refine * ev;
  for (int i = 0; i < n; ++i) x[i] += up(i);
  smooth(j, x, b, omega, scratch);
}

double MmgHierarchy::vcycle(std::vector<double>& x,
                            const std::vector<double>& b, double omega) const {
  require(x.size() == b.size() &&
              static_cast<int>(x.size()) == size(),
          "mmg: vector size mismatch");
  std::vector<double> before = x;
  cycle_level(fine_, x, b, omega);
  double inc = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    inc = std::max(inc, std::abs(x[i] - before[i]));
  return inc;
}

MmgHierarchy::SolveStats MmgHierarchy::solve(std::vector<double>& x,
                                             const std::vector<double>& b,
                                             double omega, double tol,
                                             int max_cycles) const {
  SolveStats st;
  std::vector<double> incs;
  incs.reserve(max_cycles);
  for (int c = 1; c <= max_cycles; ++c) {
    const double inc = vcycle(x, b, omega);
    st.cycles = c;
    if (inc <= tol) {
      st.converged = true;
      return st;
    }
    incs.push_back(inc);
    if (c > 20 && inc > 10.0 * incs[c - 21]) {
      st.diverged = true;
      st.note = "diverging: update grew from " + std::to_string(incs[c - 21]) +
                " to " + std::to_string(inc) + " over 20 cycles (omega=" +
                std::to_string(omega) + ", lmax=" + std::to_string(lmax()) +
                ")";
      return st;
    }
  }
  st.note = "no convergence within " + std::to_string(max_cycles) +
            " cycles (omega=" + std::to_string(omega) + ")";
  return st;
}

MmgRunResult mmg_run_ibvp(int order, int level, const IbvpProblem& prob,
                          double dt, const MmgOptions& opt) {
  MmgRunResult out;
  require(dt > 0.0 && prob.T > 0.0, "ibvp: bad time parameters");
  const double lambda = prob.lambda;
  MmgHierarchy h(order, level, opt.coarse_level, prob.prm, prob.q,
                 lambda * dt);
  const SplineBasis& basis = h.basis(level);
  const int n = basis.size();
  const StiffnessOperator& a = h.stiffness(level);

  // Initial coefficients: L2 projection of the initial data.
  std::vector<double> c;
  {
    const std::vector<double> b0 = load_vector_singular(basis, prob.u0);
    LinearOp mass = [&](const std::vector<double>& x, std::vector<double>& y) {
      mass_apply(basis, x, y);
    };
    SolveOptions so;
    so.tol = 1e-13;
    auto res = solve_cg(mass, b0, so);
    require(res.converged, "ibvp: initial projection failed");
    c = std::move(res.x);
  }

  // Product-form sources are integrated once.
  std::vector<std::vector<double>> term_loads;
  for (const auto& term : prob.terms)
    term_loads.push_back(load_vector_singular(basis, term.fx));

  const int steps = static_cast<int>(std::llround(prob.T / dt));
  require(steps > 0, "ibvp: no steps to take");
  const double omega = h.omega(opt.omega_factor);
  const double tol = std::exp2(-0.5 * level) * opt.stop_scale;

  std::vector<double> rhs(n), ac(n), mc(n);
  long long total_cycles = 0;
  for (int sn = 0; sn < steps; ++sn) {
    const double t_eval = (sn + lambda) * dt;
    a.apply(c, ac);
    mass_apply(basis, c, mc);
    for (int i = 0; i < n; ++i)
      rhs[i] = prob.q * mc[i] - (1.0 - lambda) * dt * ac[i];
    if (!prob.terms.empty()) {
      for (size_t k = 0; k < prob.terms.size(); ++k) {
        const double ft = prob.terms[k].ft(t_eval);
        for (int i = 0; i < n; ++i) rhs[i] += dt * ft * term_loads[k][i];
      }
    } else {
      require(static_cast<bool>(prob.f), "ibvp: no source provided");
      const std::vector<double> fl = load_vector_singular(
          basis, [&](double x) { return prob.f(x, t_eval); });
      for (int i = 0; i < n; ++i) rhs[i] += dt * fl[i];
    }
    std::vector<double> x = opt.warm_start ? c : std::vector<double>(n, 0.0);
    auto st = h.solve(x, rhs, omega, tol, opt.max_cycles);
    total_cycles += st.cycles;
    if (!st.converged) {
      out.ok = false;
      out.note = "step " + std::to_string(sn + 1) + ": " +
                 (st.note.empty() ? std::string("no convergence") : st.note);
      out.coeffs = std::move(c);
      out.steps = sn;
      out.avg_cycles =
          sn > 0 ? static_cast<double>(total_cycles) / (sn + 1) : st.cycles;
      return out;
    }
    c = std::move(x);
  }
  out.coeffs = std::move(c);
  out.steps = steps;
  out.avg_cycles = static_cast<double>(total_cycles) / steps;
  return out;
}

}  // namespace fracwave
