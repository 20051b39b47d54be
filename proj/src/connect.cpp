#include "qn/connect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "qn/algebra.hpp"
#include "qn/curve.hpp"
#include "qn/mu.hpp"
#include "qn/special.hpp"

namespace qn {

namespace {

constexpr double kPi = std::numbers::pi;

// Joint boundary system for a target (x, z), z != 0.  Unknowns: |theta|_l
// for blocks with x_l != 0, block energies E_l = |v0_l|^2 for blocks with
// x_l = 0 (whose |theta|_l is pinned to pi * n_l).  Residuals:
//   sum_m 16 z_m^2 a(m,l)^2 / S_m^2 - |theta|_l^2      (all blocks)
// with S_m = sum_{x_r != 0} a(m,r)^2 |x_r|^2 mu(t_r)/t_r
//          + sum_{x_r == 0} a(m,r)^2 E_r / (pi n_r)^2.
struct JointSystem {
  const AnisotropyParams& p;
  const XVec& x;
  const ZVec& z;
  std::vector<int> nz, zz;      // block indices with x_l != 0 / == 0
  std::vector<int> wind;        // winding number per zz entry
  std::vector<double> xl2;      // |x_l|^2 per block

  int unknowns() const { return static_cast<int>(nz.size() + zz.size()); }

  std::array<double, 3> S(const std::vector<double>& u) const {
    std::array<double, 3> s{0.0, 0.0, 0.0};
    for (int m = 0; m < 3; ++m) {
      for (size_t i = 0; i < nz.size(); ++i)
        s[m] += p.a2(m, nz[i]) * xl2[static_cast<size_t>(nz[i])] * mu_over_t(u[i]);
      for (size_t i = 0; i < zz.size(); ++i) {
        const double pn = kPi * wind[i];
        s[m] += p.a2(m, zz[i]) * u[nz.size() + i] / (pn * pn);
      }
    }
    return s;
  }

  std::vector<double> residual(const std::vector<double>& u) const {
    const auto s = S(u);
    std::vector<double> r(static_cast<size_t>(unknowns()));
    auto rhs = [&](int l) {
      double v = 0.0;
      for (int m = 0; m < 3; ++m)
        if (z[m] != 0.0) v += 16.0 * z[m] * z[m] * p.a2(m, l) / (s[m] * s[m]);
      return v;
    };
    for (size_t i = 0; i < nz.size(); ++i) r[i] = rhs(nz[i]) - u[i] * u[i];
    for (size_t i = 0; i < zz.size(); ++i) {
      const double pn = kPi * wind[i];
      r[nz.size() + i] = rhs(zz[i]) - pn * pn;
    }
    return r;
  }

  std::vector<double> jacobian(const std::vector<double>& u) const {
    const int nu = unknowns();
    const auto s = S(u);
    std::vector<double> J(static_cast<size_t>(nu * nu), 0.0);
    // dS_m/du_j
    std::array<std::vector<double>, 3> dS;
    for (int m = 0; m < 3; ++m) {
      dS[m].assign(static_cast<size_t>(nu), 0.0);
      for (size_t j = 0; j < nz.size(); ++j)
        dS[m][j] = p.a2(m, nz[j]) * xl2[static_cast<size_t>(nz[j])] * mu_over_t_prime(u[j]);
      for (size_t j = 0; j < zz.size(); ++j) {
        const double pn = kPi * wind[j];
        dS[m][nz.size() + j] = p.a2(m, zz[j]) / (pn * pn);
      }
    }
    auto fill_row = [&](int row, int block_l) {
      for (int j = 0; j < nu; ++j) {
        double v = 0.0;
        for (int m = 0; m < 3; ++m)
          if (z[m] != 0.0)
            v += -32.0 * z[m] * z[m] * p.a2(m, block_l) / (s[m] * s[m] * s[m]) *
                 dS[m][static_cast<size_t>(j)];
        J[static_cast<size_t>(row * nu + j)] = v;
      }
    };
    for (size_t i = 0; i < nz.size(); ++i) {
      fill_row(static_cast<int>(i), nz[i]);
      J[i * static_cast<size_t>(nu) + i] -= 2.0 * u[i];
    }
    for (size_t i = 0; i < zz.size(); ++i) fill_row(static_cast<int>(nz.size() + i), zz[i]);
    return J;
  }
};

double norm_inf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Dense Gaussian elimination; returns false if numerically singular.
bool solve_dense(std::vector<double> A, std::vector<double> b, std::vector<double>& out) {
  const int n = static_cast<int>(b.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(A[static_cast<size_t>(r * n + c)]) >
          std::fabs(A[static_cast<size_t>(piv * n + c)]))
        piv = r;
    if (std::fabs(A[static_cast<size_t>(piv * n + c)]) < 1e-300) return false;
    if (piv != c) {
      for (int j = 0; j < n; ++j)
        std::swap(A[static_cast<size_t>(c * n + j)], A[static_cast<size_t>(piv * n + j)]);
      std::swap(b[static_cast<size_t>(c)], b[static_cast<size_t>(piv)]);
    }
    for (int r = c + 1; r < n; ++r) {
      const double f = A[static_cast<size_t>(r * n + c)] / A[static_cast<size_t>(c * n + c)];
      if (f == 0.0) continue;
      for (int j = c; j < n; ++j)
        A[static_cast<size_t>(r * n + j)] -= f * A[static_cast<size_t>(c * n + j)];
      b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(c)];
    }
  }
  out.assign(static_cast<size_t>(n), 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double v = b[static_cast<size_t>(r)];
    for (int j = r + 1; j < n; ++j) v -= A[static_cast<size_t>(r * n + j)] * out[static_cast<size_t>(j)];
    out[static_cast<size_t>(r)] = v / A[static_cast<size_t>(r * n + r)];
  }
  return true;
}

// Damped Newton with projection into the per-unknown box (lo, hi).
// Returns true on step convergence with a small residual.
bool newton_solve(const JointSystem& sys, std::vector<double>& u,
                  const std::vector<double>& lo, const std::vector<double>& hi,
                  const ConnectOptions& opts) {
  auto project = [&](std::vector<double>& v) {
    for (size_t i = 0; i < v.size(); ++i) {
      const double margin = 1e-10 * (hi[i] - lo[i] > 0.0 ? (hi[i] - lo[i]) : 1.0);
      if (hi[i] > lo[i]) v[i] = std::clamp(v[i], lo[i] + margin, hi[i] - margin);
      else v[i] = std::max(v[i], lo[i] + margin);  // one-sided (energies)
    }
  };
  project(u);
  std::vector<double> r = sys.residual(u);
  double rn = norm_inf(r);
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    std::vector<double> step;
    if (!solve_dense(sys.jacobian(u), r, step)) {
      // Singular Jacobian: equal weights with equal windings make residual
      // rows coincide (a solution family).  Take the minimal-norm step from
      // the regularized normal equations instead.
      const std::vector<double> J = sys.jacobian(u);
      const int m = static_cast<int>(u.size());
      std::vector<double> JtJ(static_cast<size_t>(m * m), 0.0), Jtr(static_cast<size_t>(m), 0.0);
      double tr = 0.0;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          double s = 0.0;
          for (int k = 0; k < m; ++k)
            s += J[static_cast<size_t>(k * m + i)] * J[static_cast<size_t>(k * m + j)];
          JtJ[static_cast<size_t>(i * m + j)] = s;
          if (i == j) tr += s;
        }
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += J[static_cast<size_t>(k * m + i)] * r[static_cast<size_t>(k)];
        Jtr[static_cast<size_t>(i)] = s;
      }
      const double lam = 1e-12 * (tr / m) + 1e-300;
      for (int i = 0; i < m; ++i) JtJ[static_cast<size_t>(i * m + i)] += lam;
      if (!solve_dense(JtJ, Jtr, step)) return false;
    }
    for (double& s : step) s = -s;
    double lam = 1.0;
    bool moved = false;
    for (int half = 0; half < 40; ++half) {
      std::vector<double> trial(u.size());
      for (size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + lam * step[i];
      project(trial);
      const std::vector<double> rt = sys.residual(trial);
      const double rtn = norm_inf(rt);
      if (rtn < rn) {
        double delta = 0.0;
        for (size_t i = 0; i < u.size(); ++i) delta = std::max(delta, std::fabs(trial[i] - u[i]));
        u = std::move(trial);
        r = rt;
        rn = rtn;
        moved = true;
        if (delta < opts.newton_step_tol) return rn < 1e-8 * (1.0 + norm_inf(u));
        break;
      }
      lam *= 0.5;
    }
    if (!moved) return rn < 1e-10 * (1.0 + norm_inf(u));
  }
  return false;
}

struct BlockDirections {
  std::vector<Vec4> dir;  // unit vector per zero block (parallel to zz)
};

// Assemble a GeodesicSolution from a converged joint solution; empty if the
// closed-form flow fails to reproduce the target within opts.endpoint_tol.
std::optional<GeodesicSolution> build_solution(const JointSystem& sys,
                                               const std::vector<double>& u,
                                               const BlockDirections& dirs,
                                               const ConnectOptions& opts) {
  const AnisotropyParams& p = sys.p;
  const auto s = sys.S(u);
  GeodesicSolution sol;
  sol.target = GroupPoint{sys.x, sys.z};
  for (int m = 0; m < 3; ++m) sol.theta[m] = sys.z[m] == 0.0 ? 0.0 : 4.0 * sys.z[m] / s[m];

  sol.theta_norms.resize(static_cast<size_t>(p.n()));
  sol.multiindex.assign(static_cast<size_t>(p.n()), 0);
  for (int l = 0; l < p.n(); ++l)
    sol.theta_norms[static_cast<size_t>(l)] = std::sqrt(p.theta_norm2(sol.theta, l));

  // Reject |theta|_l at a pole of mu for nonzero blocks (sin t = 0 there is
  // incompatible with x_l != 0).
  for (size_t i = 0; i < sys.nz.size(); ++i) {
    const double t = sol.theta_norms[static_cast<size_t>(sys.nz[i])];
    if (std::fabs(t - kPi * std::round(t / kPi)) < opts.pole_tol) return std::nullopt;
  }

  sol.v0.assign(sys.x.size(), 0.0);
  for (size_t i = 0; i < sys.nz.size(); ++i) {
    const int l = sys.nz[i];
    const double t = u[i];
    const Mat4 Ml = theta_matrix_block(p, sol.theta, l);
    const Vec4 xl = block(sys.x, l);
    set_block(sol.v0, l, t_cot_t(t) * xl - Ml * xl);
  }
  for (size_t i = 0; i < sys.zz.size(); ++i) {
    const int l = sys.zz[i];
    const double E = u[sys.nz.size() + i];
    if (!(E > 0.0)) return std::nullopt;
    sol.multiindex[static_cast<size_t>(l)] = sys.wind[i];
    set_block(sol.v0, l, std::sqrt(E) * dirs.dir[i]);
  }

  sol.kind = sys.zz.empty() ? GeodesicSolution::Case::Full
             : sys.nz.empty() ? GeodesicSolution::Case::ZOnly
                              : GeodesicSolution::Case::Mixed;
  sol.length2 = norm2(sol.v0);
  sol.length = std::sqrt(sol.length2);

  const ExpMapPoint end = exp_map(p, GeodesicIVP{sol.v0, sol.theta}, 1.0);
  sol.endpoint_error = max_abs_diff(end.q, sol.target);
  const double scale = 1.0 + std::max(norm(sys.x), norm(sys.z));
  if (sol.endpoint_error > opts.endpoint_tol * scale) return std::nullopt;
  return sol;
}

bool same_solution(const GeodesicSolution& a, const GeodesicSolution& b, double tol) {
  double d = 0.0;
  for (size_t i = 0; i < a.theta_norms.size(); ++i)
    d = std::max(d, std::fabs(a.theta_norms[i] - b.theta_norms[i]));
  for (int m = 0; m < 3; ++m) d = std::max(d, std::fabs(a.theta[m] - b.theta[m]));
  // Zero-block direction freedom: also compare v0 so distinct directions
  // with equal theta data stay distinct.
  for (size_t i = 0; i < a.v0.size(); ++i) d = std::max(d, std::fabs(a.v0[i] - b.v0[i]));
  return d < tol;
}

void add_unique(std::vector<GeodesicSolution>& out, GeodesicSolution sol, double tol) {
  for (const auto& s : out)
    if (same_solution(s, sol, tol)) return;
  out.push_back(std::move(sol));
}

// theta start points within one mu branch: 5 per monotone sub-interval.
std::vector<double> branch_starts(int branch) {
  static const double fr[5] = {0.10, 0.30, 0.50, 0.70, 0.90};
  std::vector<double> pts;
  const MuBranchInfo info = mu_branch_info(branch);
  if (branch == 0) {
    for (double f : fr) pts.push_back(info.lo + f * (info.hi - info.lo));
  } else {
    for (double f : fr) pts.push_back(info.lo + f * (info.critical - info.lo));
    for (double f : fr) pts.push_back(info.critical + f * (info.hi - info.critical));
  }
  return pts;
}

std::vector<double> xl2_of(const AnisotropyParams& p, const XVec& x) {
  std::vector<double> v(static_cast<size_t>(p.n()));
  for (int l = 0; l < p.n(); ++l) v[static_cast<size_t>(l)] = norm2(block(x, l));
  return v;
}

// Shared driver: multistart Newton over the start grid, dedup, 1-D scan
// fallback when there is a single theta unknown and no energy unknowns.
std::vector<GeodesicSolution> solve_joint(const JointSystem& sys,
                                          const std::vector<int>& branch_box,
                                          const BlockDirections& dirs,
                                          const ConnectOptions& opts,
                                          const std::vector<double>& energy_seeds) {
  std::vector<GeodesicSolution> out;
  const size_t n_nz = sys.nz.size(), n_zz = sys.zz.size();

  std::vector<double> lo(n_nz + n_zz), hi(n_nz + n_zz);
  std::vector<std::vector<double>> tstarts(n_nz);
  for (size_t i = 0; i < n_nz; ++i) {
    const MuBranchInfo info = mu_branch_info(branch_box[i]);
    lo[i] = info.lo;
    hi[i] = info.hi;
    tstarts[i] = branch_starts(branch_box[i]);
  }
  for (size_t i = 0; i < n_zz; ++i) {
    lo[n_nz + i] = 0.0;
    hi[n_nz + i] = -1.0;  // one-sided: E > 0 only
  }

  // Cartesian product of per-block starts, capped deterministically.
  std::vector<size_t> idx(n_nz, 0);
  long total = 1;
  for (const auto& t : tstarts) total *= static_cast<long>(t.size());
  if (total == 0) total = 1;
  const long cap = 20000;
  long stride = 1;
  if (total > cap) stride = (total + cap - 1) / cap;

  for (long flat = 0; flat < total; flat += stride) {
    long rem = flat;
    for (size_t i = 0; i < n_nz; ++i) {
      idx[i] = static_cast<size_t>(rem % static_cast<long>(tstarts[i].size()));
      rem /= static_cast<long>(tstarts[i].size());
    }
    for (double esc : energy_seeds) {
      std::vector<double> u(n_nz + n_zz);
      for (size_t i = 0; i < n_nz; ++i) u[i] = tstarts[i][idx[i]];
      for (size_t i = 0; i < n_zz; ++i) u[n_nz + i] = esc;
      if (!newton_solve(sys, u, lo, hi, opts)) continue;
      bool in_box = true;
      for (size_t i = 0; i < n_nz; ++i)
        if (!(u[i] > lo[i] && u[i] < hi[i])) in_box = false;
      if (!in_box) continue;
      if (auto sol = build_solution(sys, u, dirs, opts))
        add_unique(out, std::move(*sol), opts.dedup_tol);
      if (static_cast<int>(out.size()) >= opts.max_solutions) return out;
    }
  }

  // Scan fallback for a single theta unknown: bracket sign changes of the
  // scalar residual on a fine grid, then bisect.
  if (n_nz == 1 && n_zz == 0) {
    auto F = [&](double t) { return sys.residual({t})[0]; };
    const MuBranchInfo info = mu_branch_info(branch_box[0]);
    const int N = 4096;
    double prev_t = 0.0, prev_f = 0.0;
    bool have_prev = false;
    for (int i = 1; i < N; ++i) {
      const double t = info.lo + (info.hi - info.lo) * i / N;
      const double f = F(t);
      if (!std::isfinite(f)) continue;
      if (have_prev && ((prev_f <= 0.0) != (f <= 0.0))) {
        double a = prev_t, b = t, fa = prev_f;
        for (int it = 0; it < 200; ++it) {
          const double m = 0.5 * (a + b);
          if (m == a || m == b) break;
          const double fm = F(m);
          if ((fa <= 0.0) == (fm <= 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        std::vector<double> u{0.5 * (a + b)};
        if (u[0] > info.lo && u[0] < info.hi)
          if (auto sol = build_solution(sys, u, dirs, opts))
            add_unique(out, std::move(*sol), opts.dedup_tol);
      }
      prev_t = t;
      prev_f = f;
      have_prev = true;
    }
  }
  return out;
}

std::vector<double> default_energy_seeds(double base) {
  return {base, base * 4.0, base * 0.25, base * 16.0, base * 0.0625};
}

}  // namespace

GeodesicSolution connect_x_zero(const AnisotropyParams& p, const XVec& x) {
  GeodesicSolution sol;
  sol.kind = GeodesicSolution::Case::XOnly;
  sol.v0 = x;
  sol.theta = {0.0, 0.0, 0.0};
  sol.theta_norms.assign(static_cast<size_t>(p.n()), 0.0);
  sol.multiindex.assign(static_cast<size_t>(p.n()), 0);
  sol.length2 = norm2(x);
  sol.length = std::sqrt(sol.length2);
  sol.target = GroupPoint{x, {0.0, 0.0, 0.0}};
  sol.endpoint_error = max_abs_diff(exp_map(p, GeodesicIVP{sol.v0, sol.theta}, 1.0).q, sol.target);
  return sol;
}

std::optional<GeodesicSolution> connect_zero_z(const AnisotropyParams& p, const ZVec& z,
                                               const std::vector<int>& multiindex,
                                               const ConnectOptions& opts,
                                               const std::vector<Vec4>& directions) {
  if (static_cast<int>(multiindex.size()) != p.n())
    throw std::runtime_error("connect_zero_z: multiindex must have one entry per block");
  for (int nl : multiindex)
    if (nl < 1) throw std::runtime_error("connect_zero_z: winding numbers must be >= 1");
  if (norm(z) == 0.0) return std::nullopt;

  XVec x0(static_cast<size_t>(p.xdim()), 0.0);
  JointSystem sys{p, x0, z, {}, {}, {}, xl2_of(p, x0)};
  for (int l = 0; l < p.n(); ++l) {
    sys.zz.push_back(l);
    sys.wind.push_back(multiindex[static_cast<size_t>(l)]);
  }

  BlockDirections dirs;
  for (int l = 0; l < p.n(); ++l) {
    Vec4 d{1.0, 0.0, 0.0, 0.0};
    if (!directions.empty()) d = directions[static_cast<size_t>(l)];
    const double dn = norm(d);
    if (dn == 0.0) throw std::runtime_error("connect_zero_z: zero direction");
    dirs.dir.push_back((1.0 / dn) * d);
  }

  // Seed E_l = kappa (pi n_l)^2 with kappa from a per-block closure.
  std::array<double, 3> A{0.0, 0.0, 0.0};
  for (int m = 0; m < 3; ++m)
    for (int l = 0; l < p.n(); ++l) A[static_cast<size_t>(m)] += p.a2(m, l);
  double log_kappa = 0.0;
  for (int l = 0; l < p.n(); ++l) {
    double s = 0.0;
    for (int m = 0; m < 3; ++m)
      s += 16.0 * z[static_cast<size_t>(m)] * z[static_cast<size_t>(m)] * p.a2(m, l) /
           (A[static_cast<size_t>(m)] * A[static_cast<size_t>(m)]);
    log_kappa += 0.5 * std::log(s / (kPi * kPi * multiindex[static_cast<size_t>(l)] *
                                     multiindex[static_cast<size_t>(l)]));
  }
  const double kappa = std::exp(log_kappa / p.n());

  std::vector<GeodesicSolution> sols;
  for (double scale : {1.0, 4.0, 0.25, 16.0, 0.0625}) {
    std::vector<double> u(static_cast<size_t>(p.n()));
    for (int l = 0; l < p.n(); ++l) {
      const double pn = kPi * multiindex[static_cast<size_t>(l)];
      u[static_cast<size_t>(l)] = scale * kappa * pn * pn;
    }
    std::vector<double> lo(u.size(), 0.0), hi(u.size(), -1.0);
    if (!newton_solve(sys, u, lo, hi, opts)) continue;
    if (auto sol = build_solution(sys, u, dirs, opts)) {
      sols.push_back(std::move(*sol));
      break;
    }
  }
  if (sols.empty()) return std::nullopt;
  return sols.front();
}

std::vector<GeodesicSolution> connect_full(const AnisotropyParams& p, const XVec& x,
                                           const ZVec& z, const std::vector<int>& branch_box,
                                           const ConnectOptions& opts) {
  if (static_cast<int>(branch_box.size()) != p.n())
    throw std::runtime_error("connect_full: branch_box must have one entry per block");
  JointSystem sys{p, x, z, {}, {}, {}, xl2_of(p, x)};
  for (int l = 0; l < p.n(); ++l) {
    if (sys.xl2[static_cast<size_t>(l)] == 0.0)
      throw std::runtime_error("connect_full: block " + std::to_string(l + 1) +
                               " of x is zero; use connect_mixed");
    sys.nz.push_back(l);
  }
  if (norm(z) == 0.0) return {};
  return solve_joint(sys, branch_box, BlockDirections{}, opts, {1.0});
}

std::vector<GeodesicSolution> connect_mixed(const AnisotropyParams& p, const XVec& x,
                                            const ZVec& z, const std::vector<int>& multiindex,
                                            const std::vector<int>& branch_box,
                                            const ConnectOptions& opts,
                                            const std::vector<Vec4>& directions) {
  JointSystem sys{p, x, z, {}, {}, {}, xl2_of(p, x)};
  for (int l = 0; l < p.n(); ++l) {
    if (sys.xl2[static_cast<size_t>(l)] == 0.0) sys.zz.push_back(l);
    else sys.nz.push_back(l);
  }
  if (static_cast<int>(multiindex.size()) != static_cast<int>(sys.zz.size()))
    throw std::runtime_error("connect_mixed: need one winding number per zero block");
  if (static_cast<int>(branch_box.size()) != static_cast<int>(sys.nz.size()))
    throw std::runtime_error("connect_mixed: need one branch per nonzero block");
  for (int nl : multiindex)
    if (nl < 1) throw std::runtime_error("connect_mixed: winding numbers must be >= 1");
  sys.wind = multiindex;
  if (norm(z) == 0.0) return {};

  BlockDirections dirs;
  for (size_t i = 0; i < sys.zz.size(); ++i) {
    Vec4 d{1.0, 0.0, 0.0, 0.0};
    if (!directions.empty()) d = directions[i];
    const double dn = norm(d);
    if (dn == 0.0) throw std::runtime_error("connect_mixed: zero direction");
    dirs.dir.push_back((1.0 / dn) * d);
  }
  return solve_joint(sys, branch_box, dirs, opts,
                     default_energy_seeds(opts.zero_block_energy));
}

EnumerationResult enumerate_geodesics(const AnisotropyParams& p, const GroupPoint& target,
                                      const ConnectOptions& opts) {
  EnumerationResult res;
  const bool zero_z = norm(target.z) == 0.0;
  std::vector<int> zero_blocks, nonzero_blocks;
  for (int l = 0; l < p.n(); ++l) {
    if (norm2(block(target.x, l)) == 0.0) zero_blocks.push_back(l);
    else nonzero_blocks.push_back(l);
  }
  const bool zero_x = static_cast<int>(zero_blocks.size()) == p.n();

  if (zero_x && zero_z) return res;  // origin: the constant curve

  if (zero_z) {
    res.solutions.push_back(connect_x_zero(p, target.x));
    return res;
  }

  auto for_each_tuple = [&](int length, int lo, int hi, auto&& fn) {
    std::vector<int> t(static_cast<size_t>(length), lo);
    while (true) {
      fn(t);
      int pos = 0;
      while (pos < length) {
        if (++t[static_cast<size_t>(pos)] <= hi) break;
        t[static_cast<size_t>(pos)] = lo;
        ++pos;
      }
      if (pos == length) break;
    }
  };

  bool full_hit_cap = false;
  if (zero_x) {
    res.truncated = true;  // winding families never end
    for_each_tuple(p.n(), 1, opts.max_multiindex, [&](const std::vector<int>& w) {
      if (static_cast<int>(res.solutions.size()) >= opts.max_solutions) return;
      if (auto sol = connect_zero_z(p, target.z, w, opts)) res.solutions.push_back(std::move(*sol));
    });
  } else if (zero_blocks.empty()) {
    for_each_tuple(p.n(), 0, opts.max_branch, [&](const std::vector<int>& box) {
      if (static_cast<int>(res.solutions.size()) >= opts.max_solutions) return;
      auto sols = connect_full(p, target.x, target.z, box, opts);
      if (!sols.empty() && *std::max_element(box.begin(), box.end()) == opts.max_branch)
        full_hit_cap = true;
      for (auto& s : sols) add_unique(res.solutions, std::move(s), opts.dedup_tol);
    });
    res.truncated = full_hit_cap;
  } else {
    res.truncated = true;
    const int nnz = static_cast<int>(nonzero_blocks.size());
    const int nzz = static_cast<int>(zero_blocks.size());
    for_each_tuple(nnz, 0, opts.max_branch, [&](const std::vector<int>& box) {
      for_each_tuple(nzz, 1, opts.max_multiindex, [&](const std::vector<int>& w) {
        if (static_cast<int>(res.solutions.size()) >= opts.max_solutions) return;
        auto sols = connect_mixed(p, target.x, target.z, w, box, opts);
        for (auto& s : sols) add_unique(res.solutions, std::move(s), opts.dedup_tol);
      });
    });
  }

  std::stable_sort(res.solutions.begin(), res.solutions.end(),
                   [](const GeodesicSolution& a, const GeodesicSolution& b) {
                     return a.length < b.length;
                   });
  return res;
}

SampledCurve curve_from_target(const AnisotropyParams& p, const GroupPoint& target,
                               const GeodesicSolution& sol, int samples) {
  SampledCurve c;
  c.s = uniform_grid(0.0, 1.0, samples);
  c.pts.reserve(c.s.size());

  // Denominators S_m recovered from theta (S_m = 4 z_m / theta_m when
  // z_m != 0); blocks with x_l = 0 use the winding form directly.
  for (double s : c.s) {
    GroupPoint q = GroupPoint::origin(p.n());
    for (int l = 0; l < p.n(); ++l) {
      const Vec4 xl = block(target.x, l);
      const double t = sol.theta_norms[static_cast<size_t>(l)];
      if (norm2(xl) != 0.0) {
        if (t == 0.0) {
          set_block(q.x, l, s * xl);
          continue;
        }
        const Mat4 Ml = theta_matrix_block(p, sol.theta, l);
        // x_l(s) = [ (2 cot(t) sin^2(st) - sin(2st)) M_l / t
        //           + (cot(t) sin(2st) + 2 sin^2(st)) I ] x_l / 2,
        // written in product form to avoid cancellation:
        const double cA = 2.0 * std::sin(s * t) * std::sin((s - 1.0) * t) / (t * std::sin(t));
        const double cB = (std::sin((2.0 * s - 1.0) * t) + std::sin(t)) / std::sin(t);
        set_block(q.x, l, 0.5 * (cA * (Ml * xl) + cB * xl));
      } else {
        const Vec4 v0l = block(sol.v0, l);
        const Mat4 Ml = theta_matrix_block(p, sol.theta, l);
        const double sn = s * sinc(s * t);
        set_block(q.x, l, (sn * sn) * (Ml * v0l) + (s * sinc(2.0 * s * t)) * v0l);
      }
    }
    for (int m = 0; m < 3; ++m) {
      if (sol.theta[m] == 0.0) {
        q.z[m] = 0.0;
        continue;
      }
      double acc = 0.0;
      for (int l = 0; l < p.n(); ++l) {
        const double t = sol.theta_norms[static_cast<size_t>(l)];
        const Vec4 xl = block(target.x, l);
        double e2;  // |v0_l|^2 in the flow formulas
        if (norm2(xl) != 0.0) {
          const double snt = std::sin(t);
          e2 = t * t * norm2(xl) / (snt * snt);
        } else {
          e2 = norm2(block(sol.v0, l));
        }
        const double u = 2.0 * s * t;
        acc += p.a2(m, l) * e2 * s * s * s * u_minus_sin_over_u3(u);
      }
      q.z[m] = sol.theta[m] * acc;
    }
    c.pts.push_back(std::move(q));
  }
  return c;
}

std::string solutions_to_json(const AnisotropyParams& p,
                              const std::vector<GeodesicSolution>& sols, bool truncated,
                              int residual_samples) {
  nlohmann::ordered_json out;
  out["count"] = sols.size();
  out["truncated"] = truncated;
  out["solutions"] = nlohmann::ordered_json::array();
  for (const auto& s : sols) {
    nlohmann::ordered_json j;
    switch (s.kind) {
      case GeodesicSolution::Case::XOnly: j["case"] = "x_only"; break;
      case GeodesicSolution::Case::ZOnly: j["case"] = "z_only"; break;
      case GeodesicSolution::Case::Full: j["case"] = "full"; break;
      case GeodesicSolution::Case::Mixed: j["case"] = "mixed"; break;
    }
    j["v0"] = s.v0;
    j["theta"] = s.theta;
    j["theta_norms"] = s.theta_norms;
    j["multiindex"] = s.multiindex;
    j["length"] = s.length;
    j["length2"] = s.length2;
    j["endpoint_error"] = s.endpoint_error;
    const SampledCurve c = sample_exp_map(p, GeodesicIVP{s.v0, s.theta}, 1.0, residual_samples);
    j["max_geodesic_residual"] = max_geodesic_residual(p, c, s.theta);
    j["max_horizontality_residual"] = max_horizontality_residual(p, c);
    j["target"]["x"] = s.target.x;
    j["target"]["z"] = s.target.z;
    out["solutions"].push_back(std::move(j));
  }
  return out.dump(2);
}

}  // namespace qn
