#include "qn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "qn/algebra.hpp"
#include "qn/special.hpp"

namespace qn {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

Cplx pow_int(Cplx z, int k) {
  Cplx r{1.0, 0.0};
  while (k > 0) {
    if (k & 1) r *= z;
    z *= z;
    k >>= 1;
  }
  return r;
}

// (1 - z coth z)/z^2, stable at 0 (-> -1/3); scalar behind dV/dw_m.
Cplx one_minus_xcoth_over_z2(Cplx z) {
  const Cplx z2 = z * z;
  if (std::norm(z) < 1e-4) {
    return -1.0 / 3.0 +
           z2 * (1.0 / 45.0 + z2 * (-2.0 / 945.0 + z2 * (1.0 / 4725.0)));
  }
  return (1.0 - z_coth_z(z)) / z2;
}

std::vector<double> block_norms2(const AnisotropyParams& p, const XVec& x) {
  std::vector<double> v(static_cast<size_t>(p.n()));
  for (int l = 0; l < p.n(); ++l) v[static_cast<size_t>(l)] = norm2(block(x, l));
  return v;
}

struct ZGroup {
  ZVec z{0.0, 0.0, 0.0};
  double zabs = 0.0;
  ZVec ztilde{0.0, 0.0, 0.0};
};

// Group points by exact z so stencil batches share the per-z work.
void build_zgroups(const std::vector<GroupPoint>& pts, std::vector<ZGroup>& groups,
                   std::vector<int>& gidx) {
  std::map<std::array<double, 3>, int> seen;
  groups.clear();
  gidx.assign(pts.size(), 0);
  for (size_t i = 0; i < pts.size(); ++i) {
    const std::array<double, 3> key{pts[i].z[0], pts[i].z[1], pts[i].z[2]};
    auto it = seen.find(key);
    if (it == seen.end()) {
      it = seen.emplace(key, static_cast<int>(groups.size())).first;
      ZGroup g;
      g.z = pts[i].z;
      g.zabs = norm(pts[i].z);
      if (g.zabs > 0.0)
        for (int m = 0; m < 3; ++m) g.ztilde[m] = g.z[m] / g.zabs;
      groups.push_back(g);
    }
    gidx[i] = it->second;
  }
}

// 3x3 linear solve by elimination with partial pivoting.
bool solve3(std::array<std::array<double, 3>, 3> A, std::array<double, 3> b,
            std::array<double, 3>& out) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
    if (std::fabs(A[piv][c]) < 1e-300) return false;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = A[r][c] / A[c][c];
      for (int j = c; j < 3; ++j) A[r][j] -= f * A[c][j];
      b[r] -= f * b[c];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double v = b[r];
    for (int j = r + 1; j < 3; ++j) v -= A[r][j] * out[j];
    out[r] = v / A[r][r];
  }
  return true;
}

// Radial envelope of |V| outside the quadrature box, eps-aware.  On the
// sphere |tau| = s each block radius w_l = alpha + i beta satisfies
//   alpha >= alpha_lo = sqrt(amin_l^2 s^2 - eps^2 amax_l^2),
//   beta  <= eps amax_l^2 s / alpha_lo,  |w_l| <= amax_l (s + eps),
// and |sinh w|^2 >= sinh^2 alpha, so
//   |v_l| <= (amax_l^2 (s+eps)^2 + beta_ub^2) / sinh^2 alpha_lo.
// The optional action lower bound uses Re(w coth w) >= alpha tanh(alpha)
// - beta / (cosh 2 alpha - 1).  Returns a bound on the tail integral of
// |V| / flb^{2n+2} with flb = eps|z| + sum_l (|x_l|^2/4) Re(w coth w)_lb.
double tail_envelope(const AnisotropyParams& p, double T, double eps, double zabs,
                     const std::vector<double>* xl2, int f_power) {
  const int n = p.n();
  std::vector<double> amin(static_cast<size_t>(n), 1e300), amax(static_cast<size_t>(n), 0.0);
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < 3; ++m) {
      amin[static_cast<size_t>(l)] = std::min(amin[static_cast<size_t>(l)], p.a(m, l));
      amax[static_cast<size_t>(l)] = std::max(amax[static_cast<size_t>(l)], p.a(m, l));
    }
  double amin_all = 1e300;
  for (double v : amin) amin_all = std::min(amin_all, v);
  const double L = 200.0 / amin_all;

  const GaussLegendre g = gauss_legendre(512);
  KahanSum acc;
  for (size_t i = 0; i < g.x.size(); ++i) {
    const double s = T + 0.5 * L * (g.x[i] + 1.0);
    const double wgt = 0.5 * L * g.w[i];
    double prod = 4.0 * kPi * s * s;
    double regamma = 0.0;
    bool ok = true;
    for (int l = 0; l < n && ok; ++l) {
      const double am = amin[static_cast<size_t>(l)], aM = amax[static_cast<size_t>(l)];
      const double A = am * am * s * s - eps * eps * aM * aM;
      if (A < 0.25) {
        ok = false;
        break;
      }
      const double alpha = std::sqrt(A);
      const double beta_ub = eps * aM * aM * s / alpha;
      const double num = aM * aM * (s + eps) * (s + eps) + beta_ub * beta_ub;
      prod *= num * x2_over_sinh2(alpha) / (alpha * alpha);
      if (xl2)
        regamma += 0.25 * (*xl2)[static_cast<size_t>(l)] *
                   std::max(0.0, alpha * std::tanh(alpha) -
                                     beta_ub / (std::cosh(2.0 * alpha) - 1.0));
    }
    if (!ok) return 1e300;  // cannot certify the tail for this (T, eps)
    double flb = eps * zabs + regamma;
    if (f_power > 0) {
      if (!(flb > 0.0)) return 1e300;
      prod /= std::pow(flb, f_power);
    }
    acc.add(wgt * prod);
  }
  return acc.value();
}

}  // namespace

ShiftedTau ShiftedTau::for_target(const ZVec& tau, double eps, const ZVec& z) {
  ShiftedTau st;
  st.tau = tau;
  st.eps = eps;
  const double zn = norm(z);
  if (zn > 0.0)
    for (int m = 0; m < 3; ++m) st.ztilde[m] = z[m] / zn;
  return st;
}

double epsilon0(const AnisotropyParams& p) { return kPi / (4.0 * p.max_a2()); }

Cplx block_radius(const AnisotropyParams& p, const CplxTriple& w, int l) {
  Cplx s{0.0, 0.0};
  for (int m = 0; m < 3; ++m) s += p.a2(m, l) * w[m] * w[m];
  return std::sqrt(s);
}

Cplx action_gamma(const AnisotropyParams& p, const XVec& x, const CplxTriple& w) {
  Cplx acc{0.0, 0.0};
  for (int l = 0; l < p.n(); ++l)
    acc += 0.25 * norm2(block(x, l)) * z_coth_z(block_radius(p, w, l));
  return acc;
}

Cplx complex_action(const AnisotropyParams& p, const XVec& x, const ZVec& z,
                    const CplxTriple& w) {
  Cplx f = action_gamma(p, x, w);
  for (int m = 0; m < 3; ++m) f -= Cplx{0.0, 1.0} * w[m] * z[m];
  return f;
}

CplxTriple action_gradient(const AnisotropyParams& p, const XVec& x, const ZVec& z,
                           const CplxTriple& w) {
  std::vector<Cplx> mh(static_cast<size_t>(p.n()));
  std::vector<double> xl2 = block_norms2(p, x);
  for (int l = 0; l < p.n(); ++l)
    mh[static_cast<size_t>(l)] = mu_hyp_over_z(block_radius(p, w, l));
  CplxTriple grad;
  for (int m = 0; m < 3; ++m) {
    Cplx s{0.0, 0.0};
    for (int l = 0; l < p.n(); ++l)
      s += p.a2(m, l) * 0.25 * xl2[static_cast<size_t>(l)] * mh[static_cast<size_t>(l)];
    grad[static_cast<size_t>(m)] = Cplx{0.0, -z[m]} - w[static_cast<size_t>(m)] * s;
  }
  return grad;
}

Cplx volume_element(const AnisotropyParams& p, const CplxTriple& w) {
  Cplx v{1.0, 0.0};
  for (int l = 0; l < p.n(); ++l) v *= z2_over_sinh2(block_radius(p, w, l));
  return v;
}

CplxTriple volume_gradient(const AnisotropyParams& p, const CplxTriple& w) {
  const Cplx V = volume_element(p, w);
  std::vector<Cplx> q(static_cast<size_t>(p.n()));
  for (int l = 0; l < p.n(); ++l)
    q[static_cast<size_t>(l)] = one_minus_xcoth_over_z2(block_radius(p, w, l));
  CplxTriple grad;
  for (int m = 0; m < 3; ++m) {
    Cplx s{0.0, 0.0};
    for (int l = 0; l < p.n(); ++l) s += p.a2(m, l) * q[static_cast<size_t>(l)];
    grad[static_cast<size_t>(m)] = 2.0 * w[static_cast<size_t>(m)] * V * s;
  }
  return grad;
}

Cplx action_sublaplacian(const AnisotropyParams& p, const CplxTriple& w) {
  Cplx acc{0.0, 0.0};
  for (int l = 0; l < p.n(); ++l) acc += 2.0 * z_coth_z(block_radius(p, w, l));
  return acc;
}

double hj_residual(const AnisotropyParams& p, const XVec& x, const ZVec& z, const ZVec& tau) {
  const CplxTriple w{Cplx{tau[0], 0.0}, Cplx{tau[1], 0.0}, Cplx{tau[2], 0.0}};
  const Cplx f = complex_action(p, x, z, w);
  const CplxTriple df = action_gradient(p, x, z, w);
  Cplx euler{0.0, 0.0};
  for (int m = 0; m < 3; ++m) euler += tau[m] * df[static_cast<size_t>(m)];

  // Hamiltonian evaluated mechanically at xi = grad_x f, theta = -i tau:
  // H = (xi, xi) + (1/4) sum_m theta_m^2 |x|_{A_m}^2 + sum_m theta_m (M_m x, xi),
  // all three terms computed from the bilinear (not Hermitian) form.
  std::vector<Cplx> xi(x.size());
  for (int l = 0; l < p.n(); ++l) {
    const Cplx half_b = 0.5 * z_coth_z(block_radius(p, w, l));
    for (int k = 0; k < 4; ++k)
      xi[static_cast<size_t>(4 * l + k)] = half_b * x[static_cast<size_t>(4 * l + k)];
  }
  Cplx ham{0.0, 0.0};
  for (const Cplx& v : xi) ham += v * v;
  for (int m = 0; m < 3; ++m) {
    const Cplx theta{0.0, -tau[m]};
    ham += 0.25 * theta * theta * weighted_norm2(p, m, x);
    const XVec gm = apply_generator(p, m, x);
    Cplx dot{0.0, 0.0};
    for (size_t j = 0; j < x.size(); ++j) dot += gm[j] * xi[j];
    ham += theta * dot;
  }
  return std::abs(euler + ham - f);
}

double transport_residual(const AnisotropyParams& p, const ZVec& tau) {
  const CplxTriple w{Cplx{tau[0], 0.0}, Cplx{tau[1], 0.0}, Cplx{tau[2], 0.0}};
  const Cplx V = volume_element(p, w);
  const CplxTriple dV = volume_gradient(p, w);
  Cplx euler{0.0, 0.0};
  for (int m = 0; m < 3; ++m) euler += tau[m] * dV[static_cast<size_t>(m)];
  const Cplx lhs = (2.0 * p.n() - action_sublaplacian(p, w)) * V - euler;
  return std::abs(lhs);
}

std::vector<KernelResult> heat_kernel_batch(const AnisotropyParams& p,
                                            const std::vector<GroupPoint>& pts,
                                            const HeatOptions& opts) {
  if (pts.empty()) return {};
  if (!(opts.time > 0.0)) throw std::runtime_error("heat_kernel: time must be positive");
  const int n = p.n();
  const size_t npts = pts.size();
  const double t = opts.time;

  std::vector<std::vector<double>> xl2(npts);
  double zmax = 0.0;
  for (size_t i = 0; i < npts; ++i) {
    if (static_cast<int>(pts[i].x.size()) != p.xdim())
      throw std::runtime_error("heat_kernel: point dimension mismatch");
    xl2[i] = block_norms2(p, pts[i].x);
    for (int m = 0; m < 3; ++m) zmax = std::max(zmax, std::fabs(pts[i].z[m]));
  }
  std::vector<ZGroup> groups;
  std::vector<int> gidx;
  build_zgroups(pts, groups, gidx);
  const size_t ng = groups.size();

  // Resolve the e^{i tau.z/t} oscillation: ~6 nodes per period across the box.
  const double T = opts.quad.half_width;
  const int want = static_cast<int>(std::ceil(6.0 * T * zmax / (kPi * t)));
  const int nodes = std::clamp(std::max(opts.quad.nodes, want), 2, opts.max_nodes);

  const GaussLegendre g = gauss_legendre(nodes);
  std::vector<KahanComplex> acc(static_cast<size_t>(nodes) * npts);
  std::vector<KahanSum> gro(static_cast<size_t>(nodes) * npts);

  parallel_for(nodes, [&](int i) {
    KahanComplex* ai = &acc[static_cast<size_t>(i) * npts];
    KahanSum* gi = &gro[static_cast<size_t>(i) * npts];
    const double t1 = T * g.x[static_cast<size_t>(i)];
    const double w1 = T * g.w[static_cast<size_t>(i)];
    std::vector<double> b(static_cast<size_t>(n));
    std::vector<double> cs(ng), sn(ng);
    for (int j = 0; j < nodes; ++j) {
      const double t2 = T * g.x[static_cast<size_t>(j)];
      const double w12 = w1 * T * g.w[static_cast<size_t>(j)];
      for (int k = 0; k < nodes; ++k) {
        const double t3 = T * g.x[static_cast<size_t>(k)];
        const double wgt = w12 * T * g.w[static_cast<size_t>(k)];
        double V = 1.0;
        for (int l = 0; l < n; ++l) {
          const double r = std::sqrt(p.a2(0, l) * t1 * t1 + p.a2(1, l) * t2 * t2 +
                                     p.a2(2, l) * t3 * t3);
          b[static_cast<size_t>(l)] = x_coth_x(r);
          V *= x2_over_sinh2(r);
        }
        for (size_t q = 0; q < ng; ++q) {
          const double phase =
              (t1 * groups[q].z[0] + t2 * groups[q].z[1] + t3 * groups[q].z[2]) / t;
          cs[q] = std::cos(phase);
          sn[q] = std::sin(phase);
        }
        for (size_t pt = 0; pt < npts; ++pt) {
          double arg = 0.0;
          for (int l = 0; l < n; ++l) arg += xl2[pt][static_cast<size_t>(l)] * b[static_cast<size_t>(l)];
          const double c = wgt * V * std::exp(-arg / (4.0 * t));
          const size_t q = static_cast<size_t>(gidx[pt]);
          ai[pt].add({c * cs[q], c * sn[q]});
          gi[pt].add(c);
        }
      }
    }
  });

  const double pf = opts.prefactor / std::pow(t, 2 * n + 3);
  const double tail = std::fabs(pf) * tail_envelope(p, T, 0.0, 0.0, nullptr, 0);
  std::vector<KernelResult> out(npts);
  for (size_t pt = 0; pt < npts; ++pt) {
    KahanComplex total;
    KahanSum gtotal;
    for (int i = 0; i < nodes; ++i) {
      total.add(acc[static_cast<size_t>(i) * npts + pt].value());
      gtotal.add(gro[static_cast<size_t>(i) * npts + pt].value());
    }
    KernelResult r;
    r.value = pf * total.value().real();
    r.imag_part = pf * total.value().imag();
    r.gross = std::fabs(pf) * gtotal.value();
    r.tail_bound = tail;
    r.converged = r.tail_bound <= opts.tail_tol * std::max(std::fabs(r.value), 1e-280);
    out[pt] = r;
  }
  return out;
}

KernelResult heat_kernel(const AnisotropyParams& p, const GroupPoint& q,
                         const HeatOptions& opts) {
  return heat_kernel_batch(p, {q}, opts).front();
}

std::vector<KernelResult> green_function_batch(const AnisotropyParams& p,
                                               const std::vector<GroupPoint>& pts,
                                               const GreenOptions& opts) {
  if (pts.empty()) return {};
  const int n = p.n();
  const size_t npts = pts.size();
  const double e0 = epsilon0(p);
  const double eps = opts.epsilon < 0.0 ? 0.5 * e0 : opts.epsilon;
  if (eps >= e0)
    throw std::runtime_error("green_function: contour shift must stay below pi/(4 max a^2)");

  std::vector<std::vector<double>> xl2(npts);
  for (size_t i = 0; i < npts; ++i) {
    if (static_cast<int>(pts[i].x.size()) != p.xdim())
      throw std::runtime_error("green_function: point dimension mismatch");
    xl2[i] = block_norms2(p, pts[i].x);
    const bool x_zero = norm2(pts[i].x) == 0.0;
    if (x_zero && norm(pts[i].z) == 0.0)
      throw std::runtime_error("green_function: undefined at the origin");
    if (x_zero && eps == 0.0)
      throw std::runtime_error("green_function: x = 0 requires a positive contour shift");
  }
  std::vector<ZGroup> groups;
  std::vector<int> gidx;
  build_zgroups(pts, groups, gidx);
  const size_t ng = groups.size();

  const double T = opts.quad.half_width;
  const int nodes = std::max(opts.quad.nodes, 2);
  const GaussLegendre g = gauss_legendre(nodes);
  std::vector<KahanComplex> acc(static_cast<size_t>(nodes) * npts);
  std::vector<KahanSum> gro(static_cast<size_t>(nodes) * npts);
  const int fpow = 2 * n + 2;

  parallel_for(nodes, [&](int i) {
    KahanComplex* ai = &acc[static_cast<size_t>(i) * npts];
    KahanSum* gi = &gro[static_cast<size_t>(i) * npts];
    const double t1 = T * g.x[static_cast<size_t>(i)];
    const double w1 = T * g.w[static_cast<size_t>(i)];
    std::vector<Cplx> bg(ng * static_cast<size_t>(n));
    std::vector<Cplx> Vg(ng), c0(ng);
    for (int j = 0; j < nodes; ++j) {
      const double t2 = T * g.x[static_cast<size_t>(j)];
      const double w12 = w1 * T * g.w[static_cast<size_t>(j)];
      for (int k = 0; k < nodes; ++k) {
        const double t3 = T * g.x[static_cast<size_t>(k)];
        const double wgt = w12 * T * g.w[static_cast<size_t>(k)];
        const ZVec tau{t1, t2, t3};
        for (size_t q = 0; q < ng; ++q) {
          const CplxTriple w{Cplx{t1, eps * groups[q].ztilde[0]},
                             Cplx{t2, eps * groups[q].ztilde[1]},
                             Cplx{t3, eps * groups[q].ztilde[2]}};
          Cplx V{1.0, 0.0};
          for (int l = 0; l < n; ++l) {
            const Cplx r = block_radius(p, w, l);
            bg[q * static_cast<size_t>(n) + static_cast<size_t>(l)] = z_coth_z(r);
            V *= z2_over_sinh2(r);
          }
          Vg[q] = V;
          c0[q] = Cplx{eps * groups[q].zabs,
                       -(tau[0] * groups[q].z[0] + tau[1] * groups[q].z[1] +
                         tau[2] * groups[q].z[2])};
        }
        for (size_t pt = 0; pt < npts; ++pt) {
          const size_t q = static_cast<size_t>(gidx[pt]);
          Cplx f = c0[q];
          for (int l = 0; l < n; ++l)
            f += 0.25 * xl2[pt][static_cast<size_t>(l)] *
                 bg[q * static_cast<size_t>(n) + static_cast<size_t>(l)];
          const Cplx val = Vg[q] / pow_int(f, fpow);
          ai[pt].add(wgt * val);
          gi[pt].add(wgt * std::abs(val));
        }
      }
    }
  });

  const double pf = -std::ldexp(1.0, 2 * n) * std::pow(2.0 * kPi, 2 * n + 3) /
                    factorial(2 * n + 1);
  std::vector<KernelResult> out(npts);
  for (size_t pt = 0; pt < npts; ++pt) {
    KahanComplex total;
    KahanSum gtotal;
    for (int i = 0; i < nodes; ++i) {
      total.add(acc[static_cast<size_t>(i) * npts + pt].value());
      gtotal.add(gro[static_cast<size_t>(i) * npts + pt].value());
    }
    KernelResult r;
    r.value = pf * total.value().real();
    r.imag_part = pf * total.value().imag();
    r.gross = std::fabs(pf) * gtotal.value();
    r.tail_bound = std::fabs(pf) * tail_envelope(p, T, eps, norm(pts[pt].z), &xl2[pt], fpow);
    r.converged = r.tail_bound <= opts.tail_tol * std::max(std::fabs(r.value), 1e-280);
    out[pt] = r;
  }
  return out;
}

KernelResult green_function(const AnisotropyParams& p, const GroupPoint& q,
                            const GreenOptions& opts) {
  return green_function_batch(p, {q}, opts).front();
}

std::optional<CriticalPoint> action_critical_point(const AnisotropyParams& p, const XVec& x,
                                                   const ZVec& z, const ZVec& seed) {
  const std::vector<double> xl2 = block_norms2(p, x);
  ZVec th = seed;
  const double scale = 1.0 + norm(z);

  auto S_of = [&](const ZVec& theta, std::array<double, 3>& S,
                  std::vector<double>& r) -> bool {
    for (int l = 0; l < p.n(); ++l) {
      r[static_cast<size_t>(l)] = std::sqrt(p.theta_norm2(theta, l));
      if (xl2[static_cast<size_t>(l)] > 0.0 &&
          std::fabs(std::sin(r[static_cast<size_t>(l)])) < 1e-9 &&
          r[static_cast<size_t>(l)] > 1.0)
        return false;  // mu pole
    }
    for (int m = 0; m < 3; ++m) {
      S[static_cast<size_t>(m)] = 0.0;
      for (int l = 0; l < p.n(); ++l)
        S[static_cast<size_t>(m)] +=
            p.a2(m, l) * xl2[static_cast<size_t>(l)] * mu_over_t(r[static_cast<size_t>(l)]);
    }
    return true;
  };
  auto G_of = [&](const ZVec& theta, ZVec& G) -> bool {
    std::array<double, 3> S;
    std::vector<double> r(static_cast<size_t>(p.n()));
    if (!S_of(theta, S, r)) return false;
    for (int m = 0; m < 3; ++m) G[m] = z[m] - 0.25 * theta[m] * S[static_cast<size_t>(m)];
    return true;
  };

  ZVec G;
  if (!G_of(th, G)) return std::nullopt;
  double gn = std::max({std::fabs(G[0]), std::fabs(G[1]), std::fabs(G[2])});
  CriticalPoint cp;
  for (int it = 0; it < 80; ++it) {
    if (gn <= 1e-12 * scale) {
      std::vector<double> r(static_cast<size_t>(p.n()));
      cp.theta = th;
      cp.iterations = it;
      double f = th[0] * z[0] + th[1] * z[1] + th[2] * z[2];
      for (int l = 0; l < p.n(); ++l) {
        r[static_cast<size_t>(l)] = std::sqrt(p.theta_norm2(th, l));
        f += 0.25 * xl2[static_cast<size_t>(l)] * t_cot_t(r[static_cast<size_t>(l)]);
      }
      cp.action = f;
      return cp;
    }
    std::array<double, 3> S;
    std::vector<double> r(static_cast<size_t>(p.n()));
    if (!S_of(th, S, r)) return std::nullopt;
    std::array<std::array<double, 3>, 3> J{};
    for (int m = 0; m < 3; ++m) {
      for (int k = 0; k < 3; ++k) {
        double dS = 0.0;
        for (int l = 0; l < p.n(); ++l) {
          const double rl = r[static_cast<size_t>(l)];
          const double drdk = rl > 0.0 ? p.a2(k, l) * th[k] / rl : 0.0;
          dS += p.a2(m, l) * xl2[static_cast<size_t>(l)] * mu_over_t_prime(rl) * drdk;
        }
        J[static_cast<size_t>(m)][static_cast<size_t>(k)] = -0.25 * th[m] * dS;
      }
      J[static_cast<size_t>(m)][static_cast<size_t>(m)] -= 0.25 * S[static_cast<size_t>(m)];
    }
    std::array<double, 3> step{};
    if (!solve3(J, {G[0], G[1], G[2]}, step)) return std::nullopt;
    double lam = 1.0;
    bool moved = false;
    for (int half = 0; half < 30; ++half) {
      ZVec trial{th[0] - lam * step[0], th[1] - lam * step[1], th[2] - lam * step[2]};
      ZVec Gt;
      if (G_of(trial, Gt)) {
        const double gt = std::max({std::fabs(Gt[0]), std::fabs(Gt[1]), std::fabs(Gt[2])});
        if (gt < gn) {
          th = trial;
          G = Gt;
          gn = gt;
          moved = true;
          break;
        }
      }
      lam *= 0.5;
    }
    if (!moved) return std::nullopt;
  }
  return std::nullopt;
}

EstimateProbe estimate_probe(const AnisotropyParams& p, const XVec& x, const ZVec& z,
                             const ZVec& tau, double eps, double c1, double c2) {
  const ShiftedTau st = ShiftedTau::for_target(tau, eps, z);
  const Cplx gam = action_gamma(p, x, st.w());
  EstimateProbe pr;
  pr.re_gamma = gam.real();
  pr.im_gamma = gam.imag();
  pr.x_norm2 = norm2(x);
  const double slack = 1e-12 * std::max(1.0, pr.x_norm2);
  pr.im_ok = std::fabs(pr.im_gamma) <= c1 * eps * pr.x_norm2 + slack;
  pr.re_ok = pr.re_gamma >= c2 * pr.x_norm2 - slack;
  return pr;
}

std::pair<double, double> gamma_reduction_check(int n, double f) {
  if (!(f > 0.0)) throw std::runtime_error("gamma_reduction_check: need f > 0");
  // Substituting v = 1/u turns \int_0^inf u^{-2n-3} e^{-f/u} du into
  // \int_0^inf v^{2n+1} e^{-f v} dv; integrate the smooth form by panels.
  const double U = (60.0 + 20.0 * n) / f;
  const int panels = 200;
  const GaussLegendre g = gauss_legendre(10);
  KahanSum acc;
  for (int pnl = 0; pnl < panels; ++pnl) {
    const double a = U * pnl / panels, b = U * (pnl + 1) / panels;
    for (size_t i = 0; i < g.x.size(); ++i) {
      const double v = 0.5 * (a + b) + 0.5 * (b - a) * g.x[i];
      acc.add(0.5 * (b - a) * g.w[i] * std::pow(v, 2 * n + 1) * std::exp(-f * v));
    }
  }
  return {acc.value(), factorial(2 * n + 1) / std::pow(f, 2 * n + 2)};
}

}  // namespace qn
