#include "qn/geodesic.hpp"

#include <cmath>
#include <stdexcept>

#include "qn/special.hpp"

namespace qn {

double hamiltonian(const AnisotropyParams& p, const XVec& x, const XVec& xi,
                   const ZVec& theta) {
  double H = dot(xi, xi);
  for (int m = 0; m < 3; ++m)
    H += 0.25 * theta[m] * theta[m] * weighted_norm2(p, m, x);
  H += dot(apply_theta_matrix(p, theta, x), xi);
  return H;
}

namespace {

struct Deriv {
  XVec dx;
  ZVec dz;
  XVec dxi;
};

Deriv rhs(const AnisotropyParams& p, const BicharState& s, const ZVec& theta) {
  Deriv d;
  const XVec Mx = apply_theta_matrix(p, theta, s.x);
  const XVec Mxi = apply_theta_matrix(p, theta, s.xi);
  d.dx = 2.0 * s.xi + Mx;
  for (int m = 0; m < 3; ++m)
    d.dz[m] = 0.5 * theta[m] * weighted_norm2(p, m, s.x) +
              dot(apply_generator(p, m, s.x), s.xi);
  // Theta^2 acts per block as |theta|_l^2 I.
  d.dxi.resize(s.x.size());
  for (int l = 0; l < p.n(); ++l)
    set_block(d.dxi, l, (-0.5 * p.theta_norm2(theta, l)) * block(s.x, l));
  d.dxi = d.dxi + Mxi;
  return d;
}

BicharState step_state(const BicharState& s, const Deriv& d, double h) {
  BicharState r;
  r.x = s.x + h * d.dx;
  r.z = s.z + h * d.dz;
  r.xi = s.xi + h * d.dxi;
  return r;
}

}  // namespace

BicharResult integrate_bicharacteristic(const AnisotropyParams& p, const BicharState& s0,
                                        const ZVec& theta, double s1, int steps) {
  if (steps < 1) throw std::runtime_error("integrate_bicharacteristic: steps >= 1");
  BicharResult out;
  out.curve.s = uniform_grid(0.0, s1, steps + 1);
  out.curve.pts.reserve(static_cast<size_t>(steps) + 1);
  const double h = s1 / steps;

  BicharState st = s0;
  const double H0 = hamiltonian(p, st.x, st.xi, theta);
  out.curve.pts.push_back(GroupPoint{st.x, st.z});
  for (int i = 0; i < steps; ++i) {
    const Deriv k1 = rhs(p, st, theta);
    const Deriv k2 = rhs(p, step_state(st, k1, 0.5 * h), theta);
    const Deriv k3 = rhs(p, step_state(st, k2, 0.5 * h), theta);
    const Deriv k4 = rhs(p, step_state(st, k3, h), theta);
    BicharState nx;
    nx.x.resize(st.x.size());
    nx.xi.resize(st.xi.size());
    for (size_t j = 0; j < st.x.size(); ++j) {
      nx.x[j] = st.x[j] + h / 6.0 * (k1.dx[j] + 2.0 * k2.dx[j] + 2.0 * k3.dx[j] + k4.dx[j]);
      nx.xi[j] =
          st.xi[j] + h / 6.0 * (k1.dxi[j] + 2.0 * k2.dxi[j] + 2.0 * k3.dxi[j] + k4.dxi[j]);
    }
    for (int m = 0; m < 3; ++m)
      nx.z[m] = st.z[m] + h / 6.0 * (k1.dz[m] + 2.0 * k2.dz[m] + 2.0 * k3.dz[m] + k4.dz[m]);
    st = std::move(nx);
    out.curve.pts.push_back(GroupPoint{st.x, st.z});
    out.max_h_drift =
        std::max(out.max_h_drift, std::fabs(hamiltonian(p, st.x, st.xi, theta) - H0));
  }
  out.final_state = std::move(st);
  return out;
}

XVec momentum_from_velocity(const AnisotropyParams& p, const XVec& x, const XVec& xdot,
                            const ZVec& theta) {
  return 0.5 * (xdot - apply_theta_matrix(p, theta, x));
}

std::vector<Mat4> exp_2sM(const AnisotropyParams& p, const ZVec& theta, double s) {
  std::vector<Mat4> out;
  out.reserve(static_cast<size_t>(p.n()));
  for (int l = 0; l < p.n(); ++l) {
    const double t = std::sqrt(p.theta_norm2(theta, l));
    // cos(2 s t) I + s * sinc(2 s t) * 2 M_l; M_l^2 = -t^2 I.
    const Mat4 Ml = theta_matrix_block(p, theta, l);
    out.push_back(std::cos(2.0 * s * t) * Mat4::identity() + (2.0 * s * sinc(2.0 * s * t)) * Ml);
  }
  return out;
}

ExpMapPoint exp_map(const AnisotropyParams& p, const GeodesicIVP& iv, double s) {
  ExpMapPoint r;
  r.q = GroupPoint::origin(p.n());
  r.xdot.assign(iv.v0.size(), 0.0);
  for (int l = 0; l < p.n(); ++l) {
    const double t = std::sqrt(p.theta_norm2(iv.theta, l));
    const Mat4 Ml = theta_matrix_block(p, iv.theta, l);
    const Vec4 v = block(iv.v0, l);
    const Vec4 Mv = Ml * v;
    const double u = 2.0 * s * t;
    // x_l = sin^2(s t)/t^2 M_l v + (s sinc(2 s t)) v
    const double sn = s * sinc(s * t);
    set_block(r.q.x, l, (sn * sn) * Mv + (s * sinc(u)) * v);
    // xdot_l = cos(2 s t) v + 2 s sinc(2 s t) M_l v
    set_block(r.xdot, l, std::cos(u) * v + (2.0 * s * sinc(u)) * Mv);
  }
  // z_m(s) = sum_l theta_m a(m,l)^2 |v_l|^2 / (4 t_l^2) * (s - sin(2 s t_l)/(2 t_l))
  // with the last factor written as 4 s^3 (u - sin u)/u^3 at u = 2 s t_l.
  for (int m = 0; m < 3; ++m) {
    double acc = 0.0;
    for (int l = 0; l < p.n(); ++l) {
      const double t = std::sqrt(p.theta_norm2(iv.theta, l));
      const double u = 2.0 * s * t;
      const double psi = 4.0 * s * s * s * u_minus_sin_over_u3(u);
      acc += p.a2(m, l) * norm2(block(iv.v0, l)) * 0.25 * psi;
    }
    r.q.z[m] = iv.theta[m] * acc;
  }
  return r;
}

SampledCurve sample_exp_map(const AnisotropyParams& p, const GeodesicIVP& iv, double s1,
                            int samples) {
  SampledCurve c;
  c.s = uniform_grid(0.0, s1, samples);
  c.pts.reserve(c.s.size());
  for (double s : c.s) c.pts.push_back(exp_map(p, iv, s).q);
  return c;
}

std::vector<XVec> geodesic_residual(const AnisotropyParams& p, const SampledCurve& c,
                                    const ZVec& theta) {
  const auto xd = x_velocity(c);
  const auto xdd = x_acceleration(c);
  std::vector<XVec> r(xd.size());
  for (size_t i = 0; i < xd.size(); ++i)
    r[i] = xdd[i] - 2.0 * apply_theta_matrix(p, theta, xd[i]);
  return r;
}

double max_geodesic_residual(const AnisotropyParams& p, const SampledCurve& c,
                             const ZVec& theta) {
  double mx = 0.0;
  for (const auto& r : geodesic_residual(p, c, theta))
    for (double v : r) mx = std::max(mx, std::fabs(v));
  return mx;
}

ZVec fit_theta(const AnisotropyParams& p, const SampledCurve& c) {
  // Minimize sum_i |xdd_i - 2 sum_m theta_m M_m xd_i|^2: 3x3 normal equations.
  const auto xd = x_velocity(c);
  const auto xdd = x_acceleration(c);
  double A[3][3] = {};
  double b[3] = {};
  for (size_t i = 0; i < xd.size(); ++i) {
    XVec g[3];
    for (int m = 0; m < 3; ++m) g[m] = 2.0 * apply_generator(p, m, xd[i]);
    for (int m = 0; m < 3; ++m) {
      b[m] += dot(g[m], xdd[i]);
      for (int mm = m; mm < 3; ++mm) A[m][mm] += dot(g[m], g[mm]);
    }
  }
  for (int m = 0; m < 3; ++m)
    for (int mm = 0; mm < m; ++mm) A[m][mm] = A[mm][m];
  // Gaussian elimination with partial pivoting; singular directions get 0.
  double M[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) M[i][j] = A[i][j];
    M[i][3] = b[i];
  }
  for (int cpos = 0; cpos < 3; ++cpos) {
    int piv = cpos;
    for (int rpos = cpos + 1; rpos < 3; ++rpos)
      if (std::fabs(M[rpos][cpos]) > std::fabs(M[piv][cpos])) piv = rpos;
    std::swap(M[cpos], M[piv]);
    if (std::fabs(M[cpos][cpos]) < 1e-14) continue;
    for (int rpos = cpos + 1; rpos < 3; ++rpos) {
      const double f = M[rpos][cpos] / M[cpos][cpos];
      for (int j = cpos; j < 4; ++j) M[rpos][j] -= f * M[cpos][j];
    }
  }
  ZVec theta{0.0, 0.0, 0.0};
  for (int i = 2; i >= 0; --i) {
    if (std::fabs(M[i][i]) < 1e-14) continue;
    double v = M[i][3];
    for (int j = i + 1; j < 3; ++j) v -= M[i][j] * theta[static_cast<size_t>(j)];
    theta[static_cast<size_t>(i)] = v / M[i][i];
  }
  return theta;
}

}  // namespace qn
