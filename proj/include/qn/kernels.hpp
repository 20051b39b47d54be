#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "qn/params.hpp"
#include "qn/point.hpp"
#include "qn/quadrature.hpp"

namespace qn {

using Cplx = std::complex<double>;
using CplxTriple = std::array<Cplx, 3>;

// Integration variable on the shifted contour w = tau + i eps ztilde, with
// ztilde = z/|z| (or 0 when z = 0).  eps must stay below epsilon0(p) inside
// kernel integrands.
struct ShiftedTau {
  ZVec tau{0.0, 0.0, 0.0};
  double eps = 0.0;
  ZVec ztilde{0.0, 0.0, 0.0};

  CplxTriple w() const {
    return {Cplx{tau[0], eps * ztilde[0]}, Cplx{tau[1], eps * ztilde[1]},
            Cplx{tau[2], eps * ztilde[2]}};
  }
  static ShiftedTau real(const ZVec& tau) { return ShiftedTau{tau, 0.0, {0.0, 0.0, 0.0}}; }
  static ShiftedTau for_target(const ZVec& tau, double eps, const ZVec& z);
};

double epsilon0(const AnisotropyParams& p);  // pi / (4 max a^2)

// |w|_l: principal square root of sum_m a(m,l)^2 w_m^2.
Cplx block_radius(const AnisotropyParams& p, const CplxTriple& w, int l);

// gamma(x, w) = sum_l (|x_l|^2 / 4) |w|_l coth |w|_l.
Cplx action_gamma(const AnisotropyParams& p, const XVec& x, const CplxTriple& w);

// f(x, z, w) = gamma(x, w) - i sum_m w_m z_m.
Cplx complex_action(const AnisotropyParams& p, const XVec& x, const ZVec& z,
                    const CplxTriple& w);

// Analytic gradient df/dw_m = -i z_m - w_m sum_l a(m,l)^2 (|x_l|^2/4)
//                                       mu_hyp(|w|_l)/|w|_l.
CplxTriple action_gradient(const AnisotropyParams& p, const XVec& x, const ZVec& z,
                           const CplxTriple& w);

// V(w) = prod_l |w|_l^2 / sinh^2 |w|_l  and its analytic gradient.
Cplx volume_element(const AnisotropyParams& p, const CplxTriple& w);
CplxTriple volume_gradient(const AnisotropyParams& p, const CplxTriple& w);

// Delta_0 applied to f in x (the z-part of f is annihilated):
// 2 sum_l |w|_l coth |w|_l.
Cplx action_sublaplacian(const AnisotropyParams& p, const CplxTriple& w);

// | sum_m tau_m df/dtau_m + H - f | where H is the Hamiltonian evaluated at
// xi = grad_x f, theta = -i tau (equals sum_l (|x_l|^2/4) |tau|_l^2/sinh^2).
double hj_residual(const AnisotropyParams& p, const XVec& x, const ZVec& z, const ZVec& tau);

// | (2n - Delta_0 f) V - sum_m tau_m dV/dtau_m |.
double transport_residual(const AnisotropyParams& p, const ZVec& tau);

struct KernelResult {
  double value = 0.0;      // real part of the integral with its prefactor
  double imag_part = 0.0;  // diagnostic; ~0 after symmetric quadrature
  double tail_bound = 0.0; // envelope bound on the truncated mass
  double gross = 0.0;      // sum of |weight * integrand|: roundoff scale
  bool converged = true;   // tail_bound within tolerance
};

struct HeatOptions {
  QuadratureSpec quad{};
  double time = 1.0;
  double prefactor = 1.0;  // the normalization constant C (not fixed upstream)
  double tail_tol = 1e-6;  // relative to |value|
  int max_nodes = 512;     // cap for the oscillation-driven node bump
};

// P(y, w; t) = (C / t^{2n+3}) \int_{R^3} e^{-f(y,w,tau)/t} V(tau) dtau.
KernelResult heat_kernel(const AnisotropyParams& p, const GroupPoint& q,
                         const HeatOptions& opts);
// One quadrature sweep shared across points (points grouped by equal z).
std::vector<KernelResult> heat_kernel_batch(const AnisotropyParams& p,
                                            const std::vector<GroupPoint>& pts,
                                            const HeatOptions& opts);

struct GreenOptions {
  QuadratureSpec quad{};
  double epsilon = -1.0;  // contour shift; negative = AUTO (epsilon0/2)
  double tail_tol = 1e-6;
};

// G(x, z) = -(2^{2n} (2 pi)^{2n+3} / (2n+1)!) \int V(w) / f(x,z,w)^{2n+2} dtau
// on the contour w = tau + i eps z/|z|.
KernelResult green_function(const AnisotropyParams& p, const GroupPoint& q,
                            const GreenOptions& opts);
std::vector<KernelResult> green_function_batch(const AnisotropyParams& p,
                                               const std::vector<GroupPoint>& pts,
                                               const GreenOptions& opts);

// Critical point of f over purely imaginary tau = i theta: Newton on
// z_m = theta_m S_m(theta)/4.  action = f(x, z, i theta) (real there);
// equals (geodesic length)^2 / 4 at the connecting geodesic's theta.
struct CriticalPoint {
  ZVec theta{0.0, 0.0, 0.0};
  double action = 0.0;
  int iterations = 0;
};
std::optional<CriticalPoint> action_critical_point(const AnisotropyParams& p, const XVec& x,
                                                   const ZVec& z, const ZVec& seed);

// Bounds probe for gamma on the shifted contour:
// |Im gamma| <= c1 eps |x|^2  and  Re gamma >= c2 |x|^2.
struct EstimateProbe {
  double re_gamma = 0.0;
  double im_gamma = 0.0;
  double x_norm2 = 0.0;
  bool im_ok = true;
  bool re_ok = true;
};
EstimateProbe estimate_probe(const AnisotropyParams& p, const XVec& x, const ZVec& z,
                             const ZVec& tau, double eps, double c1, double c2);

// 1-D reduction behind the Green's function: for real f > 0,
// \int_0^inf u^{-2n-3} e^{-f/u} du = Gamma(2n+2) / f^{2n+2}.
// Returns {numeric integral, closed form}.
std::pair<double, double> gamma_reduction_check(int n, double f);

}  // namespace qn
