#pragma once

#include <vector>

#include "qn/algebra.hpp"
#include "qn/curve.hpp"
#include "qn/params.hpp"
#include "qn/point.hpp"

namespace qn {

// Initial data of a normal geodesic from the origin: horizontal velocity v0
// and constant vertical momentum theta.
struct GeodesicIVP {
  XVec v0;
  ZVec theta{0.0, 0.0, 0.0};
};

// H(x, xi, theta) = |xi|^2 + (1/4) sum_m theta_m^2 |x|_{A_m}^2 + (M(theta) x, xi).
double hamiltonian(const AnisotropyParams& p, const XVec& x, const XVec& xi,
                   const ZVec& theta);

// State along a bicharacteristic; theta is a constant of motion.
struct BicharState {
  XVec x;
  ZVec z;
  XVec xi;
};

// Fixed-step RK4 for the canonical system
//   xdot = 2 xi + M x,  zdot_m = theta_m |x|_{A_m}^2 / 2 + (M_m x, xi),
//   xidot = -Theta^2 x / 2 + M xi.
// Returns the projected curve sampled at every step (steps+1 points) and the
// final full state.
struct BicharResult {
  SampledCurve curve;
  BicharState final_state;
  double max_h_drift = 0.0;  // max |H(s) - H(0)| over the steps
};
BicharResult integrate_bicharacteristic(const AnisotropyParams& p, const BicharState& s0,
                                        const ZVec& theta, double s1, int steps);

// Momentum matching a velocity at a point: xi = xdot/2 - M(theta) x / 2.
XVec momentum_from_velocity(const AnisotropyParams& p, const XVec& x, const XVec& xdot,
                            const ZVec& theta);

// Blocks of exp(2 s M(theta)):  cos(2 s t_l) I + sinc-scaled M-block,
// t_l = |theta|_l.  Uses series near t_l = 0.
std::vector<Mat4> exp_2sM(const AnisotropyParams& p, const ZVec& theta, double s);

// Closed-form geodesic from the origin with initial data (v0, theta).
struct ExpMapPoint {
  GroupPoint q;
  XVec xdot;
};
ExpMapPoint exp_map(const AnisotropyParams& p, const GeodesicIVP& iv, double s);
SampledCurve sample_exp_map(const AnisotropyParams& p, const GeodesicIVP& iv, double s1,
                            int samples);

// Per-sample defect of the geodesic equation xddot = 2 M(theta) xdot.
std::vector<XVec> geodesic_residual(const AnisotropyParams& p, const SampledCurve& c,
                                    const ZVec& theta);
double max_geodesic_residual(const AnisotropyParams& p, const SampledCurve& c,
                             const ZVec& theta);

// Constant theta minimizing the least-squares defect of the geodesic
// equation along the curve.
ZVec fit_theta(const AnisotropyParams& p, const SampledCurve& c);

}  // namespace qn
