#pragma once

#include <cmath>
#include <complex>

// Cancellation-free scalar kernels shared by the geodesic formulas, the
// connection equations and the integral kernels.  Each x_over_u3 helper
// switches to its Taylor series when the direct formula would subtract
// nearly equal terms.

namespace qn {

using cxd = std::complex<double>;

inline double sinc(double u) {
  if (u == 0.0) return 1.0;
  return std::sin(u) / u;
}

// (u - sin u)/u^3 = 1/6 - u^2/120 + ...
inline double u_minus_sin_over_u3(double u) {
  const double u2 = u * u;
  if (u2 > 1.0) return (u - std::sin(u)) / (u2 * u);
  double term = 1.0 / 6.0, acc = term;
  for (int k = 1; k < 16; ++k) {
    term *= -u2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    acc += term;
    if (std::fabs(term) < 1e-18) break;
  }
  return acc;
}

// (sinh u - u)/u^3 = 1/6 + u^2/120 + ...
inline double sinh_minus_u_over_u3(double u) {
  const double u2 = u * u;
  if (u2 > 1.0) return (std::sinh(u) - u) / (u2 * u);
  double term = 1.0 / 6.0, acc = term;
  for (int k = 1; k < 16; ++k) {
    term *= u2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    acc += term;
    if (term < 1e-18) break;
  }
  return acc;
}

// (sin u - u cos u)/u^3 = 1/3 - u^2/30 + ...
inline double sin_minus_ucos_over_u3(double u) {
  const double u2 = u * u;
  if (u2 > 1.0) return (std::sin(u) - u * std::cos(u)) / (u2 * u);
  double term = 1.0 / 3.0, acc = term;
  for (int k = 1; k < 16; ++k) {
    term *= -u2 * (k + 1.0) / (k * (2.0 * k + 2.0) * (2.0 * k + 3.0));
    acc += term;
    if (std::fabs(term) < 1e-18) break;
  }
  return acc;
}

// t cot t, stable at 0.
inline double t_cot_t(double t) {
  if (std::fabs(t) < 1e-8) return 1.0 - t * t / 3.0;
  return t * std::cos(t) / std::sin(t);
}

// sinh(z)/z and cosh(z) by their (all-positive-coefficient) series; used
// below so the small-|z| branches have no subtractive cancellation at all.
template <typename T>
inline T sinh_over_z_series(T z2) {
  T term = T(1.0), acc = T(1.0);
  for (int k = 1; k < 12; ++k) {
    term *= z2 / ((2.0 * k) * (2.0 * k + 1.0));
    acc += term;
  }
  return acc;
}
template <typename T>
inline T cosh_series(T z2) {
  T term = T(1.0), acc = T(1.0);
  for (int k = 1; k < 12; ++k) {
    term *= z2 / ((2.0 * k - 1.0) * (2.0 * k));
    acc += term;
  }
  return acc;
}

// z coth z for complex z, stable at 0; exp-based away from 0.
inline cxd z_coth_z(cxd z) {
  if (std::norm(z) <= 1.0) return cosh_series(z * z) / sinh_over_z_series(z * z);
  if (z.real() < 0.0) z = -z;  // coth is odd, z coth z even
  const cxd e = std::exp(-2.0 * z);
  return z * (1.0 + e) / (1.0 - e);
}

// z^2 / sinh^2 z, stable at 0.
inline cxd z2_over_sinh2(cxd z) {
  if (std::norm(z) <= 1.0) {
    const cxd s = sinh_over_z_series(z * z);
    return 1.0 / (s * s);
  }
  if (z.real() < 0.0) z = -z;
  const cxd em = std::exp(-z);
  const cxd s = (1.0 - em * em) / (2.0 * em);  // sinh z = (e^z - e^-z)/2
  const cxd r = z / s;
  return r * r;
}

// Real fast paths for the quadrature hot loops (t >= 0).
inline double x_coth_x(double t) {
  if (t * t <= 1.0) return cosh_series(t * t) / sinh_over_z_series(t * t);
  const double e = std::exp(-2.0 * t);
  return t * (1.0 + e) / (1.0 - e);
}
inline double x2_over_sinh2(double t) {
  if (t * t <= 1.0) {
    const double s = sinh_over_z_series(t * t);
    return 1.0 / (s * s);
  }
  const double em = std::exp(-t);
  const double s = (1.0 - em * em) / (2.0 * em);
  return (t / s) * (t / s);
}

// mu(t) = t/sin^2 t - cot t = (t - sin t cos t)/sin^2 t; poles at pi Z \ {0}.
inline double mu_fn(double t) {
  const double s = std::sin(t);
  return 4.0 * t * t * t * u_minus_sin_over_u3(2.0 * t) / (s * s);
}

// mu'(t) = 2 (sin t - t cos t)/sin^3 t  (positive iff tan t > t side).
inline double mu_prime(double t) {
  const double s = std::sin(t);
  return 2.0 * t * t * t * sin_minus_ucos_over_u3(t) / (s * s * s);
}

// Hyperbolic companion: t/sinh^2 t - coth t = -2t/3 + ...; equals -i mu(i t).
inline double mu_hyp(double t) {
  const double s = std::sinh(t);
  return -4.0 * t * t * t * sinh_minus_u_over_u3(2.0 * t) / (s * s);
}

// mu(t)/t and its derivative, smooth through t = 0 (both even/odd-safe);
// they feed the Jacobians of the connection systems.
inline double mu_over_t(double t) {
  if (std::fabs(t) < 0.05) {
    const double t2 = t * t;
    return 2.0 / 3.0 + t2 * (4.0 / 45.0 + t2 * (4.0 / 315.0 + t2 * (8.0 / 4725.0)));
  }
  return mu_fn(t) / t;
}
inline double mu_over_t_prime(double t) {
  if (std::fabs(t) < 0.05) {
    const double t2 = t * t;
    return t * (8.0 / 45.0 + t2 * (16.0 / 315.0 + t2 * (16.0 / 1575.0)));
  }
  return (mu_prime(t) * t - mu_fn(t)) / (t * t);
}

// (sinh u - u)/u^3 for complex u, series inside the unit disc.
inline cxd sinh_minus_u_over_u3_c(cxd u) {
  const cxd u2 = u * u;
  if (std::norm(u) <= 1.0) {
    cxd term = cxd(1.0 / 6.0), acc = term;
    for (int k = 1; k < 12; ++k) {
      term *= u2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
      acc += term;
    }
    return acc;
  }
  return (std::sinh(u) - u) / (u2 * u);
}

// mu_hyp(z)/z = (z/sinh^2 z - coth z)/z, smooth through 0 (-> -2/3); this is
// the scalar behind d/dw_m of |w|_l coth|w|_l on the shifted contour.
inline cxd mu_hyp_over_z(cxd z) {
  return -4.0 * sinh_minus_u_over_u3_c(2.0 * z) * z2_over_sinh2(z);
}
inline cxd mu_hyp_c(cxd z) { return z * mu_hyp_over_z(z); }

}  // namespace qn
