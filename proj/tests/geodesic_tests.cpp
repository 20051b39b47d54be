#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qn/geodesic.hpp"
#include "support.hpp"

using namespace qn;
using testsupport::Rng;

namespace {

Mat4 exp_series(const Mat4& a, int terms) {
  Mat4 sum = Mat4::identity();
  Mat4 t = Mat4::identity();
  for (int k = 1; k <= terms; ++k) {
    t = (1.0 / k) * (t * a);
    sum = sum + t;
  }
  return sum;
}

}  // namespace

TEST_CASE("block exponential against the raw series") {
  Rng rng(31);
  for (int rep = 0; rep < 60; ++rep) {
    const int n = rng.pick(1, 3);
    AnisotropyParams p = rng.params(n);
    ZVec th = rng.zvec(1.5);
    double s = rng.uniform(0.1, 1.0);
    double arg = 0.0;
    for (int l = 0; l < n; ++l)
      arg = std::max(arg, 2.0 * s * std::sqrt(p.theta_norm2(th, l)));
    if (arg > 10.0) s *= 10.0 / arg;

    const auto blocks = exp_2sM(p, th, s);
    for (int l = 0; l < n; ++l) {
      const Mat4 a = (2.0 * s) * theta_matrix_block(p, th, l);
      CHECK(max_abs_diff(blocks[l], exp_series(a, 60)) < 1e-10);
      CHECK(max_abs_diff(transpose(blocks[l]) * blocks[l], Mat4::identity()) < 1e-12);
    }
  }
  // tiny and zero momenta hit the series branch of the implementation
  AnisotropyParams p = AnisotropyParams::isotropic(1);
  const auto tiny = exp_2sM(p, {1e-9, 0.0, 0.0}, 1.0);
  CHECK(max_abs_diff(tiny[0], exp_series(2.0 * theta_matrix_block(p, {1e-9, 0, 0}, 0), 8)) <
        1e-15);
  const auto zero = exp_2sM(p, {0.0, 0.0, 0.0}, 1.0);
  CHECK(max_abs_diff(zero[0], Mat4::identity()) == 0.0);
}

TEST_CASE("zero momentum flows are straight lines") {
  Rng rng(32);
  AnisotropyParams p = rng.params(2);
  const XVec v0 = rng.xvec(2, 1.5);
  for (double s : {0.0, 0.25, 1.0}) {
    const ExpMapPoint e = exp_map(p, {v0, {0, 0, 0}}, s);
    for (int i = 0; i < 8; ++i) {
      CHECK(e.q.x[i] == doctest::Approx(s * v0[i]).epsilon(1e-15));
      CHECK(e.xdot[i] == v0[i]);
    }
    CHECK(norm(e.q.z) == 0.0);
  }
}

TEST_CASE("closed form matches the canonical integrator") {
  Rng rng(33);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = rng.pick(1, 3);
    AnisotropyParams p = rng.params(n);
    const XVec v0 = rng.xvec(n, 1.2);
    const ZVec th = rng.zvec(1.0);

    BicharState s0{XVec(4 * n, 0.0), {0, 0, 0},
                   momentum_from_velocity(p, XVec(4 * n, 0.0), v0, th)};
    const BicharResult r = integrate_bicharacteristic(p, s0, th, 1.0, 4000);
    CHECK(r.max_h_drift < 1e-10 * (1.0 + std::fabs(hamiltonian(p, s0.x, s0.xi, th))));

    const ExpMapPoint e = exp_map(p, {v0, th}, 1.0);
    CHECK(max_abs_diff(e.q, GroupPoint{r.final_state.x, r.final_state.z}) < 1e-8);
    // velocity agreement at the endpoint: xdot = 2 xi + M x
    XVec vend = 2.0 * r.final_state.xi +
                apply_theta_matrix(p, th, r.final_state.x);
    for (int i = 0; i < 4 * n; ++i) CHECK(e.xdot[i] == doctest::Approx(vend[i]).epsilon(1e-8));
  }
}

TEST_CASE("flow residuals and momentum recovery") {
  Rng rng(34);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = rng.pick(1, 2);
    AnisotropyParams p = rng.params(n, 0.6, 1.4);
    XVec v0 = rng.xvec(n, 1.0);
    if (norm(v0) > 1.2) v0 = (1.2 / norm(v0)) * v0;
    ZVec th = rng.zvec(1.0);
    double arg = 0.0;
    for (int l = 0; l < n; ++l) arg = std::max(arg, std::sqrt(p.theta_norm2(th, l)));
    if (arg > 1e-12) th = (1.0 / arg) * th;

    const SampledCurve c = sample_exp_map(p, {v0, th}, 1.0, 1001);
    CHECK(max_horizontality_residual(p, c) < 5e-6);
    CHECK(max_geodesic_residual(p, c, th) < 5e-6);
    CHECK(norm(fit_theta(p, c) - th) < 1e-5);
  }
  // the fitted momentum on a non-flow curve leaves a visible defect
  AnisotropyParams p = rng.params(1);
  const SampledCurve bad = skew_parabola_curve(p, 1.0, 1001);
  CHECK(max_geodesic_residual(p, bad, fit_theta(p, bad)) > 0.1);
}

TEST_CASE("hamiltonian pairs velocity and momentum consistently") {
  Rng rng(35);
  AnisotropyParams p = rng.params(2);
  const XVec x = rng.xvec(2, 1.0);
  const XVec xdot = rng.xvec(2, 1.0);
  const ZVec th = rng.zvec(1.0);
  const XVec xi = momentum_from_velocity(p, x, xdot, th);
  // on the constraint submanifold H equals |xdot|^2/4... H(x, xi) with
  // xi = xdot/2 - Mx/2 gives |xdot|^2/4 after the cross terms cancel
  CHECK(hamiltonian(p, x, xi, th) == doctest::Approx(0.25 * norm2(xdot)).epsilon(1e-12));
}
