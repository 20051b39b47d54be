#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "qn/mu.hpp"
#include "qn/special.hpp"
#include "support.hpp"

using namespace qn;
using testsupport::Rng;

namespace {

constexpr double kPi = std::numbers::pi;

// Long-double evaluations of the defining formulas, accurate wherever the
// cancellation eats fewer than ~5 of the 18 long-double digits.
double mu_direct(double t) {
  const long double lt = t;
  const long double s = sinl(lt);
  return static_cast<double>((lt - sinl(lt) * cosl(lt)) / (s * s));
}
double mu_prime_direct(double t) {
  const long double lt = t;
  const long double s = sinl(lt);
  return static_cast<double>(2.0L * (sinl(lt) - lt * cosl(lt)) / (s * s * s));
}
double mu_hyp_direct(double t) {
  const long double lt = t;
  const long double s = sinhl(lt);
  return static_cast<double>(lt / (s * s) - coshl(lt) / s);
}

double rel(double got, double want) {
  return std::fabs(got - want) / (1.0 + std::fabs(want));
}

// Sign-change count of mu(t) + beta t - level over a dense grid strictly
// inside the branch interval.
int scan_roots(double level, double beta, int branch, int npts = 200001) {
  const MuBranchInfo info = mu_branch_info(branch);
  const double a = info.lo + 1e-6, b = info.hi - 1e-6;
  int count = 0;
  double prev = mu_fn(a) + beta * a - level;
  for (int i = 1; i < npts; ++i) {
    const double t = a + (b - a) * i / (npts - 1.0);
    const double v = mu_fn(t) + beta * t - level;
    if ((prev <= 0.0) != (v <= 0.0)) ++count;
    prev = v;
  }
  return count;
}

double scan_min(double beta, int branch, int npts = 200001) {
  const MuBranchInfo info = mu_branch_info(branch);
  const double a = info.lo + 1e-6, b = info.hi - 1e-6;
  double best = mu_fn(a) + beta * a;
  for (int i = 1; i < npts; ++i) {
    const double t = a + (b - a) * i / (npts - 1.0);
    best = std::min(best, mu_fn(t) + beta * t);
  }
  return best;
}

}  // namespace

TEST_CASE("complex coth against the sinh/sin decomposition") {
  Rng rng(41);
  int tested = 0;
  while (tested < 400) {
    const double al = rng.uniform(-3.0, 3.0);
    const double be = rng.uniform(-3.0, 3.0);
    const double denom = std::sinh(al) * std::sinh(al) + std::sin(be) * std::sin(be);
    if (denom < 1e-2) continue;  // too close to a pole i pi k
    ++tested;
    const cxd z(al, be);
    const cxd want =
        z * cxd(std::sinh(2.0 * al), -std::sin(2.0 * be)) / (2.0 * denom);
    const cxd got = z_coth_z(z);
    CHECK(std::abs(got - want) < 1e-13 * (1.0 + std::abs(want)));
    CHECK(std::abs(z_coth_z(-z) - got) < 1e-14 * (1.0 + std::abs(got)));
  }
  // purely imaginary argument: (i b) coth(i b) = b cot b, real
  for (double b : {0.3, 1.2, 2.5}) {
    const cxd v = z_coth_z(cxd(0.0, b));
    CHECK(v.real() == doctest::Approx(b * std::cos(b) / std::sin(b)).epsilon(1e-13));
    CHECK(std::fabs(v.imag()) < 1e-14);
  }
}

TEST_CASE("real fast paths agree with the complex kernels") {
  for (double t : {0.0, 1e-9, 0.3, 0.999, 1.0, 1.001, 2.0, 10.0, 40.0}) {
    const cxd zc = z_coth_z(cxd(t, 0.0));
    const cxd zs = z2_over_sinh2(cxd(t, 0.0));
    CHECK(rel(x_coth_x(t), zc.real()) < 1e-14);
    CHECK(rel(x2_over_sinh2(t), zs.real()) < 1e-14);
    CHECK(zc.imag() == 0.0);
    CHECK(zs.imag() == 0.0);
    if (t > 1.0) {
      const long double s = sinhl((long double)t);
      CHECK(rel(x_coth_x(t), (double)((long double)t * coshl((long double)t) / s)) < 1e-14);
      CHECK(rel(x2_over_sinh2(t), (double)((long double)t * (long double)t / (s * s))) <
            1e-14);
    }
  }
  CHECK(x_coth_x(0.0) == 1.0);
  CHECK(x2_over_sinh2(0.0) == 1.0);
  CHECK(x_coth_x(50.0) == doctest::Approx(50.0).epsilon(1e-15));
  CHECK(x2_over_sinh2(60.0) < 1e-40);
}

TEST_CASE("mu and its derivative match the defining formulas") {
  // windows on branch 0 and the first two higher branches, away from poles
  std::vector<double> ts;
  for (double t = 0.02; t < kPi - 0.02; t += 0.37) ts.push_back(t);
  for (double t = kPi + 0.05; t < 2.0 * kPi - 0.05; t += 0.41) ts.push_back(t);
  for (double t = 2.0 * kPi + 0.05; t < 3.0 * kPi - 0.05; t += 0.43) ts.push_back(t);
  for (double t : ts) {
    CHECK(rel(mu_fn(t), mu_direct(t)) < 2e-13);
    CHECK(rel(mu_prime(t), mu_prime_direct(t)) < 2e-12);
    CHECK(mu_fn(-t) == doctest::Approx(-mu_fn(t)).epsilon(1e-15));
  }
  // leading behaviour at 0: mu = 2t/3 + O(t^3)
  CHECK(std::fabs(mu_fn(1e-9) - 2.0e-9 / 3.0) < 1e-24);
  // derivative consistency by central differences
  for (double t : {0.4, 1.3, 4.0, 7.4}) {
    const double h = 1e-6;
    const double fd = (mu_fn(t + h) - mu_fn(t - h)) / (2.0 * h);
    CHECK(rel(mu_prime(t), fd) < 1e-8);
  }
}

TEST_CASE("mu over t is smooth through zero") {
  CHECK(mu_over_t(0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-16));
  CHECK(mu_over_t_prime(0.0) == 0.0);
  // continuity across the series window boundary
  for (double t : {0.049, 0.051, -0.049, -0.051}) {
    CHECK(rel(mu_over_t(t), mu_direct(t) / t) < 1e-13);
  }
  for (double t : {0.01, 0.04, 0.08, 0.9, 2.0}) {
    const double h = 1e-5;
    const double fd = (mu_over_t(t + h) - mu_over_t(t - h)) / (2.0 * h);
    CHECK(rel(mu_over_t_prime(t), fd) < 1e-8);
    CHECK(mu_over_t(-t) == doctest::Approx(mu_over_t(t)).epsilon(1e-15));
  }
}

TEST_CASE("hyperbolic companion") {
  for (double t : {0.02, 0.3, 0.999, 1.001, 3.0, 8.0}) {
    CHECK(rel(mu_hyp(t), mu_hyp_direct(t)) < 2e-13);
    const cxd c = mu_hyp_c(cxd(t, 0.0));
    CHECK(rel(c.real(), mu_hyp(t)) < 1e-14);
    CHECK(c.imag() == 0.0);
  }
  CHECK(std::fabs(mu_hyp(1e-9) + 2.0e-9 / 3.0) < 1e-24);
  CHECK(mu_hyp(50.0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(mu_hyp_over_z(cxd(0.0, 0.0)).real() == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
  // continuation to the imaginary axis: mu_hyp_c(i t) = -i mu(t)
  for (double t : {0.4, 1.1, 2.8}) {
    const cxd v = mu_hyp_c(cxd(0.0, t));
    CHECK(std::fabs(v.real()) < 1e-13 * (1.0 + std::fabs(mu_fn(t))));
    CHECK(v.imag() == doctest::Approx(-mu_fn(t)).epsilon(1e-12));
  }
}

TEST_CASE("branch geometry and the tangent identity") {
  const MuBranchInfo b0 = mu_branch_info(0);
  CHECK(b0.lo == 0.0);
  CHECK(b0.hi == doctest::Approx(kPi).epsilon(1e-16));
  CHECK(b0.critical == 0.0);
  CHECK(b0.min_value == 0.0);

  // known first roots of tan t = t
  CHECK(mu_critical(1) == doctest::Approx(4.493409457909064).epsilon(1e-13));
  CHECK(mu_critical(2) == doctest::Approx(7.725251836937707).epsilon(1e-13));

  for (int m = 1; m <= 4; ++m) {
    const MuBranchInfo b = mu_branch_info(m);
    const double c = b.critical;
    CHECK(b.lo == doctest::Approx(m * kPi).epsilon(1e-16));
    CHECK(b.hi == doctest::Approx((m + 1) * kPi).epsilon(1e-16));
    CHECK(c > m * kPi);
    CHECK(c < (m + 0.5) * kPi);
    CHECK(std::fabs(std::sin(c) - c * std::cos(c)) < 1e-12 * c);
    // at a tangent point mu(c) = c
    CHECK(b.min_value == doctest::Approx(c).epsilon(1e-12));
    CHECK(std::fabs(mu_prime(c)) < 1e-10);
  }
}

TEST_CASE("affine root solver against dense scans") {
  struct Probe {
    int branch;
    double beta;
    double off;  // level = branch minimum + off
  };
  const std::vector<Probe> probes = {
      {0, 0.0, 0.7},  {0, 0.0, 50.0}, {0, 0.5, 2.0},  {0, 2.0, 1e6},
      {1, 0.0, -0.5}, {1, 0.0, 0.7},  {1, 0.0, 50.0}, {1, 0.3, 0.7},
      {1, 2.0, 5.0},  {2, 0.0, 0.7},  {2, 0.7, 5.0},  {3, 0.0, 0.7},
      {3, 0.5, 50.0}};
  for (const Probe& pr : probes) {
    const double base = pr.branch == 0 ? 0.0 : scan_min(pr.beta, pr.branch);
    const double level = base + pr.off;
    const auto roots = mu_solve_affine(level, pr.beta, pr.branch);
    CHECK(static_cast<int>(roots.size()) == scan_roots(level, pr.beta, pr.branch));
    const MuBranchInfo info = mu_branch_info(pr.branch);
    for (size_t i = 0; i < roots.size(); ++i) {
      CHECK(roots[i] > info.lo);
      CHECK(roots[i] < info.hi);
      if (i > 0) CHECK(roots[i] > roots[i - 1]);
      CHECK(std::fabs(mu_fn(roots[i]) + pr.beta * roots[i] - level) <
            1e-9 * (1.0 + std::fabs(level)));
    }
    if (pr.branch == 0) CHECK(roots.size() == 1);
    if (pr.branch >= 1 && pr.off < 0.0) CHECK(roots.empty());
    if (pr.branch >= 1 && pr.off > 0.1) CHECK(roots.size() == 2);
  }

  // level below zero never reaches branch 0
  CHECK(mu_solve(0.0, 0).empty());
  CHECK(mu_solve(-3.0, 0).empty());
  // exact tangency: the level of the branch minimum yields the single
  // critical root
  for (int m : {1, 2}) {
    const double c = mu_critical(m);
    const auto roots = mu_solve(mu_fn(c), m);
    REQUIRE(roots.size() == 1);
    CHECK(roots[0] == doctest::Approx(c).epsilon(1e-9));
  }
  // mu_solve is the beta = 0 slice
  const auto a = mu_solve(5.0, 1);
  const auto b = mu_solve_affine(5.0, 0.0, 1);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  CHECK_THROWS_AS(mu_solve_affine(1.0, -0.1, 0), std::runtime_error);
  CHECK_THROWS_AS(mu_critical(0), std::runtime_error);
  CHECK_THROWS_AS(mu_branch_info(-1), std::runtime_error);
}
