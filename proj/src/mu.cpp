#include "qn/mu.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qn {

namespace {

constexpr double kPi = std::numbers::pi;

// Bisect f on [a,b] assuming f(a) and f(b) have opposite signs.
template <class F>
double bisect(F f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    const double fm = f(m);
    if ((fa <= 0.0) == (fm <= 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double mu_critical(int branch) {
  if (branch < 1) throw std::runtime_error("mu_critical: branch must be >= 1");
  // tan t = t has its unique branch root in (m pi, (m + 1/2) pi).
  auto g = [](double t) { return std::sin(t) - t * std::cos(t); };
  const double lo = branch * kPi + 1e-12;
  const double hi = (branch + 0.5) * kPi - 1e-12;
  return bisect(g, lo, hi);
}

MuBranchInfo mu_branch_info(int branch) {
  if (branch < 0) throw std::runtime_error("mu_branch_info: branch must be >= 0");
  MuBranchInfo b;
  b.lo = branch * kPi;
  b.hi = (branch + 1) * kPi;
  if (branch == 0) {
    b.critical = 0.0;
    b.min_value = 0.0;
  } else {
    b.critical = mu_critical(branch);
    b.min_value = mu_fn(b.critical);
  }
  return b;
}

std::vector<double> mu_solve_affine(double level, double beta, int branch) {
  if (beta < 0.0) throw std::runtime_error("mu_solve_affine: beta must be >= 0");
  const MuBranchInfo info = mu_branch_info(branch);
  auto h = [&](double t) { return mu_fn(t) + beta * t; };

  std::vector<double> roots;

  // Walk a bracket endpoint toward a pole until h exceeds the level.
  auto pole_edge = [&](double pole, double inner) {
    double d = std::fabs(inner - pole) * 0.5;
    double t = pole + (inner > pole ? d : -d);
    for (int it = 0; it < 2000 && h(t) <= level; ++it) {
      d *= 0.5;
      t = pole + (inner > pole ? d : -d);
      if (d < 1e-300) break;
    }
    return t;
  };

  if (branch == 0) {
    // h is strictly increasing from 0 to +inf.
    if (level <= 0.0) return roots;
    double lo = 1e-12;
    if (h(lo) > level) lo = 1e-300;
    if (h(lo) > level) return roots;
    const double hi = pole_edge(info.hi, 0.5 * (info.lo + info.hi));
    if (h(hi) <= level) return roots;  // level unreachable within fp range
    roots.push_back(bisect([&](double t) { return h(t) - level; }, lo, hi));
    return roots;
  }

  // Higher branch: h is strictly convex with a unique minimizer (h' = mu' +
  // beta is increasing with a sign change across the branch).
  auto hp = [&](double t) { return mu_prime(t) + beta; };
  double lo = info.lo + 1e-9;
  double hi = info.hi - 1e-9;
  while (hp(lo) >= 0.0 && lo > info.lo + 1e-300) lo = info.lo + (lo - info.lo) * 0.5;
  while (hp(hi) <= 0.0 && info.hi - hi > 1e-300) hi = info.hi - (info.hi - hi) * 0.5;
  const double tmin = bisect(hp, lo, hi);
  const double hmin = h(tmin);
  if (hmin > level) return roots;
  const double eq_tol = 1e-12 * (1.0 + std::fabs(level));
  if (std::fabs(hmin - level) <= eq_tol) {
    roots.push_back(tmin);
    return roots;
  }
  const double left = pole_edge(info.lo, tmin);
  const double right = pole_edge(info.hi, tmin);
  if (h(left) > level)
    roots.push_back(bisect([&](double t) { return h(t) - level; }, left, tmin));
  if (h(right) > level)
    roots.push_back(bisect([&](double t) { return level - h(t); }, tmin, right));
  return roots;
}

}  // namespace qn
