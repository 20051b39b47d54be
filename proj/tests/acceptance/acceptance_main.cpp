// Acceptance gate for the library: thirteen numbered checks, one line of
// output each, nonzero exit if any fails.  Every check carries an oracle that
// does not reuse the code path under test: a truncated matrix series, a
// fixed-step integrator of the canonical equations, dense sign scans for root
// counts, Richardson-extrapolated polygonal lengths, and grouped finite
// differences for the kernel PDEs.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qn/algebra.hpp"
#include "qn/connect.hpp"
#include "qn/curve.hpp"
#include "qn/geodesic.hpp"
#include "qn/kernels.hpp"
#include "qn/mu.hpp"
#include "qn/params.hpp"
#include "qn/point.hpp"
#include "support.hpp"

using namespace qn;
using testsupport::Rng;
using testsupport::polygon_length;

namespace {

constexpr double kPi = std::numbers::pi;

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

// Accumulates the worst residual seen and the first failure.
struct Gate {
  bool ok = true;
  double worst = 0.0;
  std::string why;

  void expect(double resid, double tol, const std::string& what) {
    if (!(resid == resid)) {
      fail(what + ": NaN residual");
      return;
    }
    worst = std::max(worst, resid);
    if (resid > tol && ok) {
      ok = false;
      why = what + strf(": %.3e exceeds %.1e", resid, tol);
    }
  }
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  }
  void fail(const std::string& what) {
    if (ok) {
      ok = false;
      why = what;
    }
  }
};

struct Criterion {
  int id;
  std::string label;
  bool pass;
  std::string note;
  double seconds;
};

// ---------------------------------------------------------------------------
// shared oracles

Mat4 exp_series60(const Mat4& a) {
  Mat4 sum = Mat4::identity();
  Mat4 term = Mat4::identity();
  for (int k = 1; k <= 60; ++k) {
    term = (1.0 / k) * (term * a);
    sum = sum + term;
  }
  return sum;
}

// Sign-change count of mu(t) + beta t - level over (0, (branches+1) pi) on a
// dense grid, skipping pole neighbourhoods.
int scan_crossings(double level, double beta, int branches, int npts = 1000000) {
  const double hi = (branches + 1) * kPi;
  int count = 0;
  bool have_prev = false;
  double prev = 0.0;
  int prev_cell = -1;
  for (int i = 1; i < npts; ++i) {
    const double t = hi * i / npts;
    if (std::fabs(std::sin(t)) < 1e-9) {
      have_prev = false;
      continue;
    }
    const double v = mu_fn(t) + beta * t - level;
    const int cell = static_cast<int>(t / kPi);
    if (have_prev && cell == prev_cell && (prev <= 0.0) != (v <= 0.0)) ++count;
    prev = v;
    prev_cell = cell;
    have_prev = true;
  }
  return count;
}

int solver_crossings(double level, double beta, int branches) {
  int count = 0;
  for (int b = 0; b <= branches; ++b)
    count += static_cast<int>(mu_solve_affine(level, beta, b).size());
  return count;
}

// Curve residual battery: horizontality defect and the defect of
// xddot = 2 M(theta) xdot, both by second-order differences.  The sample
// count is chosen so the O(h^2 |theta|^3 |v|) truncation sits well under tol.
void residual_battery(Gate& g, const AnisotropyParams& p, const XVec& v0, const ZVec& theta,
                      double tol, int samples, const std::string& what) {
  const SampledCurve c = sample_exp_map(p, {v0, theta}, 1.0, samples);
  g.expect(max_horizontality_residual(p, c), tol, what + " horizontality");
  g.expect(max_geodesic_residual(p, c, theta), tol, what + " flow equation");
}

double run_cli(const std::string& args) {
  const std::string cmd = std::string(QN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

// ---------------------------------------------------------------------------
// criteria

void c01_algebra(Gate& g) {
  Rng rng(101);
  const int kDraws = 1000;
  const int ns[3] = {1, 2, 4};
  for (int rep = 0; rep < kDraws; ++rep) {
    const int n = ns[rep % 3];
    AnisotropyParams p = rng.params(n, 0.6, 2.0);
    const XVec x = rng.xvec(n, 1.5);
    const XVec y = rng.xvec(n, 1.5);
    const ZVec th = rng.zvec(1.2);

    for (int l = 0; l < n; ++l) {
      const Mat4 G[3] = {generator_block(p, 0, l), generator_block(p, 1, l),
                         generator_block(p, 2, l)};
      for (int m = 0; m < 3; ++m) {
        // squares, transpose-skewness, inverse
        g.expect(max_abs_diff(G[m] * G[m], (-p.a2(m, l)) * Mat4::identity()), 1e-12,
                 "square identity");
        g.expect(max_abs_diff(transpose(G[m]), (-1.0) * G[m]), 1e-12, "skewness");
        // inverse: -G/a^2 (from the square identity)
        g.expect(max_abs_diff(G[m] * ((-1.0 / p.a2(m, l)) * G[m]), Mat4::identity()), 1e-12,
                 "inverse");
      }
      // cyclic products and anticommutation
      const double a0 = p.a(0, l), a1 = p.a(1, l), a2 = p.a(2, l);
      g.expect(max_abs_diff(G[0] * G[1], (a0 * a1 / a2) * G[2]), 1e-12, "cyclic 012");
      g.expect(max_abs_diff(G[1] * G[2], (a1 * a2 / a0) * G[0]), 1e-12, "cyclic 120");
      g.expect(max_abs_diff(G[2] * G[0], (a2 * a0 / a1) * G[1]), 1e-12, "cyclic 201");
      for (int m = 0; m < 3; ++m)
        for (int k = m + 1; k < 3; ++k)
          g.expect(max_abs_diff(G[m] * G[k], (-1.0) * (G[k] * G[m])), 1e-12, "anticommutation");
    }

    // vector-level identities
    for (int m = 0; m < 3; ++m) {
      const XVec Mmx = apply_generator(p, m, x);
      g.expect(std::fabs(dot(Mmx, x)), 1e-12, "isotropy of the generator");
      g.expect(std::fabs(dot(Mmx, apply_theta_matrix(p, th, x)) -
                         th[m] * weighted_norm2(p, m, x)),
               1e-12, "weighted pairing");
    }
    const XVec Mx = apply_theta_matrix(p, th, x);
    const XVec MMx = apply_theta_matrix(p, th, Mx);
    const XVec MMMx = apply_theta_matrix(p, th, MMx);
    for (int l = 0; l < n; ++l) {
      const double t2 = p.theta_norm2(th, l);
      Vec4 r2 = block(MMx, l) + t2 * block(x, l);
      Vec4 r3 = block(MMMx, l) + t2 * block(Mx, l);
      g.expect(norm(r2), 1e-12, "square of the full matrix");
      g.expect(norm(r3), 1e-12, "cube of the full matrix");
    }
    (void)y;
  }
}

void c02_exponential(Gate& g) {
  Rng rng(102);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = rng.pick(1, 3);
    AnisotropyParams p = rng.params(n);
    const ZVec th = rng.zvec(1.5);
    double s = rng.uniform(0.05, 1.0);
    double t = rng.uniform(0.05, 1.0);
    double arg = 0.0;
    for (int l = 0; l < n; ++l)
      arg = std::max(arg, 2.0 * (s + t) * std::sqrt(p.theta_norm2(th, l)));
    if (arg > 10.0) {
      const double c = 10.0 / arg;
      s *= c;
      t *= c;
    }

    const auto es = exp_2sM(p, th, s);
    const auto et = exp_2sM(p, th, t);
    const auto est = exp_2sM(p, th, s + t);
    for (int l = 0; l < n; ++l) {
      const Mat4 a = (2.0 * s) * theta_matrix_block(p, th, l);
      g.expect(max_abs_diff(es[l], exp_series60(a)), 1e-10, "series agreement");
      g.expect(max_abs_diff(est[l], es[l] * et[l]), 1e-12, "group property");
      g.expect(max_abs_diff(transpose(es[l]) * es[l], Mat4::identity()), 1e-12,
               "orthogonality");
    }
  }
}

void c03_ivp(Gate& g) {
  Rng rng(103);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = rng.pick(1, 3);
    AnisotropyParams p = rng.params(n, 0.6, 1.6);
    const XVec v0 = rng.xvec(n, 1.2);
    ZVec th = rng.zvec(1.0);
    double worstt = 0.0;
    for (int l = 0; l < n; ++l) worstt = std::max(worstt, std::sqrt(p.theta_norm2(th, l)));
    if (worstt > 2.0) th = (2.0 / worstt) * th;

    const int steps = 10000;
    BicharState s0{XVec(4 * n, 0.0), {0, 0, 0},
                   momentum_from_velocity(p, XVec(4 * n, 0.0), v0, th)};
    const BicharResult r = integrate_bicharacteristic(p, s0, th, 1.0, steps);
    const double H0 = hamiltonian(p, s0.x, s0.xi, th);
    g.expect(r.max_h_drift, 1e-10 * (1.0 + std::fabs(H0)), "energy drift of the integrator");

    double sup = 0.0;
    for (int i = 0; i <= steps; i += 10) {  // every 10th step: sup over 1001 grid points
      const ExpMapPoint e = exp_map(p, {v0, th}, r.curve.s[i]);
      sup = std::max(sup, max_abs_diff(e.q, r.curve.pts[i]));
    }
    g.expect(sup, 1e-6, "closed form vs integrator");

    // conserved kinetic energies along the closed form
    double e0 = -1.0;
    std::array<double, 3> em0{};
    for (int i = 0; i <= 100; ++i) {
      const ExpMapPoint e = exp_map(p, {v0, th}, i / 100.0);
      const double ek = 0.5 * norm2(e.xdot);
      if (i == 0) {
        e0 = ek;
        for (int m = 0; m < 3; ++m) em0[m] = 0.5 * weighted_norm2(p, m, e.xdot);
      } else {
        g.expect(std::fabs(ek - e0), 1e-10 * (1.0 + e0), "total energy constancy");
        for (int m = 0; m < 3; ++m)
          g.expect(std::fabs(0.5 * weighted_norm2(p, m, e.xdot) - em0[m]),
                   1e-10 * (1.0 + em0[m]), "weighted energy constancy");
      }
    }
  }
}

void c04_residuals(Gate& g) {
  Rng rng(104);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = rng.pick(1, 2);
    AnisotropyParams p = rng.params(n, 0.6, 1.4);
    XVec v0 = rng.xvec(n, 1.0);
    if (norm(v0) > 1.2) v0 = (1.2 / norm(v0)) * v0;
    ZVec th = rng.zvec(1.0);
    double worstt = 0.0;
    for (int l = 0; l < n; ++l) worstt = std::max(worstt, std::sqrt(p.theta_norm2(th, l)));
    if (worstt > 1e-12) th = (rng.uniform(0.5, 1.1) / worstt) * th;
    residual_battery(g, p, v0, th, 5e-6, 1001, "flow battery");
  }
  // counterexample: horizontal but not a flow of the system
  AnisotropyParams p = rng.params(1);
  const SampledCurve bad = skew_parabola_curve(p, 1.0, 1001);
  g.expect(max_horizontality_residual(p, bad), 5e-6, "counterexample horizontality");
  const double defect = max_geodesic_residual(p, bad, fit_theta(p, bad));
  g.require(defect >= 0.1,
            strf("counterexample flow defect %.3e below 0.1", defect));
}

void c05_straight(Gate& g) {
  Rng rng(105);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = rng.pick(1, 3);
    AnisotropyParams p = rng.params(n);
    const XVec x = rng.xvec(n, 2.0);
    const GeodesicSolution s = connect_x_zero(p, x);
    g.expect(std::fabs(s.length - norm(x)), 1e-12 * (1.0 + norm(x)), "length = |x|");
    g.require(norm(s.theta) == 0.0, "vertical momentum must vanish");
    const SampledCurve c = sample_exp_map(p, {s.v0, s.theta}, 1.0, 101);
    for (const auto& q : c.pts)
      g.require(q.z[0] == 0.0 && q.z[1] == 0.0 && q.z[2] == 0.0,
                "vertical part must stay exactly zero");
    const EnumerationResult r = enumerate_geodesics(p, GroupPoint{x, {0, 0, 0}});
    g.require(r.solutions.size() == 1 && !r.truncated,
              strf("enumeration found %zu solutions, wanted exactly 1", r.solutions.size()));
  }
}

void c06_vertical(Gate& g) {
  AnisotropyParams p = AnisotropyParams::isotropic(1, 1.0);
  const ZVec z{1.0, 0.0, 0.0};
  for (int k = 1; k <= 5; ++k) {
    const auto sol = connect_zero_z(p, z, {k});
    if (!sol) {
      g.fail(strf("no solution at winding %d", k));
      return;
    }
    const ExpMapPoint end = exp_map(p, {sol->v0, sol->theta}, 1.0);
    g.expect(norm(end.q.x), 1e-10, "horizontal return");
    g.expect(norm(end.q.z - z), 1e-8, "vertical endpoint");
    g.expect(std::fabs(sol->length2 - 4.0 * kPi * k), 1e-9 * 4.0 * kPi * k,
             "closed-form energy");
    const SampledCurve c = sample_exp_map(p, {sol->v0, sol->theta}, 1.0, 20001);
    g.expect(std::fabs(polygon_length(c.pts) - sol->length), 1e-6 * sol->length,
             "arc length vs reported length");
  }
  ConnectOptions opts;
  opts.max_multiindex = 5;
  const EnumerationResult r = enumerate_geodesics(p, GroupPoint{XVec(4, 0.0), z}, opts);
  g.require(r.solutions.size() == 5 && r.truncated,
            strf("enumeration: %zu solutions, truncated=%d", r.solutions.size(),
                 int(r.truncated)));
}

void c07_level_instance(Gate& g) {
  AnisotropyParams p = AnisotropyParams::isotropic(1, 1.0);
  const XVec x{1.0, 0.0, 0.0, 0.0};
  const ZVec z{kPi / 8.0, 0.0, 0.0};

  const auto sols = connect_full(p, x, z, {0});
  g.require(sols.size() == 1, strf("branch-0 solutions: %zu, wanted 1", sols.size()));
  if (sols.empty()) return;
  const GeodesicSolution& s = sols.front();
  const double t = s.theta_norms[0];
  g.expect(std::fabs(t - kPi / 2.0), 1e-10, "momentum norm pi/2");
  g.expect(s.endpoint_error, 1e-8, "endpoint");

  // length from the connection data alone, then against quadrature
  const double S1 = mu_over_t(t) * norm2(x);  // sum_m a^2 |x|^2 mu(t)/t, a = 1
  double l2 = norm2(x) * t_cot_t(t);
  for (int m = 0; m < 3; ++m)
    if (z[m] != 0.0) l2 += 16.0 * z[m] * z[m] / S1;
  g.expect(std::fabs(l2 - s.length2), 1e-9, "length identity from target data");
  const SampledCurve c = sample_exp_map(p, {s.v0, s.theta}, 1.0, 20001);
  g.expect(std::fabs(polygon_length(c.pts) - s.length), 1e-6 * s.length,
           "arc length vs reported length");

  // energy partition at the solution, both closed forms
  const double zdot = dot(s.theta, z);
  g.expect(std::fabs(zdot - 0.25 * norm2(x) * t * mu_fn(t)), 1e-9, "partition, mu form");
  g.expect(std::fabs(zdot - (0.25 * s.length2 - 0.25 * norm2(x) * t_cot_t(t))), 1e-9,
           "partition, energy form");
  g.expect(std::fabs(zdot - kPi * kPi / 16.0), 1e-9, "partition value pi^2/16");

  // crossing counts versus the dense scan across straddling levels
  const double c1v = mu_fn(mu_critical(1));
  for (double level : {c1v - 0.35, c1v + 0.35, kPi / 2.0}) {
    const int scan = scan_crossings(level, 0.0, 1);
    const int solver = solver_crossings(level, 0.0, 1);
    g.require(solver == scan, strf("crossing count at level %.4f: solver %d, scan %d", level,
                                   solver, scan));
    // the same count through the geodesic solver on a matching target
    const ZVec zl{level / 4.0, 0.0, 0.0};
    int geo = 0;
    for (int b : {0, 1}) geo += static_cast<int>(connect_full(p, x, zl, {b}).size());
    g.require(geo == scan,
              strf("geodesic count at level %.4f: solver %d, scan %d", level, geo, scan));
  }
}

void c08_mixed(Gate& g) {
  // two-block instance with one closed block: root counts of the reduced
  // scalar equation, then full solver batteries on manufactured targets
  const double a00 = 1.0, a01 = 1.3;
  const double x1n2 = 1.37;  // |x_1|^2
  const double z1 = 0.45, E2 = 0.8;
  const double level = 4.0 * z1 / (a00 * x1n2);
  int counts_beta0 = -1;
  for (int wind : {1, 2, 50}) {
    const double beta =
        a01 * a01 * E2 / (kPi * kPi * wind * wind * a00 * a00 * x1n2);
    const int scan = scan_crossings(level, beta, 3);
    const int solver = solver_crossings(level, beta, 3);
    g.require(solver == scan,
              strf("winding %d: solver %d roots, scan %d", wind, solver, scan));
    if (wind == 50) {
      counts_beta0 = solver_crossings(level, 0.0, 3);
      g.require(solver == counts_beta0,
                strf("winding 50: %d roots vs %d unperturbed", solver, counts_beta0));
    }
  }

  // manufactured mixed geodesics, one per winding in {1, 2}
  Rng rng(108);
  const ZVec theta_star{0.9, -0.5, 0.3};
  const std::array<double, 3> gw{1.2, 0.9, 1.05};
  double s = 0.0;
  for (int m = 0; m < 3; ++m) s += theta_star[m] * theta_star[m] * gw[m] * gw[m];
  for (int wind : {1, 2}) {
    std::array<std::vector<double>, 3> a;
    for (int m = 0; m < 3; ++m)
      a[m] = {gw[m] * (2.0 / std::sqrt(s)), gw[m] * (kPi * wind / std::sqrt(s))};
    AnisotropyParams p(2, a);

    XVec v0(8, 0.0);
    set_block(v0, 0, Vec4{0.5, 0.15, -0.3, 0.1});
    const Vec4 d = rng.unit4();
    set_block(v0, 1, std::sqrt(0.6) * d);
    GroupPoint tgt = exp_map(p, {v0, theta_star}, 1.0).q;
    g.require(norm(block(tgt.x, 1)) < 1e-10, "closed block must return");
    set_block(tgt.x, 1, Vec4{0.0, 0.0, 0.0, 0.0});

    const auto sols = connect_mixed(p, tgt.x, tgt.z, {wind}, {0}, {}, {d});
    bool planted = false;
    for (const auto& sol : sols) {
      if (norm(sol.theta - theta_star) < 1e-6) planted = true;
      residual_battery(g, p, sol.v0, sol.theta, 5e-6, 8001,
                       strf("winding %d", wind));
      // length from target data: the two S-sums and the cot term
      const double t1 = sol.theta_norms[0];
      const double El2 = norm2(block(sol.v0, 1));
      double l2 = norm2(block(tgt.x, 0)) * t_cot_t(t1);
      for (int m = 0; m < 3; ++m) {
        const double Sm = p.a2(m, 0) * norm2(block(tgt.x, 0)) * mu_over_t(t1) +
                          p.a2(m, 1) * El2 / (kPi * kPi * wind * wind);
        l2 += 16.0 * tgt.z[m] * tgt.z[m] / Sm;
      }
      g.expect(std::fabs(l2 - sol.length2), 1e-6 * (1.0 + sol.length2),
               strf("winding %d length identity", wind));
    }
    g.require(planted, strf("winding %d: planted data not recovered", wind));
  }
}

void c09_action(Gate& g) {
  Rng rng(109);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = rng.pick(1, 2);
    AnisotropyParams p = rng.params(n);
    const XVec x = rng.xvec(n, 1.5);
    const ZVec z = rng.zvec(1.0);
    const ZVec tau = rng.zvec(2.0);
    g.expect(hj_residual(p, x, z, tau), 1e-10, "stationary equation");
    g.expect(transport_residual(p, tau), 1e-10, "transport equation");
  }

  int done = 0;
  while (done < 10) {
    const int n = rng.pick(1, 2);
    AnisotropyParams p = rng.params(n, 0.7, 1.4);
    XVec v0 = rng.xvec(n, 1.0);
    for (int l = 0; l < n; ++l)
      if (norm(block(v0, l)) < 0.3) set_block(v0, l, Vec4{0.5, -0.2, 0.3, 0.1});
    ZVec th = rng.zvec(0.8);
    double worstt = 0.0;
    for (int l = 0; l < n; ++l) worstt = std::max(worstt, std::sqrt(p.theta_norm2(th, l)));
    th = (rng.uniform(0.5, 2.2) / worstt) * th;
    const GroupPoint tgt = exp_map(p, {v0, th}, 1.0).q;
    if (norm(tgt.z) < 1e-3) continue;
    bool degenerate = false;
    for (int l = 0; l < n; ++l)
      if (norm(block(tgt.x, l)) < 1e-2) degenerate = true;
    if (degenerate) continue;

    ConnectOptions opts;
    opts.max_branch = 0;
    const EnumerationResult r = enumerate_geodesics(p, tgt, opts);
    const GeodesicSolution* match = nullptr;
    for (const auto& sol : r.solutions)
      if (norm(sol.theta - th) < 1e-6) match = &sol;
    if (!match) continue;  // multistart may land elsewhere; only count matches
    ++done;

    const auto cp = action_critical_point(p, tgt.x, tgt.z, 1.15 * th);
    if (!cp) {
      g.fail("critical point search failed");
      return;
    }
    g.expect(norm(cp->theta - match->theta), 1e-7, "saddle momentum");
    g.expect(std::fabs(cp->action - 0.25 * match->length2),
             1e-6 * (1.0 + cp->action), "saddle value = length^2/4");
  }
}

void c10_green(Gate& g) {
  AnisotropyParams p = AnisotropyParams::isotropic(1, 1.0);
  const double e0 = epsilon0(p);

  // the shifted contour needs ~5 nodes per unit length; the box only has to
  // clear the e^{-2|tau|} envelope
  GreenOptions fine;
  fine.quad.half_width = 10.0;
  fine.quad.nodes = 96;
  GreenOptions o1 = fine, o2 = fine;
  o1.epsilon = 0.5 * e0;
  o2.epsilon = 0.25 * e0;

  const GroupPoint q{XVec{0.8, -0.3, 0.45, 0.2}, ZVec{0.35, -0.15, 0.25}};
  const KernelResult g1 = green_function(p, q, o1);
  const KernelResult g2 = green_function(p, q, o2);
  g.require(g1.value < 0.0, "sign convention");
  g.expect(std::fabs(g1.value - g2.value) / std::fabs(g1.value), 5e-6,
           "contour independence");
  g.expect(std::fabs(g1.imag_part), 1e-9 * (g1.gross + std::fabs(g1.value)),
           "imaginary diagnostic");

  for (double lam : {1.5, 0.75}) {
    const KernelResult gd = green_function(p, dilate(q, lam), o1);
    g.expect(std::fabs(gd.value - g1.value * std::pow(lam, -8.0)) /
                 (std::fabs(g1.value) * std::pow(lam, -8.0)),
             1e-6, strf("homogeneity at scale %.2f", lam));
  }

  // harmonicity away from the pole by grouped differences at points of unit
  // homogeneous norm.  The defect has an h^2 truncation term on top of a
  // step-independent floor (the curvature of the quadrature-error field), so
  // the halving test runs at steps where truncation still dominates; a
  // narrower box buys the node density that pushes the floor under it.
  GreenOptions quick = fine;
  quick.quad.half_width = 8.0;
  quick.epsilon = 0.5 * e0;
  Rng rng(110);
  for (int pt = 0; pt < 6; ++pt) {
    GroupPoint base{rng.xvec(1, 1.0), rng.zvec(1.0)};
    if (norm(base.x) < 0.5) base.x[0] += 0.8;
    if (norm(base.z) < 0.5) base.z[0] += 0.8;
    base = dilate(base, 1.0 / homogeneous_norm(base));

    double absval[2];
    double gref = 0.0;
    for (int hi = 0; hi < 2; ++hi) {
      const double h = hi == 0 ? 0.04 : 0.02;
      const SublapStencil st = sublap_stencil(p, base, h);
      const auto vals = green_function_batch(p, st.points, quick);
      KahanSum acc;
      for (size_t i = 0; i < vals.size(); ++i) acc.add(st.weights[i] * vals[i].value);
      absval[hi] = std::fabs(acc.value());
      gref = std::fabs(vals[0].value);
    }
    g.expect(absval[1] / gref, 2e-3, strf("harmonicity at point %d, step 0.02", pt));
    g.require(absval[1] < 0.35 * absval[0] + 1e-5 * gref,
              strf("defect did not shrink at point %d (%.3e -> %.3e, value %.3e)", pt,
                   absval[0], absval[1], gref));
  }
}

void c11_heat(Gate& g) {
  AnisotropyParams p = AnisotropyParams::isotropic(1, 1.0);
  HeatOptions opts;
  opts.quad.half_width = 10.0;
  opts.quad.nodes = 48;
  opts.time = 0.7;
  opts.tail_tol = 1e-5;

  Rng rng(111);
  for (int rep = 0; rep < 3; ++rep) {
    const GroupPoint q{rng.xvec(1, 0.8), rng.zvec(0.5)};
    const GroupPoint qm{q.x, (-1.0) * q.z};
    const KernelResult r = heat_kernel(p, q, opts);
    const KernelResult rm = heat_kernel(p, qm, opts);
    g.require(r.value > 0.0, "positivity");
    g.expect(std::fabs(r.value - rm.value) / r.value, 1e-12, "vertical flip symmetry");
    g.expect(std::fabs(r.imag_part), 1e-11 * (r.gross + r.value), "imaginary diagnostic");
  }

  // the evolution equation by grouped differences; the time derivative uses
  // a fourth-order difference so its truncation sits below the spatial one
  const double k = 0.0125;
  for (int pt = 0; pt < 5; ++pt) {
    GroupPoint q{rng.xvec(1, 1.0), rng.zvec(1.0)};
    if (norm(q.x) < 0.4) q.x[0] += 0.6;
    q = dilate(q, 1.0 / homogeneous_norm(q));

    double pt_at[4];
    {
      int i = 0;
      for (double dt : {-2.0 * k, -k, k, 2.0 * k}) {
        HeatOptions ho = opts;
        ho.time = opts.time + dt;
        pt_at[i++] = heat_kernel(p, q, ho).value;
      }
    }
    const double dpdt =
        (pt_at[0] - 8.0 * pt_at[1] + 8.0 * pt_at[2] - pt_at[3]) / (12.0 * k);

    // below h ~ 0.05 the residual hits a step-independent floor from the
    // time-difference truncation, so the halving runs above it
    double resid[2], scale[2];
    for (int hi = 0; hi < 2; ++hi) {
      const double h = hi == 0 ? 0.1 : 0.05;
      const SublapStencil st = sublap_stencil(p, q, h);
      const auto vals = heat_kernel_batch(p, st.points, opts);
      KahanSum acc;
      for (size_t i = 0; i < vals.size(); ++i) acc.add(st.weights[i] * vals[i].value);
      resid[hi] = std::fabs(dpdt - acc.value());
      scale[hi] = std::fabs(dpdt) + std::fabs(acc.value());
    }
    g.expect(resid[1] / scale[1], 1e-3, strf("evolution defect at point %d", pt));
    g.require(resid[1] < 0.35 * resid[0] + 2e-6 * scale[1],
              strf("defect did not shrink at point %d (%.3e -> %.3e)", pt, resid[0],
                   resid[1]));
  }
}

void c12_estimates(Gate& g) {
  // calibrate the two constants on one sample, then demand zero violations
  // on a fresh one
  Rng cal(112);
  double c1 = 0.0, c2 = 1e300;
  for (int rep = 0; rep < 20000; ++rep) {
    const int n = cal.pick(1, 3);
    AnisotropyParams p = cal.params(n);
    const XVec x = cal.xvec(n, 2.0);
    const ZVec z = cal.zvec(1.5);
    const ZVec tau = cal.zvec(3.0);
    const double eps = 0.5 * epsilon0(p);
    const EstimateProbe pr = estimate_probe(p, x, z, tau, eps, 1e300, 0.0);
    if (pr.x_norm2 < 1e-12) continue;
    c1 = std::max(c1, std::fabs(pr.im_gamma) / (eps * pr.x_norm2));
    c2 = std::min(c2, pr.re_gamma / pr.x_norm2);
  }
  c1 *= 1.25;
  c2 *= 0.80;
  g.require(c2 > 0.0, "no positive lower constant");

  Rng fresh(113);
  int viol = 0, flat_viol = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int n = fresh.pick(1, 3);
    AnisotropyParams p = fresh.params(n);
    const XVec x = fresh.xvec(n, 2.0);
    const ZVec z = fresh.zvec(1.5);
    const ZVec tau = fresh.zvec(3.0);

    const EstimateProbe pr =
        estimate_probe(p, x, z, tau, 0.5 * epsilon0(p), c1, c2);
    if (!pr.im_ok || !pr.re_ok) ++viol;

    // flat contour (eps = 0) and flat direction (z = 0): exact lower bound
    const EstimateProbe f1 = estimate_probe(p, x, z, tau, 0.0, 1e300, 0.25);
    const EstimateProbe f2 =
        estimate_probe(p, x, ZVec{0, 0, 0}, tau, 0.5 * epsilon0(p), 1e300, 0.25);
    if (!f1.re_ok || f1.im_gamma != 0.0) ++flat_viol;
    if (!f2.re_ok || f2.im_gamma != 0.0) ++flat_viol;
  }
  g.require(viol == 0, strf("%d of 10000 shifted draws violated the fitted bounds", viol));
  g.require(flat_viol == 0, strf("%d flat draws violated the exact bound", flat_viol));
  g.worst = c1;  // report the fitted constant as the figure of merit
}

void c13_figures(Gate& g) {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("qn_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path d;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(d, ec);
    }
  } cleanup{dir};

  // (a) the oscillation profile with a level crossing at pi/2
  const std::string mu_csv = (dir / "profile.csv").string();
  g.require(run_cli(strf("mu --samples 2001 --max-branch 3 --level %.17g --out %s",
                         kPi / 2.0, mu_csv.c_str())) == 0,
            "profile emission failed");
  {
    std::ifstream in(mu_csv);
    g.require(in.good(), "profile CSV missing");
    std::string line;
    std::getline(in, line);
    g.require(line == "branch,t,mu,affine", "profile CSV header");
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    g.require(rows == 2001 * 7, strf("profile rows: %d", rows));

    const nlohmann::json j = load_json((dir / "profile.roots.json").string());
    int total = 0;
    for (const auto& b : j.at("branches")) total += b.at("count").get<int>();
    g.require(total == j.at("total_count").get<int>(), "root count bookkeeping");
    g.require(total == scan_crossings(kPi / 2.0, 0.0, 3),
              strf("crossing count %d disagrees with the scan", total));
    const double r0 = j.at("branches")[0].at("roots")[0].get<double>();
    g.expect(std::fabs(r0 - kPi / 2.0), 1e-9, "crossing location pi/2");
  }

  // (b) three vertical-target geodesics, windings 1, 2, 5
  const std::string tgt = (dir / "target.json").string();
  std::ofstream(tgt) << R"({"x":[0,0,0,0],"z":[1,0,0]})";
  const std::string sols = (dir / "solutions.json").string();
  const std::string curves = (dir / "curves").string();
  g.require(run_cli("geodesic connect --target " + tgt +
                    " --max-index 5 --samples 4001 --emit-curves " + curves + " --out " +
                    sols) == 0,
            "vertical connect failed");
  {
    const nlohmann::json j = load_json(sols);
    g.require(j.at("count").get<int>() == 5 && j.at("truncated").get<bool>(),
              "vertical family size");
    for (int k : {1, 2, 5}) {
      const auto& s = j.at("solutions")[k - 1];
      g.require(s.at("multiindex")[0].get<int>() == k, strf("winding %d order", k));
      g.expect(std::fabs(s.at("length2").get<double>() - 4.0 * kPi * k),
               1e-9 * 4.0 * kPi * k, strf("winding %d closed-form energy", k));
      const SampledCurve c = read_curve_csv_file(
          (fs::path(curves) / strf("solution_%03d.csv", k - 1)).string());
      g.require(c.samples() == 4001, "curve sample count");
      g.expect(norm(c.pts.back().x), 1e-8, strf("winding %d horizontal return", k));
      g.expect(std::fabs(c.pts.back().z[0] - 1.0), 1e-8, strf("winding %d endpoint", k));
      g.expect(std::fabs(polygon_length(c.pts) - s.at("length").get<double>()),
               1e-6 * s.at("length").get<double>(), strf("winding %d arc length", k));
    }
  }

  // (c) root pictures of the reduced two-block equation
  const double level = 4.0 * 0.45 / 1.37;
  for (int wind : {1, 2, 50}) {
    const double beta = 1.3 * 1.3 * 0.8 / (kPi * kPi * wind * wind * 1.37);
    const std::string csv = (dir / strf("reduced_%d.csv", wind)).string();
    g.require(run_cli(strf("mu --samples 512 --max-branch 3 --level %.17g --beta %.17g "
                           "--out %s",
                           level, beta, csv.c_str())) == 0,
              strf("reduced emission %d failed", wind));
    const nlohmann::json j =
        load_json((dir / strf("reduced_%d.roots.json", wind)).string());
    g.require(j.at("total_count").get<int>() == scan_crossings(level, beta, 3),
              strf("reduced counts at winding %d disagree with the scan", wind));
  }
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* label;
    void (*fn)(Gate&);
    double budget;  // wall-clock gate in seconds; 0 = none
  };
  const Entry entries[] = {
      {1, "group algebra identity battery", c01_algebra, 5.0},
      {2, "block exponential closed form", c02_exponential, 0.0},
      {3, "closed-form flow vs canonical integrator", c03_ivp, 0.0},
      {4, "flow residual battery and counterexample", c04_residuals, 0.0},
      {5, "horizontal targets: straight segments", c05_straight, 0.0},
      {6, "vertical target family: lengths", c06_vertical, 10.0},
      {7, "level pi/2 instance and crossing counts", c07_level_instance, 0.0},
      {8, "two-block mixed instances and root counts", c08_mixed, 0.0},
      {9, "action identities and saddle values", c09_action, 0.0},
      {10, "fundamental solution: contour, decay, defect", c10_green, 120.0},
      {11, "heat kernel: symmetry and evolution", c11_heat, 0.0},
      {12, "contour estimate bounds, 10^4 draws", c12_estimates, 0.0},
      {13, "figure data through the command line", c13_figures, 0.0},
  };

  std::vector<Criterion> results;
  for (const Entry& e : entries) {
    Gate gate;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      e.fn(gate);
    } catch (const std::exception& ex) {
      gate.fail(std::string("exception: ") + ex.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (e.budget > 0.0 && secs > e.budget)
      gate.fail(strf("runtime %.1fs exceeds the %.0fs budget", secs, e.budget));
    results.push_back({e.id, e.label, gate.ok,
                       gate.ok ? strf("worst %.2e", gate.worst) : gate.why, secs});
  }

  int failures = 0;
  for (const auto& r : results) {
    std::printf("[%s] %02d %-46s %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id,
                r.label.c_str(), r.note.c_str(), r.seconds);
    if (!r.pass) ++failures;
  }
  std::printf("acceptance: %d/13 criteria passed\n", 13 - failures);
  return failures == 0 ? 0 : 1;
}
