#pragma once

// Shared helpers for the unit tests.  The generator wraps mt19937_64 with an
// exact uint->double map so sequences are identical on every platform.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "qn/params.hpp"
#include "qn/point.hpp"

namespace testsupport {

using qn::operator*;
using qn::operator-;

struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t seed) : g(seed) {}
  double uniform(double a, double b) { return a + (b - a) * ((g() >> 11) * 0x1.0p-53); }
  int pick(int a, int b) {
    return a + static_cast<int>(g() % static_cast<std::uint64_t>(b - a + 1));
  }
  qn::AnisotropyParams params(int n, double lo = 0.6, double hi = 2.0) {
    std::array<std::vector<double>, 3> a;
    for (int m = 0; m < 3; ++m) {
      a[m].resize(n);
      for (int l = 0; l < n; ++l) a[m][l] = uniform(lo, hi);
    }
    return qn::AnisotropyParams(n, a);
  }
  qn::XVec xvec(int n, double amp) {
    qn::XVec x(4 * n);
    for (auto& v : x) v = uniform(-amp, amp);
    return x;
  }
  qn::ZVec zvec(double amp) {
    return {uniform(-amp, amp), uniform(-amp, amp), uniform(-amp, amp)};
  }
  qn::Vec4 unit4() {
    while (true) {
      qn::Vec4 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
      const double n2 = qn::norm2(v);
      if (n2 > 1e-2) return (1.0 / std::sqrt(n2)) * v;
    }
  }
};

// Polygonal length of the horizontal projection with one Richardson step:
// chords underestimate by O(h^2), so P + (P - P_half)/3 removes that term.
inline double polygon_length(const std::vector<qn::GroupPoint>& pts) {
  double full = 0.0, half = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) full += qn::norm(pts[i].x - pts[i - 1].x);
  for (size_t i = 2; i < pts.size(); i += 2) half += qn::norm(pts[i].x - pts[i - 2].x);
  return full + (full - half) / 3.0;
}

}  // namespace testsupport
