#pragma once

#include <vector>

#include "qn/special.hpp"

namespace qn {

// Branch intervals of mu(t) = t/sin^2 t - cot t on the positive axis:
// branch 0 is (0, pi), branch m >= 1 is (m pi, (m+1) pi).  mu is strictly
// convex on every branch; on branch 0 it increases from 0 to +inf, on higher
// branches it falls from +inf to a minimum at the critical point c_m (the
// root of tan t = t) and climbs back to +inf.
struct MuBranchInfo {
  double lo, hi;        // open interval
  double critical;      // c_m (== lo for branch 0, where mu is monotone)
  double min_value;     // mu(c_m), or 0 for branch 0
};

MuBranchInfo mu_branch_info(int branch);

// Critical point c_m of branch m >= 1 (unique root of tan t = t in the
// branch), found by bisection on sin t - t cos t.
double mu_critical(int branch);

// Roots of mu(t) + beta t = level inside the given branch (beta >= 0).
// Convexity gives 0, 1 or 2 roots; they are returned sorted, refined by
// bisection to near machine accuracy.
std::vector<double> mu_solve_affine(double level, double beta, int branch);

// Roots of mu(t) = level inside the branch.
inline std::vector<double> mu_solve(double level, int branch) {
  return mu_solve_affine(level, 0.0, branch);
}

}  // namespace qn
