#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qn/geodesic.hpp"
#include "qn/params.hpp"
#include "qn/point.hpp"

namespace qn {

// One unit-time geodesic from the origin to a target point, as produced by
// the boundary solvers.  v0/theta always reproduce the target through the
// closed-form flow; endpoint_error records how well (diagnostic).
struct GeodesicSolution {
  enum class Case { XOnly, ZOnly, Full, Mixed };

  Case kind = Case::XOnly;
  XVec v0;
  ZVec theta{0.0, 0.0, 0.0};
  std::vector<double> theta_norms;  // |theta|_l per block
  std::vector<int> multiindex;      // per block: |theta|_l / pi for x_l = 0 blocks, else 0
  double length2 = 0.0;
  double length = 0.0;
  double endpoint_error = 0.0;

  GroupPoint target;
};

struct ConnectOptions {
  int max_branch = 3;        // highest mu-branch swept per nonzero block
  int max_multiindex = 5;    // highest winding number swept per zero block
  int newton_max_iter = 100;
  double newton_step_tol = 1e-12;
  double pole_tol = 1e-8;      // reject |theta|_l this close to pi Z
  double dedup_tol = 1e-8;
  double endpoint_tol = 1e-8;  // accept solutions whose flow endpoint matches this well
  int max_solutions = 512;
  double zero_block_energy = 1.0;  // Newton seed for |v0_l|^2 on x_l = 0 blocks
};

// Target (x, 0), x != 0: the unique geodesic is the straight segment.
GeodesicSolution connect_x_zero(const AnisotropyParams& p, const XVec& x);

// Target (0, z), z != 0: one solution per winding multiindex (n_1..n_n),
// all n_l >= 1, when the block-energy system is solvable.  directions, if
// given, supplies a unit 4-vector per block for v0; default is e_1 in every
// block.
std::optional<GeodesicSolution> connect_zero_z(const AnisotropyParams& p, const ZVec& z,
                                               const std::vector<int>& multiindex,
                                               const ConnectOptions& opts = {},
                                               const std::vector<Vec4>& directions = {});

// Target (x, z) with every block x_l != 0 and z != 0: all solutions whose
// per-block |theta|_l lie in the given mu-branches (branch_box[l] in
// 0..max_branch).
std::vector<GeodesicSolution> connect_full(const AnisotropyParams& p, const XVec& x,
                                           const ZVec& z, const std::vector<int>& branch_box,
                                           const ConnectOptions& opts = {});

// Target with some blocks x_l = 0 (their indices get the winding numbers in
// `multiindex`, their |v0_l|^2 solved from the consistency system seeded at
// opts.zero_block_energy) and the rest nonzero (branches in branch_box, in
// block order restricted to nonzero blocks).
std::vector<GeodesicSolution> connect_mixed(const AnisotropyParams& p, const XVec& x,
                                            const ZVec& z, const std::vector<int>& multiindex,
                                            const std::vector<int>& branch_box,
                                            const ConnectOptions& opts = {},
                                            const std::vector<Vec4>& directions = {});

// Sweep all cases/branches/multiindices up to the caps in opts and return
// solutions sorted by length.  truncated marks families cut by a cap.
struct EnumerationResult {
  std::vector<GeodesicSolution> solutions;
  bool truncated = false;
};
EnumerationResult enumerate_geodesics(const AnisotropyParams& p, const GroupPoint& target,
                                      const ConnectOptions& opts = {});

// Closed-form geodesic reconstruction from the target side (x(1)-based),
// valid for Full-case solutions; used as an independent route against
// exp_map sampling.
SampledCurve curve_from_target(const AnisotropyParams& p, const GroupPoint& target,
                               const GeodesicSolution& sol, int samples);

std::string solutions_to_json(const AnisotropyParams& p,
                              const std::vector<GeodesicSolution>& sols, bool truncated,
                              int residual_samples = 1001);

}  // namespace qn
