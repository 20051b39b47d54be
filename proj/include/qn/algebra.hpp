#pragma once

#include <functional>
#include <vector>

#include "qn/params.hpp"
#include "qn/point.hpp"

namespace qn {

// The three skew 4x4 generators of the vertical part.  Acting on a quaternion
// block (x1,x2,x3,x4) they are the left multiplications by -i, k, j.
const Mat4& base_matrix(int m);  // m = 0,1,2

// Block l of the weighted generator: a(m,l) * base_matrix(m).
Mat4 generator_block(const AnisotropyParams& p, int m, int l);

// Block l of M(theta) = sum_m theta_m * a(m,l) * base_matrix(m).
Mat4 theta_matrix_block(const AnisotropyParams& p, const ZVec& theta, int l);

// y = M_m x over all blocks.
XVec apply_generator(const AnisotropyParams& p, int m, const XVec& x);
// y = M(theta) x over all blocks.
XVec apply_theta_matrix(const AnisotropyParams& p, const ZVec& theta, const XVec& x);

// |x|^2 weighted by A_m^2: sum_l a(m,l)^2 |x_l|^2.
double weighted_norm2(const AnisotropyParams& p, int m, const XVec& x);

// Group operation (x,z)*(x',z') = (x + x', z_m + z'_m + (M_m x, x')/2).
GroupPoint group_mul(const AnisotropyParams& p, const GroupPoint& q1, const GroupPoint& q2);
GroupPoint group_inverse(const AnisotropyParams& p, const GroupPoint& q);
// Left translation L_g(q) = g * q.
GroupPoint left_translate(const AnisotropyParams& p, const GroupPoint& g, const GroupPoint& q);

// Coefficients of the left-invariant frame at q, in the coordinate basis
// (d/dx_1 .. d/dx_4n, d/dz_1 .. d/dz_3).  Fields 0..4n-1 are the horizontal
// X_(k,l) in block-major order, fields 4n..4n+2 are the vertical Z_m.
std::vector<std::vector<double>> frame_fields(const AnisotropyParams& p, const GroupPoint& q);

// Vertical coefficients of the horizontal field with flat index j at q:
// coeff[m] = (M_m x)_j / 2.
ZVec frame_z_coeffs(const AnisotropyParams& p, const XVec& x, int j);

// Z-components of [X_j, X_j'] (constant over the group); zero across blocks.
ZVec structure_constants(const AnisotropyParams& p, int j1, int j2);

// Left-invariant dual form applied to a coordinate tangent vector
// (vx, vz): theta_m(v) = vz_m - (M_m x, vx)/2.
double dual_form(const AnisotropyParams& p, int m, const GroupPoint& q,
                 const XVec& vx, const ZVec& vz);

// Anisotropic dilation (x,z) -> (lam x, lam^2 z) and the homogeneous gauge
// |(x,z)| = (|x|^4 + |z|^2)^(1/4).
GroupPoint dilate(const GroupPoint& q, double lam);
double homogeneous_norm(const GroupPoint& q);

// Finite-difference stencil approximating the sub-Laplacian
//   L = Delta_x + (1/4) sum_m |x|_{A_m}^2 d^2/dz_m^2 + sum_m (M_m x, grad_x) d/dz_m
// at the point q.  Evaluating g at the stencil points and forming the
// weighted sum gives L g(q) + O(h^2).
struct SublapStencil {
  std::vector<GroupPoint> points;
  std::vector<double> weights;
};
SublapStencil sublap_stencil(const AnisotropyParams& p, const GroupPoint& q, double h);

// Convenience: evaluate the stencil against a scalar field.
double sublaplacian_apply(const AnisotropyParams& p,
                          const std::function<double(const GroupPoint&)>& g,
                          const GroupPoint& q, double h);

}  // namespace qn
