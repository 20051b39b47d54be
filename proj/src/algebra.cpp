#include "qn/algebra.hpp"

#include <cmath>
#include <stdexcept>

namespace qn {

namespace {

Mat4 make_base(int m) {
  // Left multiplication by -i, k, j on quaternion coordinates (x1,x2,x3,x4).
  Mat4 M;
  switch (m) {
    case 0:
      M(0, 1) = 1;  M(1, 0) = -1;
      M(2, 3) = 1;  M(3, 2) = -1;
      break;
    case 1:
      M(0, 3) = -1; M(1, 2) = -1;
      M(2, 1) = 1;  M(3, 0) = 1;
      break;
    case 2:
      M(0, 2) = -1; M(1, 3) = 1;
      M(2, 0) = 1;  M(3, 1) = -1;
      break;
    default:
      throw std::out_of_range("base_matrix: m must be 0,1,2");
  }
  return M;
}

}  // namespace

const Mat4& base_matrix(int m) {
  static const Mat4 M[3] = {make_base(0), make_base(1), make_base(2)};
  if (m < 0 || m > 2) throw std::out_of_range("base_matrix: m must be 0,1,2");
  return M[m];
}

Mat4 generator_block(const AnisotropyParams& p, int m, int l) {
  return p.a(m, l) * base_matrix(m);
}

Mat4 theta_matrix_block(const AnisotropyParams& p, const ZVec& theta, int l) {
  Mat4 B;
  for (int m = 0; m < 3; ++m) B = B + (theta[m] * p.a(m, l)) * base_matrix(m);
  return B;
}

XVec apply_generator(const AnisotropyParams& p, int m, const XVec& x) {
  XVec y(x.size());
  for (int l = 0; l < p.n(); ++l)
    set_block(y, l, p.a(m, l) * (base_matrix(m) * block(x, l)));
  return y;
}

XVec apply_theta_matrix(const AnisotropyParams& p, const ZVec& theta, const XVec& x) {
  XVec y(x.size());
  for (int l = 0; l < p.n(); ++l)
    set_block(y, l, theta_matrix_block(p, theta, l) * block(x, l));
  return y;
}

double weighted_norm2(const AnisotropyParams& p, int m, const XVec& x) {
  double s = 0.0;
  for (int l = 0; l < p.n(); ++l) s += p.a2(m, l) * norm2(block(x, l));
  return s;
}

GroupPoint group_mul(const AnisotropyParams& p, const GroupPoint& q1, const GroupPoint& q2) {
  GroupPoint r;
  r.x = q1.x + q2.x;
  for (int m = 0; m < 3; ++m)
    r.z[m] = q1.z[m] + q2.z[m] + 0.5 * dot(apply_generator(p, m, q1.x), q2.x);
  return r;
}

GroupPoint group_inverse(const AnisotropyParams& p, const GroupPoint& q) {
  (void)p;  // the inverse of a 2-step point is plain negation
  GroupPoint r;
  r.x = -1.0 * q.x;
  r.z = -1.0 * q.z;
  return r;
}

GroupPoint left_translate(const AnisotropyParams& p, const GroupPoint& g, const GroupPoint& q) {
  return group_mul(p, g, q);
}

ZVec frame_z_coeffs(const AnisotropyParams& p, const XVec& x, int j) {
  const int l = j / 4;
  const int k = j % 4;
  const Vec4 xl = block(x, l);
  ZVec c;
  for (int m = 0; m < 3; ++m) {
    const Vec4 mx = base_matrix(m) * xl;
    c[m] = 0.5 * p.a(m, l) * mx[k];
  }
  return c;
}

std::vector<std::vector<double>> frame_fields(const AnisotropyParams& p, const GroupPoint& q) {
  const int nx = p.xdim();
  std::vector<std::vector<double>> F(static_cast<size_t>(nx + 3),
                                     std::vector<double>(static_cast<size_t>(nx + 3), 0.0));
  for (int j = 0; j < nx; ++j) {
    F[j][j] = 1.0;
    const ZVec c = frame_z_coeffs(p, q.x, j);
    for (int m = 0; m < 3; ++m) F[j][nx + m] = c[m];
  }
  for (int m = 0; m < 3; ++m) F[nx + m][nx + m] = 1.0;
  return F;
}

ZVec structure_constants(const AnisotropyParams& p, int j1, int j2) {
  ZVec c{0.0, 0.0, 0.0};
  const int l1 = j1 / 4, l2 = j2 / 4;
  if (l1 != l2) return c;
  const int k1 = j1 % 4, k2 = j2 % 4;
  // [X_j1, X_j2] = sum_m (M_m)_{j2,j1} Z_m by skewness of the generators.
  for (int m = 0; m < 3; ++m) c[m] = p.a(m, l1) * base_matrix(m)(k2, k1);
  return c;
}

double dual_form(const AnisotropyParams& p, int m, const GroupPoint& q,
                 const XVec& vx, const ZVec& vz) {
  return vz[m] - 0.5 * dot(apply_generator(p, m, q.x), vx);
}

GroupPoint dilate(const GroupPoint& q, double lam) {
  GroupPoint r;
  r.x = lam * q.x;
  r.z = (lam * lam) * q.z;
  return r;
}

double homogeneous_norm(const GroupPoint& q) {
  const double x2 = norm2(q.x);
  const double z1 = norm(q.z);
  return std::pow(x2 * x2 + z1 * z1, 0.25);
}

SublapStencil sublap_stencil(const AnisotropyParams& p, const GroupPoint& q, double h) {
  SublapStencil st;
  const int nx = p.xdim();
  const double c2 = 1.0 / (12.0 * h * h);

  double center_w = 0.0;
  auto push = [&st](GroupPoint pt, double w) {
    st.points.push_back(std::move(pt));
    st.weights.push_back(w);
  };

  // Delta_x: five-point second derivative in every horizontal coordinate.
  for (int j = 0; j < nx; ++j) {
    const double steps[4] = {-2.0, -1.0, 1.0, 2.0};
    const double wts[4] = {-1.0, 16.0, 16.0, -1.0};
    for (int s = 0; s < 4; ++s) {
      GroupPoint pt = q;
      pt.x[j] += steps[s] * h;
      push(std::move(pt), wts[s] * c2);
    }
    center_w += -30.0 * c2;
  }

  // (1/4)|x|_{A_m}^2 d^2/dz_m^2, same stencil in each vertical coordinate.
  for (int m = 0; m < 3; ++m) {
    const double coef = 0.25 * weighted_norm2(p, m, q.x);
    const double steps[4] = {-2.0, -1.0, 1.0, 2.0};
    const double wts[4] = {-1.0, 16.0, 16.0, -1.0};
    for (int s = 0; s < 4; ++s) {
      GroupPoint pt = q;
      pt.z[m] += steps[s] * h;
      push(std::move(pt), coef * wts[s] * c2);
    }
    center_w += coef * -30.0 * c2;
  }

  // Mixed term (M_m x, grad_x) d/dz_m: directional cross difference along
  // the unit vector of w_m = M_m x, scaled back by |w_m|.
  const double c4 = 1.0 / (4.0 * h * h);
  for (int m = 0; m < 3; ++m) {
    XVec w = apply_generator(p, m, q.x);
    const double wn = norm(w);
    if (wn == 0.0) continue;
    const XVec u = (1.0 / wn) * w;
    for (int sx = -1; sx <= 1; sx += 2)
      for (int sz = -1; sz <= 1; sz += 2) {
        GroupPoint pt = q;
        pt.x = pt.x + (sx * h) * u;
        pt.z[m] += sz * h;
        push(std::move(pt), wn * sx * sz * c4);
      }
  }

  push(q, center_w);
  return st;
}

double sublaplacian_apply(const AnisotropyParams& p,
                          const std::function<double(const GroupPoint&)>& g,
                          const GroupPoint& q, double h) {
  const SublapStencil st = sublap_stencil(p, q, h);
  double acc = 0.0, comp = 0.0;  // Kahan
  for (size_t i = 0; i < st.points.size(); ++i) {
    const double term = st.weights[i] * g(st.points[i]);
    const double y = term - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return acc;
}

}  // namespace qn
