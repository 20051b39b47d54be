#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <vector>

#include "qn/small44.hpp"

namespace qn {

using XVec = std::vector<double>;        // horizontal part, length 4n, block-major
using ZVec = std::array<double, 3>;      // vertical part

inline Vec4 block(const XVec& x, int l) {
  return {x[4 * l], x[4 * l + 1], x[4 * l + 2], x[4 * l + 3]};
}
inline void set_block(XVec& x, int l, const Vec4& v) {
  x[4 * l] = v[0];
  x[4 * l + 1] = v[1];
  x[4 * l + 2] = v[2];
  x[4 * l + 3] = v[3];
}

inline double dot(const XVec& u, const XVec& v) {
  double s = 0.0;
  for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}
inline double norm2(const XVec& v) { return dot(v, v); }
inline double norm(const XVec& v) { return std::sqrt(norm2(v)); }

inline XVec operator+(const XVec& u, const XVec& v) {
  XVec r(u.size());
  for (size_t i = 0; i < u.size(); ++i) r[i] = u[i] + v[i];
  return r;
}
inline XVec operator-(const XVec& u, const XVec& v) {
  XVec r(u.size());
  for (size_t i = 0; i < u.size(); ++i) r[i] = u[i] - v[i];
  return r;
}
inline XVec operator*(double c, const XVec& v) {
  XVec r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = c * v[i];
  return r;
}

inline double dot(const ZVec& u, const ZVec& v) {
  return u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
}
inline double norm(const ZVec& v) { return std::sqrt(dot(v, v)); }
inline ZVec operator+(const ZVec& u, const ZVec& v) {
  return {u[0] + v[0], u[1] + v[1], u[2] + v[2]};
}
inline ZVec operator-(const ZVec& u, const ZVec& v) {
  return {u[0] - v[0], u[1] - v[1], u[2] - v[2]};
}
inline ZVec operator*(double c, const ZVec& v) {
  return {c * v[0], c * v[1], c * v[2]};
}

// Point (x, z) of the group Q^n.
struct GroupPoint {
  XVec x;
  ZVec z{0.0, 0.0, 0.0};

  static GroupPoint origin(int n) { return {XVec(4 * n, 0.0), {0.0, 0.0, 0.0}}; }
  int n() const { return static_cast<int>(x.size()) / 4; }
};

// Covector (xi, theta) in the fiber of T*Q^n.
struct Momentum {
  XVec xi;
  ZVec theta{0.0, 0.0, 0.0};
};

inline double max_abs_diff(const GroupPoint& p, const GroupPoint& q) {
  double m = 0.0;
  for (size_t i = 0; i < p.x.size(); ++i) m = std::max(m, std::fabs(p.x[i] - q.x[i]));
  for (int i = 0; i < 3; ++i) m = std::max(m, std::fabs(p.z[i] - q.z[i]));
  return m;
}

}  // namespace qn
