#pragma once

#include <array>
#include <cmath>
#include <cstddef>

// Minimal fixed-size 4-vector / 4x4-matrix kit.  All group-level operators in
// this library are block-diagonal with 4x4 blocks, so this is the only dense
// matrix type we ever need.

namespace qn {

using Vec4 = std::array<double, 4>;

struct Mat4 {
  // row-major
  std::array<double, 16> a{};

  double& operator()(int r, int c) { return a[4 * r + c]; }
  double operator()(int r, int c) const { return a[4 * r + c]; }

  static Mat4 zero() { return Mat4{}; }
  static Mat4 identity() {
    Mat4 m;
    m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = 1.0;
    return m;
  }
};

inline Vec4 operator+(const Vec4& u, const Vec4& v) {
  return {u[0] + v[0], u[1] + v[1], u[2] + v[2], u[3] + v[3]};
}
inline Vec4 operator-(const Vec4& u, const Vec4& v) {
  return {u[0] - v[0], u[1] - v[1], u[2] - v[2], u[3] - v[3]};
}
inline Vec4 operator*(double c, const Vec4& v) {
  return {c * v[0], c * v[1], c * v[2], c * v[3]};
}

inline double dot(const Vec4& u, const Vec4& v) {
  return u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3];
}
inline double norm2(const Vec4& v) { return dot(v, v); }
inline double norm(const Vec4& v) { return std::sqrt(norm2(v)); }

inline Mat4 operator+(const Mat4& A, const Mat4& B) {
  Mat4 C;
  for (int i = 0; i < 16; ++i) C.a[i] = A.a[i] + B.a[i];
  return C;
}
inline Mat4 operator-(const Mat4& A, const Mat4& B) {
  Mat4 C;
  for (int i = 0; i < 16; ++i) C.a[i] = A.a[i] - B.a[i];
  return C;
}
inline Mat4 operator*(double c, const Mat4& A) {
  Mat4 C;
  for (int i = 0; i < 16; ++i) C.a[i] = c * A.a[i];
  return C;
}

inline Vec4 operator*(const Mat4& A, const Vec4& v) {
  Vec4 r{};
  for (int i = 0; i < 4; ++i) {
    r[i] = A(i, 0) * v[0] + A(i, 1) * v[1] + A(i, 2) * v[2] + A(i, 3) * v[3];
  }
  return r;
}

inline Mat4 operator*(const Mat4& A, const Mat4& B) {
  Mat4 C;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < 4; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

inline Mat4 transpose(const Mat4& A) {
  Mat4 T;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) T(i, j) = A(j, i);
  return T;
}

inline double max_abs(const Mat4& A) {
  double m = 0.0;
  for (double v : A.a) m = std::max(m, std::fabs(v));
  return m;
}

inline double max_abs_diff(const Mat4& A, const Mat4& B) {
  double m = 0.0;
  for (int i = 0; i < 16; ++i) m = std::max(m, std::fabs(A.a[i] - B.a[i]));
  return m;
}

}  // namespace qn
