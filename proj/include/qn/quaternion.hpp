#pragma once

#include <cmath>

#include "qn/small44.hpp"

namespace qn {

// Quaternion q = w + x i + y j + z k with the Hamilton table
// i^2 = j^2 = k^2 = -1, ij = k, jk = i, ki = j.
struct Quaternion {
  double w = 0.0, x = 0.0, y = 0.0, z = 0.0;

  friend Quaternion operator*(const Quaternion& p, const Quaternion& q) {
    return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
  }
  friend Quaternion operator+(const Quaternion& p, const Quaternion& q) {
    return {p.w + q.w, p.x + q.x, p.y + q.y, p.z + q.z};
  }
  friend Quaternion operator-(const Quaternion& p, const Quaternion& q) {
    return {p.w - q.w, p.x - q.x, p.y - q.y, p.z - q.z};
  }

  Quaternion conj() const { return {w, -x, -y, -z}; }
  double abs() const { return std::sqrt(w * w + x * x + y * y + z * z); }
};

// Matrix of left multiplication p -> q p on coordinates (w, x, y, z).
inline Mat4 left_mul_matrix(const Quaternion& q) {
  Mat4 m;
  m(0, 0) = q.w; m(0, 1) = -q.x; m(0, 2) = -q.y; m(0, 3) = -q.z;
  m(1, 0) = q.x; m(1, 1) =  q.w; m(1, 2) = -q.z; m(1, 3) =  q.y;
  m(2, 0) = q.y; m(2, 1) =  q.z; m(2, 2) =  q.w; m(2, 3) = -q.x;
  m(3, 0) = q.z; m(3, 1) = -q.y; m(3, 2) =  q.x; m(3, 3) =  q.w;
  return m;
}

}  // namespace qn
