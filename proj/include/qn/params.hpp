#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace qn {

// Anisotropy data for the group Q^n: three positive weights a(m,l) per
// quaternion block l, one for each vertical direction m = 0,1,2.
class AnisotropyParams {
 public:
  AnisotropyParams() = default;
  AnisotropyParams(int n, std::array<std::vector<double>, 3> a);

  // a(m,l) == value for all m,l
  static AnisotropyParams isotropic(int n, double value = 1.0);

  int n() const { return n_; }
  int xdim() const { return 4 * n_; }        // horizontal coordinates
  int dim() const { return 4 * n_ + 3; }     // topological dimension
  int hom_dim() const { return 4 * n_ + 6; } // homogeneous dimension

  double a(int m, int l) const { return a_[m][l]; }
  double a2(int m, int l) const { return a_[m][l] * a_[m][l]; }

  double max_a2() const { return max_a2_; }  // \bar a
  double min_a2() const { return min_a2_; }

  // |theta|_l^2 = sum_m theta_m^2 a(m,l)^2
  double theta_norm2(const std::array<double, 3>& theta, int l) const {
    double s = 0.0;
    for (int m = 0; m < 3; ++m) s += theta[m] * theta[m] * a2(m, l);
    return s;
  }

  // JSON object {"n": int, "a": [[..],[..],[..]]}; throws std::runtime_error
  // on malformed shape or non-positive entries.
  static AnisotropyParams from_json_text(const std::string& text);
  static AnisotropyParams from_json_file(const std::string& path);
  std::string to_json_text() const;

 private:
  void validate() const;

  int n_ = 0;
  std::array<std::vector<double>, 3> a_{};
  double max_a2_ = 0.0;
  double min_a2_ = 0.0;
};

}  // namespace qn
