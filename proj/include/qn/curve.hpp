#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qn/algebra.hpp"
#include "qn/params.hpp"
#include "qn/point.hpp"

namespace qn {

// Curve sampled on a uniform parameter grid.
struct SampledCurve {
  std::vector<double> s;
  std::vector<GroupPoint> pts;

  int samples() const { return static_cast<int>(s.size()); }
  double step() const { return s.size() > 1 ? s[1] - s[0] : 0.0; }
};

std::vector<double> uniform_grid(double s0, double s1, int samples);

// Finite-difference derivatives along the curve: central in the interior,
// one-sided second order at the ends.
std::vector<XVec> x_velocity(const SampledCurve& c);
std::vector<ZVec> z_velocity(const SampledCurve& c);
std::vector<XVec> x_acceleration(const SampledCurve& c);

// Per-sample defect of the horizontality condition
//   zdot_m = (M_m x, xdot)/2,
// one 3-vector per grid point.
std::vector<ZVec> horizontality_residual(const AnisotropyParams& p, const SampledCurve& c);
double max_horizontality_residual(const AnisotropyParams& p, const SampledCurve& c);

// Kinetic energies E = |xdot|^2/2 and E_m = |xdot|^2_{A_m}/2 per sample.
struct CurveEnergies {
  std::vector<double> total;
  std::array<std::vector<double>, 3> weighted;
};
CurveEnergies kinetic_energies(const AnisotropyParams& p, const SampledCurve& c);

// Trapezoid arc length of the horizontal projection, integral of |xdot|.
double horizontal_length(const SampledCurve& c);

// Apply left translation by g to every sample.
SampledCurve left_translate_curve(const AnisotropyParams& p, const GroupPoint& g,
                                  const SampledCurve& c);

// Family of horizontal curves that are not geodesics: first block
// (s^2/2, s, s^2/2, s), remaining blocks zero, z = (a(1,1) s^3/6 + 0, c1, c2).
SampledCurve skew_parabola_curve(const AnisotropyParams& p, double s1, int samples,
                                 double c1 = 0.0, double c2 = 0.0);

// CSV with header s,x_11,x_21,...,x_4n,z_1,z_2,z_3 and one row per sample.
void write_curve_csv(std::ostream& out, const SampledCurve& c);
void write_curve_csv_file(const std::string& path, const SampledCurve& c);
SampledCurve read_curve_csv(std::istream& in);
SampledCurve read_curve_csv_file(const std::string& path);

}  // namespace qn
