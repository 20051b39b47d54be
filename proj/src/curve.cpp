#include "qn/curve.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qn {

std::vector<double> uniform_grid(double s0, double s1, int samples) {
  if (samples < 2) throw std::runtime_error("uniform_grid: need at least 2 samples");
  std::vector<double> s(static_cast<size_t>(samples));
  const double h = (s1 - s0) / (samples - 1);
  for (int i = 0; i < samples; ++i) s[static_cast<size_t>(i)] = s0 + h * i;
  s.back() = s1;
  return s;
}

namespace {

// d/ds of a scalar sample sequence.  Interior rows are centered; the
// boundary rows are one order higher than the interior so their larger
// one-sided constants never dominate the battery.
template <class Get>
std::vector<double> d1(const std::vector<double>& s, Get f) {
  const int n = static_cast<int>(s.size());
  const double h = s[1] - s[0];
  std::vector<double> out(static_cast<size_t>(n));
  if (n >= 4) {
    out[0] = (-11.0 * f(0) + 18.0 * f(1) - 9.0 * f(2) + 2.0 * f(3)) / (6.0 * h);
    out[static_cast<size_t>(n - 1)] =
        (11.0 * f(n - 1) - 18.0 * f(n - 2) + 9.0 * f(n - 3) - 2.0 * f(n - 4)) / (6.0 * h);
  } else {
    out[0] = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    out[static_cast<size_t>(n - 1)] =
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
  }
  for (int i = 1; i + 1 < n; ++i) out[static_cast<size_t>(i)] = (f(i + 1) - f(i - 1)) / (2.0 * h);
  return out;
}

template <class Get>
std::vector<double> d2(const std::vector<double>& s, Get f) {
  const int n = static_cast<int>(s.size());
  const double h = s[1] - s[0];
  const double h2 = h * h;
  std::vector<double> out(static_cast<size_t>(n));
  if (n >= 5) {
    out[0] = (35.0 * f(0) - 104.0 * f(1) + 114.0 * f(2) - 56.0 * f(3) + 11.0 * f(4)) /
             (12.0 * h2);
    out[static_cast<size_t>(n - 1)] = (35.0 * f(n - 1) - 104.0 * f(n - 2) +
                                       114.0 * f(n - 3) - 56.0 * f(n - 4) +
                                       11.0 * f(n - 5)) /
                                      (12.0 * h2);
  } else {
    out[0] = (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / h2;
    out[static_cast<size_t>(n - 1)] =
        (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) / h2;
  }
  for (int i = 1; i + 1 < n; ++i)
    out[static_cast<size_t>(i)] = (f(i + 1) - 2.0 * f(i) + f(i - 1)) / h2;
  return out;
}

}  // namespace

std::vector<XVec> x_velocity(const SampledCurve& c) {
  const int n = c.samples();
  const int nx = static_cast<int>(c.pts[0].x.size());
  std::vector<XVec> v(static_cast<size_t>(n), XVec(static_cast<size_t>(nx)));
  for (int j = 0; j < nx; ++j) {
    auto col = d1(c.s, [&](int i) { return c.pts[static_cast<size_t>(i)].x[static_cast<size_t>(j)]; });
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)][static_cast<size_t>(j)] = col[static_cast<size_t>(i)];
  }
  return v;
}

std::vector<ZVec> z_velocity(const SampledCurve& c) {
  const int n = c.samples();
  std::vector<ZVec> v(static_cast<size_t>(n));
  for (int m = 0; m < 3; ++m) {
    auto col = d1(c.s, [&](int i) { return c.pts[static_cast<size_t>(i)].z[static_cast<size_t>(m)]; });
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)][static_cast<size_t>(m)] = col[static_cast<size_t>(i)];
  }
  return v;
}

std::vector<XVec> x_acceleration(const SampledCurve& c) {
  const int n = c.samples();
  const int nx = static_cast<int>(c.pts[0].x.size());
  std::vector<XVec> a(static_cast<size_t>(n), XVec(static_cast<size_t>(nx)));
  for (int j = 0; j < nx; ++j) {
    auto col = d2(c.s, [&](int i) { return c.pts[static_cast<size_t>(i)].x[static_cast<size_t>(j)]; });
    for (int i = 0; i < n; ++i) a[static_cast<size_t>(i)][static_cast<size_t>(j)] = col[static_cast<size_t>(i)];
  }
  return a;
}

std::vector<ZVec> horizontality_residual(const AnisotropyParams& p, const SampledCurve& c) {
  const auto xd = x_velocity(c);
  const auto zd = z_velocity(c);
  std::vector<ZVec> r(static_cast<size_t>(c.samples()));
  for (int i = 0; i < c.samples(); ++i) {
    const auto& q = c.pts[static_cast<size_t>(i)];
    for (int m = 0; m < 3; ++m)
      r[static_cast<size_t>(i)][static_cast<size_t>(m)] =
          zd[static_cast<size_t>(i)][static_cast<size_t>(m)] -
          0.5 * dot(apply_generator(p, m, q.x), xd[static_cast<size_t>(i)]);
  }
  return r;
}

double max_horizontality_residual(const AnisotropyParams& p, const SampledCurve& c) {
  double mx = 0.0;
  for (const auto& r : horizontality_residual(p, c))
    for (double v : r) mx = std::max(mx, std::fabs(v));
  return mx;
}

CurveEnergies kinetic_energies(const AnisotropyParams& p, const SampledCurve& c) {
  const auto xd = x_velocity(c);
  CurveEnergies e;
  e.total.resize(static_cast<size_t>(c.samples()));
  for (int m = 0; m < 3; ++m) e.weighted[static_cast<size_t>(m)].resize(static_cast<size_t>(c.samples()));
  for (int i = 0; i < c.samples(); ++i) {
    e.total[static_cast<size_t>(i)] = 0.5 * norm2(xd[static_cast<size_t>(i)]);
    for (int m = 0; m < 3; ++m)
      e.weighted[static_cast<size_t>(m)][static_cast<size_t>(i)] =
          0.5 * weighted_norm2(p, m, xd[static_cast<size_t>(i)]);
  }
  return e;
}

double horizontal_length(const SampledCurve& c) {
  const auto xd = x_velocity(c);
  double acc = 0.0;
  const double h = c.step();
  for (int i = 0; i + 1 < c.samples(); ++i)
    acc += 0.5 * h * (norm(xd[static_cast<size_t>(i)]) + norm(xd[static_cast<size_t>(i) + 1]));
  return acc;
}

SampledCurve left_translate_curve(const AnisotropyParams& p, const GroupPoint& g,
                                  const SampledCurve& c) {
  SampledCurve out;
  out.s = c.s;
  out.pts.reserve(c.pts.size());
  for (const auto& q : c.pts) out.pts.push_back(group_mul(p, g, q));
  return out;
}

SampledCurve skew_parabola_curve(const AnisotropyParams& p, double s1, int samples,
                                 double c1, double c2) {
  SampledCurve c;
  c.s = uniform_grid(0.0, s1, samples);
  c.pts.reserve(c.s.size());
  const double a11 = p.a(0, 0);
  for (double s : c.s) {
    GroupPoint q = GroupPoint::origin(p.n());
    q.x[0] = 0.5 * s * s;
    q.x[1] = s;
    q.x[2] = 0.5 * s * s;
    q.x[3] = s;
    q.z = {a11 * s * s * s / 6.0, c1, c2};
    c.pts.push_back(std::move(q));
  }
  return c;
}

void write_curve_csv(std::ostream& out, const SampledCurve& c) {
  const int n = static_cast<int>(c.pts[0].x.size()) / 4;
  out << "s";
  for (int l = 1; l <= n; ++l)
    for (int k = 1; k <= 4; ++k) out << ",x_" << k << l;
  out << ",z_1,z_2,z_3\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (int i = 0; i < c.samples(); ++i) {
    put(c.s[static_cast<size_t>(i)]);
    for (double v : c.pts[static_cast<size_t>(i)].x) {
      out << ',';
      put(v);
    }
    for (double v : c.pts[static_cast<size_t>(i)].z) {
      out << ',';
      put(v);
    }
    out << '\n';
  }
}

void write_curve_csv_file(const std::string& path, const SampledCurve& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_curve_csv(out, c);
}

SampledCurve read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("curve csv: empty input");
  int cols = 1;
  for (char ch : line) cols += (ch == ',');
  const int nx = cols - 4;
  if (nx <= 0 || nx % 4 != 0) throw std::runtime_error("curve csv: bad header");
  SampledCurve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    if (static_cast<int>(row.size()) != cols)
      throw std::runtime_error("curve csv: short row");
    c.s.push_back(row[0]);
    GroupPoint q;
    q.x.assign(row.begin() + 1, row.begin() + 1 + nx);
    q.z = {row[static_cast<size_t>(nx) + 1], row[static_cast<size_t>(nx) + 2],
           row[static_cast<size_t>(nx) + 3]};
    c.pts.push_back(std::move(q));
  }
  return c;
}

SampledCurve read_curve_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_curve_csv(in);
}

}  // namespace qn
