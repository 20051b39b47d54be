#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace qn {

// Compensated (Kahan) accumulator.  All integral reductions in this library
// go through one of these in a fixed order, so results are bit-stable across
// runs and independent of the worker count.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

struct KahanComplex {
  KahanSum re, im;
  void add(std::complex<double> v) {
    re.add(v.real());
    im.add(v.imag());
  }
  std::complex<double> value() const { return {re.value(), im.value()}; }
};

// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> x, w;
};
GaussLegendre gauss_legendre(int n);

struct QuadratureSpec {
  double half_width = 12.0;  // integrate over [-T, T]^3
  int nodes = 64;            // per axis

  static QuadratureSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// Worker count: QN_THREADS if set (>=1), else hardware concurrency.
int worker_count();

// Run fn(i) for all i in [0, n) across workers in contiguous chunks.
// fn must only write state indexed by its own i; reductions over i must be
// done by the caller afterwards in index order (determinism contract).
void parallel_for(int n, const std::function<void(int)>& fn);

// Tensor-product integral of f over [-T, T]^3.  Outer axis chunked across
// workers; per-outer-node partial sums are reduced in index order.
std::complex<double> integrate3(
    const QuadratureSpec& spec,
    const std::function<std::complex<double>(double, double, double)>& f);

}  // namespace qn
