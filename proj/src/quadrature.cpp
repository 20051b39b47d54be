#include "qn/quadrature.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace qn {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::runtime_error("gauss_legendre: need at least one node");
  GaussLegendre g;
  g.x.resize(static_cast<size_t>(n));
  g.w.resize(static_cast<size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    g.x[static_cast<size_t>(i)] = -x;
    g.x[static_cast<size_t>(n - 1 - i)] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    g.w[static_cast<size_t>(i)] = w;
    g.w[static_cast<size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) g.x[static_cast<size_t>(n / 2)] = 0.0;
  return g;
}

QuadratureSpec QuadratureSpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("quadrature spec: bad JSON: ") + e.what());
  }
  QuadratureSpec s;
  if (j.contains("half_width")) s.half_width = j.at("half_width").get<double>();
  if (j.contains("nodes")) s.nodes = j.at("nodes").get<int>();
  if (!(s.half_width > 0.0)) throw std::runtime_error("quadrature spec: half_width must be > 0");
  if (s.nodes < 2) throw std::runtime_error("quadrature spec: nodes must be >= 2");
  return s;
}

std::string QuadratureSpec::to_json_text() const {
  nlohmann::ordered_json j;
  j["half_width"] = half_width;
  j["nodes"] = nodes;
  return j.dump();
}

int worker_count() {
  if (const char* env = std::getenv("QN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int lo = static_cast<int>(static_cast<long>(n) * w / workers);
    const int hi = static_cast<int>(static_cast<long>(n) * (w + 1) / workers);
    pool.emplace_back([&fn, lo, hi] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::complex<double> integrate3(
    const QuadratureSpec& spec,
    const std::function<std::complex<double>(double, double, double)>& f) {
  const GaussLegendre g = gauss_legendre(spec.nodes);
  const double T = spec.half_width;
  const int N = spec.nodes;
  std::vector<KahanComplex> partial(static_cast<size_t>(N));
  parallel_for(N, [&](int i) {
    const double t1 = T * g.x[static_cast<size_t>(i)];
    const double w1 = T * g.w[static_cast<size_t>(i)];
    KahanComplex& acc = partial[static_cast<size_t>(i)];
    for (int j = 0; j < N; ++j) {
      const double t2 = T * g.x[static_cast<size_t>(j)];
      const double w12 = w1 * T * g.w[static_cast<size_t>(j)];
      for (int k = 0; k < N; ++k) {
        const double t3 = T * g.x[static_cast<size_t>(k)];
        acc.add(w12 * T * g.w[static_cast<size_t>(k)] * f(t1, t2, t3));
      }
    }
  });
  KahanComplex total;
  for (const auto& pc : partial) total.add(pc.value());
  return total.value();
}

}  // namespace qn
