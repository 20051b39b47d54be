// qn: command-line front end.  Subcommands:
//   geodesic ivp      closed-form flow from initial data -> curve CSV + sidecar
//   geodesic connect  boundary solver sweep -> solutions JSON (+ curve CSVs)
//   mu                branch samples CSV + affine level-crossing roots JSON
//   kernel heat|green quadrature evaluation on a point/grid -> CSV
//   verify            self-check suites -> deterministic JSON report
//
// Exit codes: 0 ok, 1 verification failure, 2 bad configuration, 3 no
// solution under the requested caps.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qn/connect.hpp"
#include "qn/curve.hpp"
#include "qn/geodesic.hpp"
#include "qn/kernels.hpp"
#include "qn/mu.hpp"
#include "qn/params.hpp"
#include "qn/point.hpp"
#include "qn/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFail = 1;
constexpr int kConfig = 2;
constexpr int kNoSolution = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// arguments that carry JSON accept either a path or the document itself
bool looks_like_json(const std::string& s) {
  const auto pos = s.find_first_not_of(" \t\r\n");
  return pos != std::string::npos && (s[pos] == '{' || s[pos] == '[');
}

qn::AnisotropyParams load_params(const std::string& arg) {
  if (arg.empty()) return qn::AnisotropyParams::isotropic(1, 1.0);
  if (looks_like_json(arg)) return qn::AnisotropyParams::from_json_text(arg);
  return qn::AnisotropyParams::from_json_file(arg);
}

nlohmann::json read_json_file(const std::string& arg) {
  nlohmann::json j;
  try {
    if (looks_like_json(arg)) return nlohmann::json::parse(arg);
    std::ifstream in(arg);
    if (!in) throw ConfigError("cannot open " + arg);
    in >> j;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(arg + ": " + e.what());
  }
  return j;
}

qn::GroupPoint point_from_json(const nlohmann::json& j, const qn::AnisotropyParams& p) {
  if (!j.is_object() || !j.contains("x") || !j.contains("z"))
    throw ConfigError("point must be an object with \"x\" and \"z\" arrays");
  qn::GroupPoint q;
  q.x = j.at("x").get<std::vector<double>>();
  const auto zv = j.at("z").get<std::vector<double>>();
  if (static_cast<int>(q.x.size()) != p.xdim())
    throw ConfigError("point \"x\" must have " + std::to_string(p.xdim()) + " entries");
  if (zv.size() != 3) throw ConfigError("point \"z\" must have 3 entries");
  for (int m = 0; m < 3; ++m) q.z[m] = zv[m];
  return q;
}

std::vector<qn::GroupPoint> load_grid(const std::string& path,
                                      const qn::AnisotropyParams& p) {
  const nlohmann::json j = read_json_file(path);
  std::vector<qn::GroupPoint> pts;
  if (j.contains("points")) {
    for (const auto& e : j.at("points")) pts.push_back(point_from_json(e, p));
  } else if (j.contains("ray")) {
    const auto& r = j.at("ray");
    const qn::GroupPoint base = point_from_json(r.at("point"), p);
    for (double lam : r.at("lambdas").get<std::vector<double>>()) {
      if (lam <= 0.0) throw ConfigError("ray lambdas must be positive");
      pts.push_back(qn::dilate(base, lam));
    }
  } else {
    throw ConfigError(path + ": grid needs a \"points\" array or a \"ray\" object");
  }
  if (pts.empty()) throw ConfigError(path + ": empty grid");
  return pts;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    size_t used = 0;
    out.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw ConfigError("bad number in list: " + tok);
  }
  return out;
}

qn::ZVec parse_theta(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() == 1 && v[0] == 0.0) return {0.0, 0.0, 0.0};
  if (v.size() != 3) throw ConfigError("--theta needs 3 components (or the literal 0)");
  return {v[0], v[1], v[2]};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

void write_kernel_csv(const std::string& path, const qn::AnisotropyParams& p,
                      const std::vector<qn::GroupPoint>& pts,
                      const std::vector<qn::KernelResult>& vals) {
  std::ofstream out = open_out(path);
  for (int i = 1; i <= p.xdim(); ++i) out << "x_" << i << ",";
  out << "z_1,z_2,z_3,value,imag_diagnostic,tail_estimate\n";
  char buf[64];
  auto emit = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    out << buf;
  };
  for (size_t i = 0; i < pts.size(); ++i) {
    for (double v : pts[i].x) emit(v, ',');
    for (int m = 0; m < 3; ++m) emit(pts[i].z[m], ',');
    emit(vals[i].value, ',');
    emit(vals[i].imag_part, ',');
    emit(vals[i].tail_bound, '\n');
  }
}

// ---------------------------------------------------------------------------

int cmd_geodesic_ivp(const std::string& params_path, const std::string& v0_str,
                     const std::string& theta_str, double s1, int samples,
                     const std::string& out, std::string sidecar) {
  const qn::AnisotropyParams p = load_params(params_path);
  qn::GeodesicIVP iv;
  iv.v0 = parse_list(v0_str);
  if (static_cast<int>(iv.v0.size()) != p.xdim())
    throw ConfigError("--v0 needs " + std::to_string(p.xdim()) + " components");
  iv.theta = parse_theta(theta_str);
  if (samples < 2) throw ConfigError("--samples must be at least 2");

  const qn::SampledCurve c = qn::sample_exp_map(p, iv, s1, samples);
  qn::write_curve_csv_file(out, c);

  if (sidecar.empty())
    sidecar = std::filesystem::path(out).replace_extension(".json").string();
  nlohmann::ordered_json j;
  j["v0"] = iv.v0;
  j["theta"] = {iv.theta[0], iv.theta[1], iv.theta[2]};
  j["s1"] = s1;
  j["samples"] = samples;
  j["length"] = qn::norm(iv.v0) * s1;
  j["energy"] = 0.5 * qn::norm2(iv.v0);
  open_out(sidecar) << j.dump(2) << "\n";
  return kOk;
}

int cmd_geodesic_connect(const std::string& params_path, const std::string& target_path,
                         int max_branch, int max_index, double tol, int max_solutions,
                         const std::string& out, const std::string& curves_dir,
                         int samples) {
  const qn::AnisotropyParams p = load_params(params_path);
  const qn::GroupPoint target = point_from_json(read_json_file(target_path), p);
  qn::ConnectOptions opts;
  opts.max_branch = max_branch;
  opts.max_multiindex = max_index;
  opts.max_solutions = max_solutions;
  if (tol > 0.0) opts.endpoint_tol = tol;

  const qn::EnumerationResult res = qn::enumerate_geodesics(p, target, opts);
  open_out(out) << qn::solutions_to_json(p, res.solutions, res.truncated, samples);

  if (!curves_dir.empty()) {
    std::filesystem::create_directories(curves_dir);
    for (size_t i = 0; i < res.solutions.size(); ++i) {
      const auto& s = res.solutions[i];
      char name[64];
      std::snprintf(name, sizeof name, "solution_%03zu.csv", i);
      const qn::SampledCurve c =
          qn::sample_exp_map(p, {s.v0, s.theta}, 1.0, samples);
      qn::write_curve_csv_file((std::filesystem::path(curves_dir) / name).string(), c);
    }
  }
  if (res.solutions.empty()) {
    std::cerr << "no geodesic found under the requested caps\n";
    return kNoSolution;
  }
  return kOk;
}

int cmd_mu(int max_branch, int samples, bool have_level, double level, double beta,
           const std::string& out, std::string roots_path) {
  if (max_branch < 0) throw ConfigError("--max-branch must be >= 0");
  if (samples < 8) throw ConfigError("--samples must be at least 8");
  if (beta < 0.0) throw ConfigError("--beta must be >= 0");

  std::ofstream csv = open_out(out);
  csv << "branch,t,mu,affine\n";
  char buf[128];
  auto emit_branch = [&](int b) {
    // branch 0 spans (-pi, pi); signed branches b cover (b pi, (b+1) pi) and
    // their mirror images, sampled slightly inside the poles
    double lo, hi;
    if (b == 0) {
      lo = -qn::mu_branch_info(0).hi;
      hi = qn::mu_branch_info(0).hi;
    } else {
      const auto info = qn::mu_branch_info(std::abs(b));
      lo = info.lo;
      hi = info.hi;
    }
    const double pad = (hi - lo) * 1e-4;
    for (int i = 0; i < samples; ++i) {
      double t = lo + pad + (hi - lo - 2 * pad) * i / (samples - 1.0);
      if (b < 0) t = -t;
      const double m = qn::mu_fn(t);
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", b, t, m, m + beta * t);
      csv << buf;
    }
  };
  emit_branch(0);
  for (int b = 1; b <= max_branch; ++b) {
    emit_branch(b);
    emit_branch(-b);
  }

  if (have_level) {
    if (roots_path.empty())
      roots_path = std::filesystem::path(out).replace_extension(".roots.json").string();
    nlohmann::ordered_json j;
    j["level"] = level;
    j["beta"] = beta;
    j["max_branch"] = max_branch;
    j["branches"] = nlohmann::ordered_json::array();
    size_t total = 0;
    for (int b = 0; b <= max_branch; ++b) {
      const auto roots = qn::mu_solve_affine(level, beta, b);
      nlohmann::ordered_json e;
      e["branch"] = b;
      e["count"] = roots.size();
      e["roots"] = roots;
      j["branches"].push_back(e);
      total += roots.size();
    }
    j["total_count"] = total;
    open_out(roots_path) << j.dump(2) << "\n";
  }
  return kOk;
}

int cmd_kernel(bool heat, const std::string& params_path, const std::string& point_path,
               const std::string& grid_path, const std::string& quad_path, double time,
               double prefactor, const std::string& eps_str, double tail_tol,
               const std::string& out) {
  const qn::AnisotropyParams p = load_params(params_path);
  if (point_path.empty() == grid_path.empty())
    throw ConfigError("pass exactly one of --point or --grid");
  std::vector<qn::GroupPoint> pts;
  if (!point_path.empty())
    pts.push_back(point_from_json(read_json_file(point_path), p));
  else
    pts = load_grid(grid_path, p);

  qn::QuadratureSpec quad;
  if (!quad_path.empty()) {
    if (looks_like_json(quad_path)) {
      quad = qn::QuadratureSpec::from_json_text(quad_path);
    } else {
      std::ifstream in(quad_path);
      if (!in) throw ConfigError("cannot open " + quad_path);
      std::stringstream ss;
      ss << in.rdbuf();
      quad = qn::QuadratureSpec::from_json_text(ss.str());
    }
  }

  std::vector<qn::KernelResult> vals;
  if (heat) {
    qn::HeatOptions opts;
    opts.quad = quad;
    opts.time = time;
    opts.prefactor = prefactor;
    opts.tail_tol = tail_tol;
    if (time <= 0.0) throw ConfigError("--t must be positive");
    vals = qn::heat_kernel_batch(p, pts, opts);
  } else {
    qn::GreenOptions opts;
    opts.quad = quad;
    opts.tail_tol = tail_tol;
    if (eps_str != "auto") {
      size_t used = 0;
      opts.epsilon = std::stod(eps_str, &used);
      if (used != eps_str.size()) throw ConfigError("--eps needs a number or 'auto'");
    }
    vals = qn::green_function_batch(p, pts, opts);
  }
  write_kernel_csv(out, p, pts, vals);
  int stale = 0;
  for (const auto& v : vals) stale += v.converged ? 0 : 1;
  if (stale > 0)
    std::cerr << stale << " of " << vals.size()
              << " points did not meet the tail tolerance; see the tail_estimate column\n";
  return kOk;
}

int cmd_verify(const std::string& what, std::uint64_t seed, const std::string& out) {
  std::vector<qn::SuiteResult> results;
  if (what == "all") {
    for (const auto& name : qn::verify_suite_names()) {
      results.push_back(qn::run_verify_suite(name, seed));
      const auto& r = results.back();
      std::cerr << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    }
  } else {
    results.push_back(qn::run_verify_suite(what, seed));  // throws on unknown name
    const auto& r = results.back();
    std::cerr << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
  }
  const std::string report = qn::suites_report_json(results, seed);
  std::cout << report;
  if (!out.empty()) open_out(out) << report;
  for (const auto& r : results)
    if (!r.pass) {
      std::cerr << "verification failed in suite '" << r.name << "'\n";
      return kVerifyFail;
    }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropic quaternion group geometry: geodesics, connection, kernels"};
  app.require_subcommand(1);

  std::string params_path, out, sidecar, target_path, point_path, grid_path, quad_path;
  std::string curves_dir, v0_str, theta_str = "0", eps_str = "auto", suite = "all";
  double s1 = 1.0, tol = -1.0, level = 0.0, beta = 0.0, time = 1.0, prefactor = 1.0;
  double tail_tol = 1e-6;
  int samples = 1001, max_branch = 3, max_index = 5, max_solutions = 512;
  int mu_samples = 2001;
  std::uint64_t seed = 42;

  auto* geo = app.add_subcommand("geodesic", "flows and boundary solvers");
  geo->require_subcommand(1);

  auto* ivp = geo->add_subcommand("ivp", "closed-form flow from initial data");
  ivp->add_option("--params", params_path, "anisotropy JSON (default: n=1 isotropic)");
  ivp->add_option("--v0", v0_str, "initial horizontal velocity, comma-separated")
      ->required();
  ivp->add_option("--theta", theta_str, "vertical momentum, 3 components or 0");
  ivp->add_option("--s1", s1, "parameter endpoint");
  ivp->add_option("--samples", samples, "grid size");
  ivp->add_option("--out", out, "curve CSV path")->required();
  ivp->add_option("--sidecar", sidecar, "JSON sidecar path (default: CSV with .json)");

  auto* conn = geo->add_subcommand("connect", "all geodesics to a target point");
  conn->add_option("--params", params_path, "anisotropy JSON");
  conn->add_option("--target", target_path, "target point JSON {\"x\":[..],\"z\":[..]}")
      ->required();
  conn->add_option("--max-branch", max_branch, "highest oscillation branch per block");
  conn->add_option("--max-index", max_index, "highest winding number per closed block");
  conn->add_option("--max-solutions", max_solutions, "hard cap on reported solutions");
  conn->add_option("--tol", tol, "endpoint acceptance tolerance");
  conn->add_option("--out", out, "solutions JSON path")->required();
  conn->add_option("--emit-curves", curves_dir, "write one curve CSV per solution here");
  conn->add_option("--samples", samples, "samples per emitted curve");

  auto* mu = app.add_subcommand("mu", "branch samples and level crossings");
  mu->add_option("--max-branch", max_branch, "emit branches up to this index");
  mu->add_option("--samples", mu_samples, "samples per branch");
  auto* level_opt = mu->add_option("--level", level, "solve mu(t) + beta t = level");
  mu->add_option("--beta", beta, "linear coefficient of the affine term");
  mu->add_option("--out", out, "samples CSV path")->required();
  mu->add_option("--roots", sidecar, "roots JSON path (default: CSV with .roots.json)");

  auto* kernel = app.add_subcommand("kernel", "sub-Laplacian kernels by quadrature");
  kernel->require_subcommand(1);
  for (const char* name : {"heat", "green"}) {
    auto* k = kernel->add_subcommand(name);
    k->add_option("--params", params_path, "anisotropy JSON");
    k->add_option("--point", point_path, "single evaluation point JSON");
    k->add_option("--grid", grid_path, "grid JSON: {\"points\":[..]} or {\"ray\":{..}}");
    k->add_option("--quad", quad_path, "quadrature JSON {half_width, nodes}");
    k->add_option("--tail-tol", tail_tol, "relative tail tolerance");
    k->add_option("--out", out, "values CSV path")->required();
    if (std::string(name) == "heat") {
      k->add_option("--t", time, "diffusion time");
      k->add_option("--prefactor", prefactor, "normalization constant");
    } else {
      k->add_option("--eps", eps_str, "contour shift: number or 'auto'");
    }
  }

  auto* verify = app.add_subcommand("verify", "run self-check suites");
  verify->add_option("what", suite, "'all' or a suite name");
  verify->add_option("--seed", seed, "draw seed; the report is a function of it");
  verify->add_option("--out", out, "also write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (ivp->parsed())
      return cmd_geodesic_ivp(params_path, v0_str, theta_str, s1, samples, out, sidecar);
    if (conn->parsed())
      return cmd_geodesic_connect(params_path, target_path, max_branch, max_index, tol,
                                  max_solutions, out, curves_dir, samples);
    if (mu->parsed())
      return cmd_mu(max_branch, mu_samples, level_opt->count() > 0, level, beta, out,
                    sidecar);
    if (kernel->parsed()) {
      const bool heat = kernel->get_subcommands().front()->get_name() == "heat";
      return cmd_kernel(heat, params_path, point_path, grid_path, quad_path, time,
                        prefactor, eps_str, tail_tol, out);
    }
    if (verify->parsed()) return cmd_verify(suite, seed, out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kConfig;
}
