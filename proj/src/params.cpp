#include "qn/params.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qn {

AnisotropyParams::AnisotropyParams(int n, std::array<std::vector<double>, 3> a)
    : n_(n), a_(std::move(a)) {
  validate();
  max_a2_ = 0.0;
  min_a2_ = a_[0][0] * a_[0][0];
  for (int m = 0; m < 3; ++m)
    for (double v : a_[m]) {
      max_a2_ = std::max(max_a2_, v * v);
      min_a2_ = std::min(min_a2_, v * v);
    }
}

AnisotropyParams AnisotropyParams::isotropic(int n, double value) {
  std::array<std::vector<double>, 3> a;
  for (int m = 0; m < 3; ++m) a[m].assign(static_cast<size_t>(n), value);
  return AnisotropyParams(n, std::move(a));
}

void AnisotropyParams::validate() const {
  if (n_ < 1) throw std::runtime_error("params: n must be >= 1");
  for (int m = 0; m < 3; ++m) {
    if (static_cast<int>(a_[m].size()) != n_)
      throw std::runtime_error("params: row " + std::to_string(m + 1) +
                               " of a must have n entries");
    for (double v : a_[m])
      if (!(v > 0.0))
        throw std::runtime_error("params: all anisotropy weights must be > 0");
  }
}

AnisotropyParams AnisotropyParams::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("params: bad JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("n") || !j.contains("a"))
    throw std::runtime_error("params: expected object with keys n, a");
  if (!j["n"].is_number_integer())
    throw std::runtime_error("params: n must be an integer");
  const int n = j["n"].get<int>();
  if (!j["a"].is_array() || j["a"].size() != 3)
    throw std::runtime_error("params: a must be an array of 3 rows");
  std::array<std::vector<double>, 3> a;
  for (int m = 0; m < 3; ++m) {
    if (!j["a"][m].is_array())
      throw std::runtime_error("params: a rows must be arrays");
    for (const auto& v : j["a"][m]) {
      if (!v.is_number()) throw std::runtime_error("params: a entries must be numbers");
      a[m].push_back(v.get<double>());
    }
  }
  return AnisotropyParams(n, std::move(a));
}

AnisotropyParams AnisotropyParams::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("params: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string AnisotropyParams::to_json_text() const {
  nlohmann::ordered_json j;
  j["n"] = n_;
  j["a"] = {a_[0], a_[1], a_[2]};
  return j.dump();
}

}  // namespace qn
