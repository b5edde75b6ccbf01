#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "anisohit/error.hpp"
#include "anisohit/heat/model.hpp"

namespace anisohit::cli {

// Flat key = value settings; '#' starts a comment.
struct ExperimentConfig {
  double H = 0.75;
  double alpha = 0.0;
  int d = 1;
  int D = 1;
  double t0 = 0.1;
  double T = 1.0;
  double M = 1.0;

  std::string experiment;
  std::size_t n_samples = 10000;
  std::uint64_t seed = 1;
  std::string out = ".";

  int grid_times = 64;
  int grid_sites = 64;
  std::vector<int> refinements{16, 32, 64};  // points per axis of each polarity grid
  std::vector<double> eps;                   // radii for hit-mc and small-ball
  std::vector<double> center;                // target centre in R^D, zero when empty
  std::string inflation = "envelope";        // none | envelope | modulus
  double inflation_constant = 3.0;

  int n_pairs = 1000;
  double beta = 0.5;
  int n_cells = 128;
  int growth_grid = 1024;

  HeatModel model() const { return HeatModel(H, alpha, d, D, t0, T, M); }
  std::vector<double> centre_or_origin() const { return center.empty() ? std::vector<double>(D, 0.0) : center; }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value for " + key + ": '" + v + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw ConfigError("config: non-finite value for " + key);
  }
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

}  // namespace config_detail

inline void validate(const ExperimentConfig& c) {
  const double s = 4.0 * c.H - (c.d - c.alpha);
  if (!(s > 0.0 && s < 4.0)) throw ConfigError("config: 4H - (d - alpha) must lie in (0, 4)");
  (void)c.model();
  if (c.n_samples < 100) throw ConfigError("config: n_samples must be at least 100");
  if (c.grid_times < 1 || c.grid_sites < 1) throw ConfigError("config: grid sizes must be positive");
  for (int r : c.refinements)
    if (r < 2) throw ConfigError("config: refinements need at least 2 points per axis");
  if (!c.center.empty() && static_cast<int>(c.center.size()) != c.D)
    throw ConfigError("config: center must have D coordinates");
  for (double e : c.eps)
    if (!(e > 0.0)) throw ConfigError("config: eps values must be positive");
  if (c.inflation != "none" && c.inflation != "envelope" && c.inflation != "modulus")
    throw ConfigError("config: inflation must be none, envelope or modulus");
  if (!(c.inflation_constant > 0.0)) throw ConfigError("config: inflation_constant must be positive");
  if (c.n_pairs < 100) throw ConfigError("config: n_pairs must be at least 100");
  if (c.n_cells < 2) throw ConfigError("config: n_cells must be at least 2");
  if (c.growth_grid < 16) throw ConfigError("config: growth_grid must be at least 16");
}

inline ExperimentConfig parse_config(std::istream& in) {
  using namespace config_detail;
  ExperimentConfig c;
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: line " + std::to_string(lineno) + " has an empty key or value");
    if (!kv.emplace(key, value).second) throw ConfigError("config: duplicate key " + key);
  }
  for (const auto& [k, v] : kv) {
    if (k == "H") c.H = parse_number<double>(k, v);
    else if (k == "alpha") c.alpha = parse_number<double>(k, v);
    else if (k == "d") c.d = parse_number<int>(k, v);
    else if (k == "D") c.D = parse_number<int>(k, v);
    else if (k == "t0") c.t0 = parse_number<double>(k, v);
    else if (k == "T") c.T = parse_number<double>(k, v);
    else if (k == "M") c.M = parse_number<double>(k, v);
    else if (k == "experiment") c.experiment = v;
    else if (k == "n_samples") c.n_samples = parse_number<std::size_t>(k, v);
    else if (k == "seed") c.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "out") c.out = v;
    else if (k == "grid_times") c.grid_times = parse_number<int>(k, v);
    else if (k == "grid_sites") c.grid_sites = parse_number<int>(k, v);
    else if (k == "refinements") c.refinements = parse_list<int>(k, v);
    else if (k == "eps") c.eps = parse_list<double>(k, v);
    else if (k == "center") c.center = parse_list<double>(k, v);
    else if (k == "inflation") c.inflation = v;
    else if (k == "inflation_constant") c.inflation_constant = parse_number<double>(k, v);
    else if (k == "n_pairs") c.n_pairs = parse_number<int>(k, v);
    else if (k == "beta") c.beta = parse_number<double>(k, v);
    else if (k == "n_cells") c.n_cells = parse_number<int>(k, v);
    else if (k == "growth_grid") c.growth_grid = parse_number<int>(k, v);
    else throw ConfigError("config: unknown key " + k);
  }
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  return parse_config(in);
}

}  // namespace anisohit::cli
