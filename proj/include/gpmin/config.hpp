#pragma once

// Sweep configuration files: `key = value` lines, `#` starts a comment.
//
//   potential  = power_well h0=1 p=2
//   L          = 16
//   n          = 512
//   a_schedule = geom:0.03,0.7,6     # a_k = a* (1 - 0.03 * 0.7^k)
//   a_schedule = 0.9, 0.95, 0.975    # values of a / a*
//   tol        = 1e-5
//   max_iters  = 20000
//   out_dir    = report

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpmin/error.hpp"
#include "gpmin/potentials.hpp"

namespace gpmin {

struct SweepConfig {
  PotentialSpec potential;
  std::string potential_text = "zero";
  double L = 16.0;
  std::size_t n = 256;
  std::vector<double> fractions;  // a / a*, ascending
  std::string schedule_text;
  double tol = 1e-6;
  std::size_t max_iters = 20000;
  std::optional<std::filesystem::path> out_dir;
  std::map<std::string, std::string> raw;  // every key as written

  std::vector<double> schedule(double a_star) const {
    std::vector<double> out;
    out.reserve(fractions.size());
    for (double f : fractions) out.push_back(f * a_star);
    return out;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::size_t parse_count(std::string_view text, std::string_view what) {
  const double v = parse_number(text, what);
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
    throw Error(ErrorKind::Config, std::string(what) + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Fractions a/a* from `f1, f2, ...` or `geom:start,ratio,count`.
inline std::vector<double> parse_schedule(std::string_view text) {
  std::vector<double> out;
  const std::string body = detail::trim(text);
  if (body.rfind("geom:", 0) == 0) {
    const auto parts = detail::split(std::string_view(body).substr(5), ',');
    if (parts.size() != 3) throw Error(ErrorKind::Config, "geom schedule needs start,ratio,count");
    const double start = detail::parse_number(parts[0], "geom start");
    const double ratio = detail::parse_number(parts[1], "geom ratio");
    const std::size_t count = detail::parse_count(parts[2], "geom count");
    if (!(start > 0.0 && start < 1.0) || !(ratio > 0.0 && ratio < 1.0))
      throw Error(ErrorKind::Config, "geom schedule needs 0 < start < 1 and 0 < ratio < 1");
    for (std::size_t k = 0; k < count; ++k) out.push_back(1.0 - start * std::pow(ratio, static_cast<double>(k)));
  } else {
    for (const auto& part : detail::split(body, ',')) out.push_back(detail::parse_number(part, "a_schedule"));
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty a_schedule");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] >= 0.0 && out[i] < 1.0)) throw Error(ErrorKind::Config, "a_schedule values must lie in [0, 1)");
    if (i > 0 && !(out[i] > out[i - 1])) throw Error(ErrorKind::Config, "a_schedule must be strictly increasing");
  }
  return out;
}

inline SweepConfig parse_config(std::string_view text) {
  SweepConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (value.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty value for " + key);
    if (cfg.raw.count(key)) throw Error(ErrorKind::Config, "duplicate key '" + key + "'");
    cfg.raw[key] = value;

    if (key == "potential") {
      cfg.potential = parse_potential(value);
      cfg.potential_text = value;
    } else if (key == "L") {
      cfg.L = detail::parse_number(value, "L");
      if (!(cfg.L > 0.0)) throw Error(ErrorKind::Config, "L must be positive");
    } else if (key == "n") {
      cfg.n = detail::parse_count(value, "n");
      if (cfg.n % 2 != 0 || cfg.n < 16) throw Error(ErrorKind::Config, "n must be even and at least 16");
    } else if (key == "a_schedule") {
      cfg.fractions = parse_schedule(value);
      cfg.schedule_text = value;
    } else if (key == "tol") {
      cfg.tol = detail::parse_number(value, "tol");
      if (!(cfg.tol > 0.0)) throw Error(ErrorKind::Config, "tol must be positive");
    } else if (key == "max_iters") {
      cfg.max_iters = detail::parse_count(value, "max_iters");
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else {
      throw Error(ErrorKind::Config, "unknown key '" + key + "'");
    }
  }
  if (cfg.fractions.empty()) throw Error(ErrorKind::Config, "a_schedule is required");
  return cfg;
}

inline SweepConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace gpmin
