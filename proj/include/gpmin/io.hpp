#pragma once

// Text outputs: shortest round-trip number formatting, CSV tables and the
// JSON forms of profiles and reports.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpmin/diagnostics.hpp"
#include "gpmin/energy.hpp"
#include "gpmin/error.hpp"
#include "gpmin/minimizer.hpp"
#include "gpmin/potentials.hpp"
#include "gpmin/soliton.hpp"
#include "gpmin/spectrum.hpp"

namespace gpmin::io {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double; "nan",
/// "inf" and "-inf" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path), path_(path) {
    if (!out_) throw Error(ErrorKind::FileFormat, "cannot open " + path.string() + " for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    if (!out_) throw Error(ErrorKind::FileFormat, "write failed for " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::FileFormat, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::FileFormat, "write failed for " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileFormat, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FileFormat, path.string() + ": " + e.what());
  }
}

inline Json to_json(const Point& p) { return Json::array({p.x, p.y}); }

inline Json profile_to_json(const RadialProfile& profile, double tol) {
  const auto id = identity_residuals(profile);
  Json j;
  j["tol"] = tol;
  j["amplitude"] = profile.shoot_amplitude;
  j["mass"] = profile.mass;
  j["kinetic"] = profile.kinetic;
  j["quartic"] = profile.quartic;
  j["identities"] = {{"mass_vs_kinetic", id.mass_vs_kinetic}, {"mass_vs_quartic", id.mass_vs_quartic}};
  j["moments"] = {{"p1", radial_moment(profile, 1.0)}, {"p2", radial_moment(profile, 2.0)}};
  j["mesh_step"] = profile.mesh_step;
  j["match_radius"] = profile.match_radius;
  j["tail_coefficient"] = profile.tail_coefficient;
  j["r"] = profile.r;
  j["Q"] = profile.q;
  j["Q_prime"] = profile.q_prime;
  return j;
}

/// Rebuilds a profile written by profile_to_json; FileFormat on missing
/// fields, InvalidProfile when the stored data fail validation.
inline RadialProfile profile_from_json(const Json& j) {
  RadialProfile p;
  try {
    p.r = j.at("r").get<std::vector<double>>();
    p.q = j.at("Q").get<std::vector<double>>();
    p.q_prime = j.at("Q_prime").get<std::vector<double>>();
    p.shoot_amplitude = j.at("amplitude").get<double>();
    p.mass = j.at("mass").get<double>();
    p.kinetic = j.at("kinetic").get<double>();
    p.quartic = j.at("quartic").get<double>();
    p.mesh_step = j.at("mesh_step").get<double>();
    p.match_radius = j.at("match_radius").get<double>();
    p.tail_coefficient = j.at("tail_coefficient").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FileFormat, std::string("profile file: ") + e.what());
  }
  validate_profile(p);
  return p;
}

inline Json to_json(const EnergyBreakdown& e) {
  return {{"kinetic", e.kinetic}, {"potential", e.potential}, {"quartic", e.quartic},
          {"coupling", e.coupling}, {"total", e.total}};
}

inline Json to_json(const MinimizerResult& r) {
  return {{"E", r.E},
          {"residual", r.residual},
          {"iters", r.iters},
          {"converged", r.converged},
          {"eps", r.eps},
          {"under_resolved", r.under_resolved},
          {"chemical_potential", r.chemical_potential}};
}

inline Json to_json(const SpectrumReport& s) {
  return {{"lambda0", s.lambda0},           {"residual", s.residual},
          {"ess_inf_V", s.ess_inf_V},       {"ess_inf_allowance", s.ess_inf_allowance},
          {"v1_margin", s.v1_margin},       {"margin_tolerance", s.margin_tolerance},
          {"passes_v1", s.passes_v1}};
}

inline Json to_json(const V2Report& v) {
  return {{"conv_min_value", v.conv_min_value},
          {"conv_min_location", to_json(v.conv_min_location)},
          {"attained_interior", v.attained_interior},
          {"degenerate_flat", v.degenerate_flat},
          {"stable_under_doubling", v.stable_under_doubling},
          {"ess_inf_V", v.ess_inf},
          {"epsilon", v.epsilon},
          {"margin", v.margin}};
}

inline Json to_json(const BlowupFit& f) {
  Json j{{"exponent", f.exponent},
         {"prefactor", f.prefactor},
         {"window", Json::array({f.window.first, f.window.second})},
         {"points", f.points}};
  if (std::isfinite(f.predicted_exponent)) {
    j["predicted_exponent"] = f.predicted_exponent;
    j["predicted_prefactor"] = f.predicted_prefactor;
  }
  return j;
}

}  // namespace gpmin::io
