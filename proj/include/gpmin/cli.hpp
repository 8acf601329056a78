#pragma once

// The `gp` command line: soliton, energy, minimize, sweep, check-v1,
// check-v2 and blowup. Exit codes: 0 success, 2 configuration or input
// error, 3 numerical failure (outputs written so far are kept and the
// manifest records the error).

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gpmin/config.hpp"
#include "gpmin/diagnostics.hpp"
#include "gpmin/energy.hpp"
#include "gpmin/error.hpp"
#include "gpmin/gpf.hpp"
#include "gpmin/io.hpp"
#include "gpmin/minimizer.hpp"
#include "gpmin/potentials.hpp"
#include "gpmin/soliton.hpp"
#include "gpmin/spectrum.hpp"

namespace gpmin::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr double kSolitonTol = 1e-12;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
    case ErrorKind::OddSampleCount:
    case ErrorKind::GridMismatch:
    case ErrorKind::FileFormat:
    case ErrorKind::UnnormalizedInput:
    case ErrorKind::BoxTooSmall:
    case ErrorKind::CriticalCouplingGuard:
      return kConfigError;
    default:
      return kNumericalError;
  }
}

/// Bookkeeping for one run: the files written and the manifest describing
/// them, stored as manifest.json next to the outputs.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args, std::uint64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    json_["artifact"] = "gpmin";
    json_["version"] = kVersion;
    json_["command"] = std::move(command);
    json_["arguments"] = std::move(args);
    json_["seed"] = seed;
  }

  io::Json& json() { return json_; }

  void set_directory(std::filesystem::path dir) { dir_ = std::move(dir); }
  const std::optional<std::filesystem::path>& directory() const { return dir_; }

  void record_output(const std::filesystem::path& path) { outputs_.push_back(path.filename().string()); }

  void set_grid(const Grid2D& grid) {
    json_["grid"] = {{"L", grid.half_width()}, {"n", grid.n()}, {"dx", grid.dx()}};
  }

  void fail(const Error& e) {
    json_["status"] = "error";
    json_["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
  }

  void write() {
    if (!dir_) return;
    if (!json_.contains("status")) json_["status"] = "ok";
    json_["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    outputs_.push_back("manifest.json");
    json_["outputs"] = outputs_;
    io::write_json(*dir_ / "manifest.json", json_);
  }

 private:
  io::Json json_;
  std::optional<std::filesystem::path> dir_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

/// A potential argument: the spec grammar, or a bare path to a GPF1 file.
inline PotentialSpec potential_from_argument(const std::string& text) {
  const std::string head = text.substr(0, text.find(' '));
  for (const char* keyword : {"zero", "constant", "power_well", "lattice", "sinc"})
    if (head == keyword) return parse_potential(text);
  if (text.rfind("file:", 0) == 0) return parse_potential(text);
  return PotentialSpec::from_file(text);
}

/// The grid of a run: taken from the file for file potentials (and checked
/// against --L/--n when those were given), else built from L and n.
inline Grid2D grid_for(const PotentialSpec& spec, double L, std::size_t n, bool explicit_grid) {
  if (spec.kind == PotentialKind::FromFile) {
    const Field f = gpf::read(spec.path);
    if (explicit_grid && !(f.grid() == make_grid(L, n)))
      throw Error(ErrorKind::GridMismatch, "potential file grid differs from --L/--n");
    return f.grid();
  }
  return make_grid(L, n);
}

inline std::filesystem::path prepare_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create directory " + dir.string() + ": " + ec.message());
  return dir;
}

inline std::filesystem::path parent_directory(const std::filesystem::path& file) {
  const auto parent = file.parent_path();
  return prepare_directory(parent.empty() ? std::filesystem::path(".") : parent);
}

inline double solve_a_star(Manifest& manifest) {
  const double a_star = critical_coupling(solve_townes(kSolitonTol));
  manifest.json()["a_star"] = a_star;
  return a_star;
}

struct Options {
  double tol = 0.0;
  std::string out;
  std::string field;
  std::string potential;
  std::string config;
  std::string profile;
  std::string init_field;
  double a = 0.0;
  double L = 16.0;
  std::size_t n = 256;
  std::size_t max_iters = 20000;
  double epsilon = 0.01;
  std::uint64_t seed = 0;
};

inline int cmd_soliton(const Options& o, Manifest& m) {
  const std::filesystem::path out(o.out);
  m.set_directory(parent_directory(out));
  const RadialProfile profile = solve_townes(o.tol);
  m.json()["a_star"] = critical_coupling(profile);
  io::write_json(out, io::profile_to_json(profile, o.tol));
  m.record_output(out);
  return kOk;
}

inline int cmd_energy(const Options& o, Manifest& m) {
  const Field u = gpf::read(o.field);
  const PotentialSpec spec = potential_from_argument(o.potential);
  const Field V = realize(spec, u.grid());
  m.set_grid(u.grid());
  const io::Json j = io::to_json(energy(u, V, o.a));
  std::cout << j.dump(2) << '\n';
  if (!o.out.empty()) {
    m.set_directory(parent_directory(o.out));
    io::write_json(o.out, j);
    m.record_output(o.out);
  }
  return kOk;
}

inline int cmd_minimize(const Options& o, Manifest& m, bool explicit_grid) {
  const std::filesystem::path out(o.out);
  m.set_directory(parent_directory(out));
  const PotentialSpec spec = potential_from_argument(o.potential);
  const Grid2D grid = grid_for(spec, o.L, o.n, explicit_grid);
  m.set_grid(grid);
  const Field V = realize(spec, grid);
  const double a_star = solve_a_star(m);
  MinimizerOptions opts;
  opts.tol_residual = o.tol;
  opts.max_iters = o.max_iters;
  opts.record_trace = false;
  std::optional<Field> init;
  if (!o.init_field.empty()) {
    init = gpf::read(o.init_field);
    opts.init_kind = InitKind::FromFile;
  }
  const MinimizerResult r = minimize(V, o.a, a_star, opts, init);
  io::Json j = io::to_json(r);
  j["a"] = o.a;
  j["a_over_a_star"] = o.a / a_star;
  j["potential"] = describe(spec);
  io::write_json(out, j);
  m.record_output(out);
  if (!o.field.empty()) {
    gpf::write(o.field, r.u);
    m.record_output(o.field);
  }
  if (!r.converged) {
    m.fail(Error(ErrorKind::NonConvergence, "residual " + io::format_number(r.residual) + " above tolerance"));
    return kNumericalError;
  }
  return kOk;
}

struct SweepRun {
  SweepConfig cfg;
  PotentialSpec spec;
  Grid2D grid;
  double a_star;
  std::vector<SweepEntry> entries;
};

inline SweepRun run_sweep(const Options& o, Manifest& m) {
  SweepConfig cfg = load_config(o.config);
  std::filesystem::path dir = !o.out.empty() ? std::filesystem::path(o.out)
                              : cfg.out_dir ? *cfg.out_dir
                                            : std::filesystem::path(".");
  m.set_directory(prepare_directory(dir));
  io::Json echo;
  for (const auto& [k, v] : cfg.raw) echo[k] = v;
  m.json()["config"] = echo;
  const Grid2D grid = grid_for(cfg.potential, cfg.L, cfg.n, cfg.raw.count("L") || cfg.raw.count("n"));
  m.set_grid(grid);
  const Field V = realize(cfg.potential, grid);
  const double a_star = solve_a_star(m);
  MinimizerOptions opts;
  opts.tol_residual = cfg.tol;
  opts.max_iters = cfg.max_iters;
  opts.record_trace = false;
  auto entries = continuation_sweep(V, cfg.schedule(a_star), a_star, opts);
  const PotentialSpec spec = cfg.potential;
  return {std::move(cfg), spec, grid, a_star, std::move(entries)};
}

inline std::string field_name(const char* stem, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.gpf", stem, index);
  return buf;
}

inline int cmd_sweep(const Options& o, Manifest& m) {
  const SweepRun run = run_sweep(o, m);
  const auto dir = *m.directory();
  io::CsvWriter csv(dir / "sweep.csv", {"a", "a_over_a_star", "E", "eps", "residual", "iters", "converged",
                                        "under_resolved", "field", "error"});
  m.record_output(dir / "sweep.csv");
  bool ok = true;
  for (std::size_t i = 0; i < run.entries.size(); ++i) {
    const auto& e = run.entries[i];
    const std::string a = io::format_number(e.a), frac = io::format_number(e.a / run.a_star);
    if (!e.result) {
      ok = false;
      csv.row({a, frac, "nan", "nan", "nan", "0", "0", "0", "", "\"" + e.error + "\""});
      continue;
    }
    const auto& r = *e.result;
    const std::string name = field_name("field", i);
    gpf::write(dir / name, r.u);
    m.record_output(dir / name);
    ok = ok && r.converged;
    csv.row({a, frac, io::format_number(r.E), io::format_number(r.eps), io::format_number(r.residual),
             std::to_string(r.iters), r.converged ? "1" : "0", r.under_resolved ? "1" : "0", name, ""});
  }
  if (!ok) {
    m.fail(Error(ErrorKind::NonConvergence, "at least one sweep entry failed or did not converge"));
    return kNumericalError;
  }
  return kOk;
}

inline int cmd_blowup(const Options& o, Manifest& m) {
  std::optional<RadialProfile> profile;
  if (!o.profile.empty()) {
    if (!std::filesystem::exists(o.profile)) throw Error(ErrorKind::Config, "missing profile file " + o.profile);
    profile = io::profile_from_json(io::read_json(o.profile));
  }
  const SweepRun run = run_sweep(o, m);
  if (!profile) profile = solve_townes(kSolitonTol);
  const auto dir = *m.directory();
  const SweepReport report = analyze_sweep(run.entries, *profile);

  io::CsvWriter csv(dir / "entries.csv", {"a", "E", "eps", "L2_dist", "H1_dist", "resolved"});
  m.record_output(dir / "entries.csv");
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const auto& r = report.records[i];
    const bool ran = run.entries[i].result.has_value();
    csv.row({io::format_number(r.a), ran ? io::format_number(r.E) : "nan", ran ? io::format_number(r.eps) : "nan",
             io::format_number(r.l2_dist), io::format_number(r.h1_dist), r.resolved ? "1" : "0"});
    if (report.aligned[i]) {
      const std::string name = field_name("aligned", i);
      gpf::write(dir / name, *report.aligned[i]);
      m.record_output(dir / name);
    }
  }

  const BlowupFit fit = run.spec.kind == PotentialKind::PowerWell
                            ? blowup_fit(report.records, run.a_star, *profile, run.spec.p, run.spec.h0)
                            : fit_power_law(report.records, run.a_star);
  io::write_json(dir / "fit.json", io::to_json(fit));
  m.record_output(dir / "fit.json");
  return kOk;
}

inline int cmd_check_v1(const Options& o, Manifest& m, bool explicit_grid) {
  const PotentialSpec spec = potential_from_argument(o.potential);
  const Grid2D grid = grid_for(spec, o.L, o.n, explicit_grid);
  m.set_grid(grid);
  const io::Json j = io::to_json(check_v1(spec, grid, o.tol));
  std::cout << j.dump(2) << '\n';
  if (!o.out.empty()) {
    m.set_directory(parent_directory(o.out));
    io::write_json(o.out, j);
    m.record_output(o.out);
  }
  return kOk;
}

inline int cmd_check_v2(const Options& o, Manifest& m, bool explicit_grid) {
  const PotentialSpec spec = potential_from_argument(o.potential);
  Grid2D grid = grid_for(spec, o.L, o.n, explicit_grid);
  std::optional<Field> u;
  if (!o.field.empty()) {
    u = gpf::read(o.field);
    grid = u->grid();
  } else {
    u = gaussian_field(grid, grid_point(grid, argmin_index(realize(spec, grid))), 1.0);
  }
  m.set_grid(grid);
  const io::Json j = io::to_json(check_v2(spec, *u, o.epsilon));
  std::cout << j.dump(2) << '\n';
  if (!o.out.empty()) {
    m.set_directory(parent_directory(o.out));
    io::write_json(o.out, j);
    m.record_output(o.out);
  }
  return kOk;
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Gross-Pitaevskii minimizers near critical coupling"};
  app.require_subcommand(1);
  Options o;

  auto* soliton = app.add_subcommand("soliton", "Townes profile, identities and moments as JSON");
  soliton->add_option("--tol", o.tol, "bisection bracket width")->default_val(1e-12);
  soliton->add_option("--out", o.out, "profile JSON path")->required();

  auto* energy_cmd = app.add_subcommand("energy", "energy breakdown of a GPF1 field");
  energy_cmd->add_option("--field", o.field, "GPF1 field")->required();
  energy_cmd->add_option("--potential", o.potential, "potential spec or GPF1 path")->required();
  energy_cmd->add_option("--a", o.a, "coupling a")->required();
  energy_cmd->add_option("--out", o.out, "also write the JSON here");

  auto add_grid = [&o](CLI::App* cmd) {
    cmd->add_option("--L", o.L, "box half-width")->default_val(16.0);
    cmd->add_option("--n", o.n, "samples per axis")->default_val(256);
  };

  auto* minimize_cmd = app.add_subcommand("minimize", "ground state of E_a at one coupling");
  minimize_cmd->add_option("--potential", o.potential, "potential spec or GPF1 path")->required();
  minimize_cmd->add_option("--a", o.a, "coupling a")->required();
  add_grid(minimize_cmd);
  minimize_cmd->add_option("--tol", o.tol, "projected gradient tolerance")->default_val(1e-6);
  minimize_cmd->add_option("--max-iters", o.max_iters, "iteration cap")->default_val(20000);
  minimize_cmd->add_option("--init-field", o.init_field, "GPF1 starting field");
  minimize_cmd->add_option("--out", o.out, "result JSON path")->required();
  minimize_cmd->add_option("--field", o.field, "write the minimizer as GPF1");

  auto* sweep = app.add_subcommand("sweep", "continuation sweep from a config file");
  sweep->add_option("--config", o.config, "sweep config")->required();
  sweep->add_option("--out", o.out, "output directory (overrides out_dir)");

  auto* v1 = app.add_subcommand("check-v1", "spectral gap inf sigma(-Lap+V) - ess inf V");
  v1->add_option("--potential", o.potential, "potential spec or GPF1 path")->required();
  add_grid(v1);
  v1->add_option("--tol", o.tol, "eigen-residual tolerance")->default_val(1e-7);
  v1->add_option("--out", o.out, "also write the JSON here");

  auto* v2 = app.add_subcommand("check-v2", "minimum of V * |u|^2");
  v2->add_option("--potential", o.potential, "potential spec or GPF1 path")->required();
  add_grid(v2);
  v2->add_option("--field", o.field, "GPF1 field u (default: unit Gaussian at the minimum of V)");
  v2->add_option("--eps", o.epsilon, "slack epsilon")->default_val(0.01);
  v2->add_option("--out", o.out, "also write the JSON here");

  auto* blowup = app.add_subcommand("blowup", "sweep, aligned profiles and the blow-up fit");
  blowup->add_option("--config", o.config, "sweep config")->required();
  blowup->add_option("--profile", o.profile, "profile JSON from `gp soliton`");
  blowup->add_option("--out", o.out, "output directory (overrides out_dir)");

  for (auto* cmd : {soliton, energy_cmd, minimize_cmd, sweep, v1, v2, blowup})
    cmd->add_option("--seed", o.seed, "seed recorded in the manifest")->default_val(0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  CLI::App* cmd = app.get_subcommands().front();
  std::vector<std::string> args(argv + 1, argv + argc);
  Manifest manifest(cmd->get_name(), args, o.seed);
  auto given = [cmd](const char* name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  const bool explicit_grid = given("--L") || given("--n");
  // default_val only fills the help text; --tol is shared between
  // subcommands with different defaults, so apply them here.
  if (!given("--tol")) o.tol = cmd == soliton ? kSolitonTol : cmd == v1 ? 1e-7 : 1e-6;
  int code = kOk;
  try {
    if (cmd == soliton) code = cmd_soliton(o, manifest);
    else if (cmd == energy_cmd) code = cmd_energy(o, manifest);
    else if (cmd == minimize_cmd) code = cmd_minimize(o, manifest, explicit_grid);
    else if (cmd == sweep) code = cmd_sweep(o, manifest);
    else if (cmd == v1) code = cmd_check_v1(o, manifest, explicit_grid);
    else if (cmd == v2) code = cmd_check_v2(o, manifest, explicit_grid);
    else if (cmd == blowup) code = cmd_blowup(o, manifest);
  } catch (const Error& e) {
    std::cerr << "gp " << cmd->get_name() << ": " << e.what() << '\n';
    manifest.fail(e);
    code = exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "gp " << cmd->get_name() << ": " << e.what() << '\n';
    manifest.fail(Error(ErrorKind::InvalidArgument, e.what()));
    code = kNumericalError;
  }
  try {
    manifest.write();
  } catch (const Error& e) {
    std::cerr << "gp: " << e.what() << '\n';
    if (code == kOk) code = kConfigError;
  }
  return code;
}

}  // namespace gpmin::cli
