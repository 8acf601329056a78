#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gpmin/cli.hpp"
#include "gpmin/config.hpp"
#include "gpmin/io.hpp"
#include "support.hpp"

using namespace gpmin;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gpmin_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "gp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
  }

  fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

ErrorKind config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted config:\n" << text;
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(Config, ParsesAllKeys) {
  const auto cfg = parse_config(
      "# harmonic sweep\n"
      "potential = power_well h0=1 p=2\n"
      "L = 12   # half-width\n"
      "n = 128\n"
      "a_schedule = 0.5, 0.8,0.9\n"
      "tol = 1e-5\n"
      "max_iters = 500\n"
      "out_dir = report\n");
  EXPECT_EQ(cfg.potential.kind, PotentialKind::PowerWell);
  EXPECT_EQ(cfg.L, 12.0);
  EXPECT_EQ(cfg.n, 128u);
  EXPECT_EQ(cfg.fractions, (std::vector<double>{0.5, 0.8, 0.9}));
  EXPECT_EQ(cfg.tol, 1e-5);
  EXPECT_EQ(cfg.max_iters, 500u);
  ASSERT_TRUE(cfg.out_dir);
  EXPECT_EQ(*cfg.out_dir, "report");
  EXPECT_EQ(cfg.schedule(10.0), (std::vector<double>{5.0, 8.0, 9.0}));
}

TEST(Config, GeometricSchedule) {
  const auto f = parse_schedule("geom:0.03,0.7,4");
  ASSERT_EQ(f.size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(f[static_cast<std::size_t>(k)], 1.0 - 0.03 * std::pow(0.7, k));
}

TEST(Config, Errors) {
  EXPECT_EQ(config_error("potential = sinc\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 0.5\ncolour = blue\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 0.5\na_schedule = 0.6\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 0.5\nL\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 0.5\nn = 63\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 0.9, 0.5\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 1.0\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = geom:0.03,1.5,4\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = geom:0.03,0.5\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 0.5\ntol = -1\n"), ErrorKind::Config);
  EXPECT_EQ(config_error("a_schedule = 0.5\npotential = wobbly\n"), ErrorKind::Config);
  EXPECT_THROW(load_config("/nonexistent/sweep.cfg"), Error);
}

TEST(Format, ShortestRoundTrip) {
  std::mt19937_64 rng(gpmin::testing::kSeed);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(mant(rng), expo(rng));
    EXPECT_EQ(std::stod(io::format_number(v)), v);
  }
  EXPECT_EQ(io::format_number(0.25), "0.25");
  EXPECT_EQ(io::format_number(1e-5), "1e-05");
  EXPECT_EQ(io::format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(io::format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(ProfileJson, RoundTrip) {
  const auto& q = gpmin::testing::townes();
  const auto j = io::profile_to_json(q, 1e-12);
  const auto back = io::profile_from_json(io::Json::parse(j.dump()));
  EXPECT_EQ(back.r, q.r);
  EXPECT_EQ(back.q, q.q);
  EXPECT_EQ(back.mass, q.mass);
  EXPECT_EQ(back.tail_coefficient, q.tail_coefficient);
  auto broken = j;
  broken.erase("Q");
  EXPECT_THROW(io::profile_from_json(broken), Error);
}

TEST_F(CliTest, SolitonWritesIdentityTable) {
  const fs::path out = dir_ / "p.json";
  ASSERT_EQ(run({"soliton", "--tol", "1e-12", "--out", out.string()}), 0);
  const auto j = io::read_json(out);
  EXPECT_LT(j["identities"]["mass_vs_kinetic"].get<double>(), 1e-6);
  EXPECT_LT(j["identities"]["mass_vs_quartic"].get<double>(), 1e-6);
  EXPECT_NEAR(j["mass"].get<double>(), 11.70, 5e-3);
  const auto manifest = io::read_json(dir_ / "manifest.json");
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["outputs"], (io::Json::array({"p.json", "manifest.json"})));
}

TEST_F(CliTest, SubcommandDefaultsApply) {
  const fs::path out = dir_ / "default.json";
  ASSERT_EQ(run({"soliton", "--out", out.string()}), 0);
  EXPECT_EQ(io::read_json(out)["tol"].get<double>(), 1e-12);
  const fs::path v1 = dir_ / "v1.json";
  ASSERT_EQ(run({"check-v1", "--potential", "constant c=0.5", "--L", "4", "--n", "32", "--out", v1.string()}), 0);
  EXPECT_LE(io::read_json(v1)["residual"].get<double>(), 1e-7);
}

TEST_F(CliTest, BadArgumentsAreConfigErrors) {
  EXPECT_EQ(run({"sweep", "--config", (dir_ / "missing.cfg").string()}), 2);
  EXPECT_EQ(run({"soliton", "--tol", "1e-2", "--out", (dir_ / "p.json").string()}), 2);
  EXPECT_EQ(run({"minimize", "--potential", "sinc", "--a", "1", "--n", "255", "--out", (dir_ / "r.json").string()}),
            2);
  EXPECT_EQ(run({"minimize", "--potential", "sinc", "--a", "11.7", "--out", (dir_ / "r.json").string()}), 2);
  EXPECT_EQ(run({"check-v1", "--potential", (dir_ / "nope.gpf").string()}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  const fs::path cfg = write_file("bad.cfg", "a_schedule = 0.5\nsurprise = 1\n");
  EXPECT_EQ(run({"sweep", "--config", cfg.string(), "--out", (dir_ / "s").string()}), 2);
  const fs::path blow = write_file("b.cfg", "a_schedule = 0.5\n");
  EXPECT_EQ(run({"blowup", "--config", blow.string(), "--profile", (dir_ / "none.json").string()}), 2);
}

TEST_F(CliTest, BlowupWithTooFewResolvedEntries) {
  const fs::path cfg = write_file("coarse.cfg",
                                  "potential = power_well h0=1 p=2\n"
                                  "L = 8\nn = 32\n"
                                  "a_schedule = 0.5, 0.7, 0.9\n"
                                  "tol = 1e-5\n");
  const fs::path out = dir_ / "blowup";
  EXPECT_EQ(run({"blowup", "--config", cfg.string(), "--out", out.string()}), 3);
  EXPECT_FALSE(fs::exists(out / "fit.json"));
  EXPECT_TRUE(fs::exists(out / "entries.csv"));
  const auto manifest = io::read_json(out / "manifest.json");
  EXPECT_EQ(manifest["status"], "error");
  EXPECT_EQ(manifest["error"]["kind"], "InsufficientData");
}

TEST_F(CliTest, MinimizeAndEnergyAgree) {
  const fs::path result = dir_ / "m" / "result.json";
  const fs::path field = dir_ / "m" / "u.gpf";
  ASSERT_EQ(run({"minimize", "--potential", "lattice s=0.3 period=2", "--a", "5", "--L", "8", "--n", "64", "--out",
                 result.string(), "--field", field.string()}),
            0);
  const auto r = io::read_json(result);
  EXPECT_TRUE(r["converged"].get<bool>());
  const fs::path energy_out = dir_ / "e" / "energy.json";
  ASSERT_EQ(run({"energy", "--field", field.string(), "--potential", "lattice s=0.3 period=2", "--a", "5", "--out",
                 energy_out.string()}),
            0);
  EXPECT_EQ(io::read_json(energy_out)["total"].get<double>(), r["E"].get<double>());
  const auto manifest = io::read_json(dir_ / "m" / "manifest.json");
  EXPECT_EQ(manifest["grid"]["n"], 64);
  EXPECT_EQ(manifest["outputs"], (io::Json::array({"result.json", "u.gpf", "manifest.json"})));
}

TEST_F(CliTest, ChecksReportJson) {
  const fs::path v1 = dir_ / "v1.json";
  ASSERT_EQ(run({"check-v1", "--potential", "power_well h0=1 p=2", "--L", "16", "--n", "128", "--out", v1.string()}),
            0);
  EXPECT_NEAR(io::read_json(v1)["lambda0"].get<double>(), 2.0, 1e-3);
  EXPECT_TRUE(io::read_json(v1)["passes_v1"].get<bool>());
  const fs::path v2 = dir_ / "v2.json";
  ASSERT_EQ(run({"check-v2", "--potential", "lattice s=0.5 period=2", "--L", "8", "--n", "64", "--out", v2.string()}),
            0);
  EXPECT_TRUE(io::read_json(v2)["attained_interior"].get<bool>());
}

TEST_F(CliTest, SweepIsDeterministic) {
  const fs::path cfg = write_file("lat.cfg",
                                  "potential = lattice s=0.5 period=2\n"
                                  "L = 8\nn = 64\n"
                                  "a_schedule = 0.5, 0.8\n");
  const fs::path a = dir_ / "a", b = dir_ / "b";
  ASSERT_EQ(run({"sweep", "--config", cfg.string(), "--out", a.string(), "--seed", "7"}), 0);
  ASSERT_EQ(run({"sweep", "--config", cfg.string(), "--out", b.string(), "--seed", "7"}), 0);
  for (const char* name : {"sweep.csv", "field_000.gpf", "field_001.gpf"})
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  const std::string csv = slurp(a / "sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "a,a_over_a_star,E,eps,residual,iters,converged,under_resolved,field,error");
  const auto manifest = io::read_json(a / "manifest.json");
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["config"]["a_schedule"], "0.5, 0.8");
  for (const auto& name : manifest["outputs"]) EXPECT_TRUE(fs::exists(a / name.get<std::string>())) << name;
}
