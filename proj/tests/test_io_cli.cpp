#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qfbox/config.hpp"
#include "qfbox/io.hpp"

using namespace qfbox;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("qfbox_test_" + leaf);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("float formatting", "[io]") {
  CHECK(fmt17(0.1) == "0.10000000000000001");
  CHECK(fmt17(1.0) == "1");
  CHECK(fmt_masked(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(fmt17(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(fmt17(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("coefficient files round-trip bit-exactly", "[io]") {
  BoxDomain d;
  const auto dir = temp_dir("coeffs");
  auto st = build_uniform(d, 0.13, 0.87, 40);
  save_coefficients(dir / "c.txt", st);
  auto back = load_coefficients(dir / "c.txt", d);
  REQUIRE(back.size() == st.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    CHECK(back.terms()[i].n == st.terms()[i].n);
    CHECK(back.terms()[i].c == st.terms()[i].c);  // 17 digits: exact round-trip
  }

  // decreasing mode indices are rejected
  {
    std::ofstream os(dir / "bad.txt");
    os << "3 1.0 0.0\n2 0.5 0.0\n";
  }
  CHECK_THROWS_WITH(load_coefficients(dir / "bad.txt", d),
                    Catch::Matchers::ContainsSubstring("strictly increasing"));
}

TEST_CASE("config text parsing", "[io]") {
  const auto dir = temp_dir("cfg");
  {
    std::ofstream os(dir / "run.cfg");
    os << "# comment line\n"
       << "domain.L = 1.0\n"
       << "state.kind = uniform\n"
       << "state.n_max = 127   # trailing comment\n"
       << "ladder = 16, 32, 64, 128\n"
       << "times = rational 7/10, irrational sqrt2, 0.125\n"
       << "trajectory.x0 = 0.1, 0.3\n"
       << "integrator.tol_step = 1e-9\n"
       << "output.dir = outdir\n";
  }
  const RunConfig cfg = load_config(dir / "run.cfg");
  CHECK(cfg.n_max == 127);
  REQUIRE(cfg.ladder.size() == 4);
  CHECK(cfg.ladder[3] == 128);
  REQUIRE(cfg.times.size() == 3);
  CHECK(cfg.times[0].kind == TimeSpec::Kind::rational);
  CHECK(cfg.times[0].p == 7);
  CHECK(cfg.times[0].q == 10);
  CHECK(cfg.times[1].kind == TimeSpec::Kind::sqrt2);
  CHECK(cfg.times[2].kind == TimeSpec::Kind::absolute);
  CHECK(cfg.times[2].value == Approx(0.125));
  CHECK(cfg.integ.tol_step == Approx(1e-9));
  CHECK(cfg.out_dir == "outdir");
  BoxDomain d;
  CHECK(cfg.times[1].resolve(d).t == Approx(period(d) / std::sqrt(2.0)));

  {
    std::ofstream os(dir / "bad.cfg");
    os << "nonsense.key = 1\n";
  }
  CHECK_THROWS_AS(load_config(dir / "bad.cfg"), std::domain_error);
  {
    std::ofstream os(dir / "noeq.cfg");
    os << "just words\n";
  }
  CHECK_THROWS_AS(load_config(dir / "noeq.cfg"), std::domain_error);
}

TEST_CASE("run.json re-ingestion reproduces the config", "[io]") {
  const auto dir = temp_dir("roundtrip");
  RunConfig cfg;
  cfg.state_kind = "weierstrass";
  cfg.weier_s = 0.5;
  cfg.weier_base = 3;
  cfg.weier_R = 7;
  cfg.ladder = {16, 32, 64};
  cfg.times.push_back(TimeSpec{TimeSpec::Kind::rational, 0.0, 1, 2});
  cfg.x0_list = {0.2, 0.4};
  cfg.out_dir = (dir / "out").string();
  write_run_json(dir, "fractal", cfg, kVersion);
  const RunConfig back = load_config(dir / "run.json");
  CHECK(back.state_kind == cfg.state_kind);
  CHECK(back.weier_s == Approx(cfg.weier_s));
  CHECK(back.weier_base == cfg.weier_base);
  CHECK(back.weier_R == cfg.weier_R);
  CHECK(back.ladder == cfg.ladder);
  REQUIRE(back.times.size() == 1);
  CHECK(back.times[0].kind == TimeSpec::Kind::rational);
  CHECK(back.times[0].p == 1);
  CHECK(back.times[0].q == 2);
  CHECK(back.x0_list == cfg.x0_list);
}

TEST_CASE("fractal fit JSON schema", "[io]") {
  FractalFit fit;
  fit.method = "length";
  fit.N_values = {16, 32};
  fit.lengths = {1.5, 2.5};
  fit.fit_window = {0, 2};
  fit.slope = 0.5;
  fit.D_f = 1.5;
  fit.flags = {"saturated"};
  const auto j = fractal_fit_json(fit);
  for (const char* key : {"method", "N_values", "lengths", "fit_window", "slope", "stderr",
                          "D_f", "flags"})
    REQUIRE(j.contains(key));
}

TEST_CASE("profile CSV masks with empty fields", "[io]") {
  const auto dir = temp_dir("profcsv");
  FieldProfile fp;
  fp.t = 0.5;
  fp.truncation = 4;
  fp.norm2 = 1.0;
  fp.x = {0.0, 0.5};
  fp.rho = {0.0, 2.0};
  fp.S = {std::numeric_limits<double>::quiet_NaN(), 0.25};
  fp.Q = {-std::numeric_limits<double>::infinity(), 1.0};
  write_profile_csv(dir / "p.csv", fp, "uniform");
  const std::string text = slurp(dir / "p.csv");
  CHECK(text.find("0,0,,-inf\n") != std::string::npos);
  CHECK(text.find("0.5,2,0.25,1\n") != std::string::npos);
}

TEST_CASE("cli end-to-end determinism and exit codes", "[io]") {
  const auto dir = temp_dir("cli");
  {
    std::ofstream os(dir / "run.cfg");
    os << "state.kind = uniform\n"
       << "state.n_max = 63\n"
       << "truncation = 0\n"
       << "times = rational 1/2\n"
       << "trajectory.x0 = 0.3\n"
       << "ladder = 8, 16, 32\n";
  }
  const std::string cli = QFBOX_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  const std::string cfg = (dir / "run.cfg").string();
  CHECK(run("build-state --config " + cfg + " --out " + (dir / "o1").string()) == 0);
  CHECK(run("build-state --config " + cfg + " --out " + (dir / "o2").string()) == 0);
  CHECK(slurp(dir / "o1" / "state_coefficients.txt") ==
        slurp(dir / "o2" / "state_coefficients.txt"));
  CHECK(slurp(dir / "o1" / "state_summary.json") == slurp(dir / "o2" / "state_summary.json"));

  CHECK(run("trajectories --config " + cfg + " --out " + (dir / "t1").string()) == 0);
  CHECK(run("trajectories --config " + cfg + " --out " + (dir / "t2").string()) == 0);
  CHECK(slurp(dir / "t1" / "trajectories.csv") == slurp(dir / "t2" / "trajectories.csv"));

  // re-running from the emitted run.json reproduces outputs byte-identically
  CHECK(run("trajectories --config " + (dir / "t1" / "run.json").string() + " --out " +
            (dir / "t3").string()) == 0);
  CHECK(slurp(dir / "t1" / "trajectories.csv") == slurp(dir / "t3" / "trajectories.csv"));

  CHECK(run("profile --config " + cfg + " --out " + (dir / "p1").string()) == 0);
  CHECK(fs::exists(dir / "p1" / "profile_0.csv"));
  CHECK(fs::exists(dir / "p1" / "run.json"));

  // usage errors exit with 2
  CHECK(run("build-state --config " + (dir / "missing.cfg").string()) == 2);
  CHECK(run("not-a-command") == 2);
  {
    std::ofstream os(dir / "bad.cfg");
    os << "state.kind = nosuch\n";
  }
  CHECK(run("build-state --config " + (dir / "bad.cfg").string() + " --out " +
            (dir / "ob").string()) == 2);
}
