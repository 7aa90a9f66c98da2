#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "constants.hpp"
#include "csvio.hpp"
#include "doslab/errors.hpp"
#include "doslab/spectral1d.hpp"
#include "pipelines.hpp"

using namespace doslab;
using namespace doslab::app;

namespace fs = std::filesystem;

namespace {

template <typename F>
std::string thrown_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  } catch (...) {
    return "<other>";
  }
  return "<none>";
}

template <typename F>
std::string thrown_what(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  } catch (...) {
    return "<other>";
  }
  return "<none>";
}

fs::path scratch_dir() {
  fs::path p = fs::temp_directory_path() / "doslab_cli_test";
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// The free-interval sample: one diagnostic window [1/2, 9/2] on (0, pi).
std::string pi_config(const std::string& out) {
  return std::string(R"({
  "pipeline": "dos1d",
  "potential": {"kind": "zero", "p": 2.0},
  "domain": {"d": 1},
  "sweep": {"l": [3.141592653589793]},
  "windows": [{"e": 0.5, "eps": 4.0}],
  "out": ")") + out + "\"\n}\n";
}

struct CliResult {
  int exit = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(DOSLAB_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult res;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) res.output += buf;
  int status = pclose(pipe);
  res.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace

TEST_CASE("free-interval sample config delegates to the window count") {
  fs::path dir = scratch_dir() / "pi";
  fs::remove_all(dir);
  RunConfig cfg = parse_config(pi_config((dir / "run").string()), "pi.json");
  RunResult res = run_pipeline(cfg, 1);
  std::vector<DosRow> rows = read_dos_csv(res.out_dir / "records.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].d == 1);
  CHECK(rows[0].eta == doctest::Approx(2 / kPi).epsilon(1e-12));
  CHECK(rows[0].eps == 4.0);
  CHECK(rows[0].bound_product == 0.0);  // diagnostic width, no log-power
  CHECK(rows[0].l == doctest::Approx(kPi));
  CHECK(rows[0].center[0] == doctest::Approx(kPi / 2));
  CHECK(rows[0].eta >= 0);
}

TEST_CASE("rerunning a config gives byte-identical CSV bodies") {
  fs::path dir = scratch_dir() / "twice";
  fs::remove_all(dir);
  std::string conf = R"({
    "pipeline": "dos1d",
    "potential": {"kind": "seeded", "p": 2.0, "density": 0.4, "amp_lo": 0.5, "amp_hi": 1.2},
    "domain": {"d": 1},
    "seeds": [7, 8],
    "sweep": {"l": [6.0, 9.0], "e": [1.0, 2.0], "eps": [0.5, 0.25, 0.125]},
    "out": "unused"
  })";
  RunConfig cfg = parse_config(conf, "twice.json");
  run_pipeline(cfg, 1, (dir / "a").string());
  run_pipeline(cfg, 2, (dir / "b").string());
  std::string a = csv_body_without_wall(dir / "a" / "records.csv");
  std::string b = csv_body_without_wall(dir / "b" / "records.csv");
  CHECK(a == b);
  CHECK(a.find("d,p,L,E,eps,eta,kappa,bound_product") == 0);
  // 2 seeds x 2 boxes x 2 energies x 3 widths
  std::vector<DosRow> rows = read_dos_csv(dir / "a" / "records.csv");
  CHECK(rows.size() == 24);
  for (const DosRow& r : rows) CHECK(r.eta >= 0);
}

TEST_CASE("width constraint is enforced with a pointed message") {
  std::string conf = R"({
    "pipeline": "dos1d",
    "domain": {"d": 1},
    "sweep": {"l": [3.0], "e": [1.0], "eps": [0.25, 0.7]}
  })";
  auto parse = [&] { parse_config(conf, "bad.json"); };
  CHECK(thrown_code(parse) == "bad-config");
  std::string msg = thrown_what(parse);
  CHECK(msg.find("(0, 1/2]") != std::string::npos);
  CHECK(msg.find("/sweep/eps/1") != std::string::npos);
}

TEST_CASE("serialize(parse(config)) is a fixed point") {
  std::string conf = R"({
    "pipeline": "dosnd",
    "potential": {"kind": "seeded", "p": 4.0},
    "domain": {"d": 2, "n": 20, "side": 5.0},
    "seeds": [3],
    "sweep": {"l": [5.0], "e": [2.0], "eps": [0.5, 0.25]},
    "out": "runs/x"
  })";
  std::string once = serialize_config(parse_config(conf, "a.json"));
  std::string twice = serialize_config(parse_config(once, "b.json"));
  CHECK(once == twice);
  CHECK(config_hash_hex(parse_config(conf, "a.json")) ==
        config_hash_hex(parse_config(once, "b.json")));
  // Different content, different hash.
  RunConfig other = parse_config(conf, "c.json");
  other.sweep.e[0] = 2.5;
  CHECK(config_hash_hex(other) != config_hash_hex(parse_config(conf, "a.json")));
}

TEST_CASE("config parsing rejects unknown keys and bad types with locations") {
  CHECK(thrown_what([] { parse_config(R"({"pipeline": "dos1d", "sweeps": {}})", "t.json"); })
            .find("/sweeps") != std::string::npos);
  CHECK(thrown_what([] {
          parse_config(R"({"pipeline": "dos1d", "sweep": {"eps": "wide"}})", "t.json");
        }).find("/sweep/eps") != std::string::npos);
  CHECK(thrown_code([] { parse_config(R"({"pipeline": "warp"})", "t.json"); }) ==
        "bad-config");
  // Parse errors carry a line number.
  std::string msg = thrown_what([] { parse_config("{\n  \"pipeline\": oops\n}", "t.json"); });
  CHECK(msg.find("t.json:2") != std::string::npos);
  // Missing grid spec for dosnd.
  CHECK(thrown_what([] {
          parse_config(R"({"pipeline": "dosnd", "potential": {"kind": "zero", "p": 4.0},
                           "domain": {"d": 2}, "sweep": {"l": [4.0], "e": [1.0], "eps": [0.5]}})",
                       "t.json");
        }).find("/domain/n") != std::string::npos);
  // Inadmissible integrability exponent surfaces at the config layer.
  CHECK(thrown_what([] {
          parse_config(R"({"pipeline": "dosnd", "potential": {"kind": "zero", "p": 2.0},
                           "domain": {"d": 2, "n": 16},
                           "sweep": {"l": [4.0], "e": [1.0], "eps": [0.5]}})",
                       "t.json");
        }).find("/potential/p") != std::string::npos);
}

TEST_CASE("synthetic exact-law records recover the exponent") {
  // eta = C / (log 1/eps)^kappa  =>  sup statistic C, trend slope -kappa.
  const double c = 2.5, kap = 0.37;
  std::vector<DosRow> rows;
  for (int k = 1; k <= 8; ++k) {
    DosRow r;
    r.d = 1;
    r.p = 2;
    r.l = 10;
    r.e = 1.0;
    r.eps = std::ldexp(1.0, -k);
    r.eta = c / std::pow(std::log(1 / r.eps), kap);
    r.kappa = kap;
    r.bound_product = c;
    rows.push_back(r);
  }
  FitSummary sum = fit_records(rows, kap, nullptr);
  REQUIRE(sum.groups.size() == 1);
  CHECK(sum.groups[0].kappa_hat == doctest::Approx(kap).epsilon(1e-6));
  CHECK(sum.groups[0].fit.sup_product == doctest::Approx(c).epsilon(1e-12));
  CHECK(sum.groups[0].pass == -1);  // no constants handed in

  // Round-trip through the CSV layer preserves the numbers exactly.
  fs::path file = scratch_dir() / "law.csv";
  write_dos_csv(file, rows);
  FitSummary sum2 = fit_records(read_dos_csv(file), kap, nullptr);
  CHECK(sum2.groups[0].kappa_hat == sum.groups[0].kappa_hat);
  CHECK(sum2.groups[0].fit.sup_product == sum.groups[0].fit.sup_product);
}

TEST_CASE("fit input gates: empty file, bad schema, thin groups") {
  fs::path dir = scratch_dir();
  spit(dir / "empty.csv", "");
  CHECK(thrown_code([&] { read_dos_csv(dir / "empty.csv"); }) == "insufficient-data");

  spit(dir / "headed.csv", std::string(kDosHeader) + "\n");
  CHECK(thrown_code([&] { fit_records(read_dos_csv(dir / "headed.csv"), 1.0, nullptr); }) ==
        "insufficient-data");

  spit(dir / "wrong.csv", "d,p,L,E,eps\n1,2,3,4,0.5\n");
  auto bad_schema = [&] { read_dos_csv(dir / "wrong.csv"); };
  CHECK(thrown_code(bad_schema) == "schema-mismatch");
  std::string msg = thrown_what(bad_schema);
  CHECK(msg.find("eta") != std::string::npos);
  CHECK(msg.find("kappa") != std::string::npos);
  CHECK(msg.find("wall_ms") != std::string::npos);

  // Fewer than five distinct widths in a group cannot anchor the fit.
  std::vector<DosRow> thin(3);
  for (int i = 0; i < 3; ++i) {
    thin[static_cast<size_t>(i)].eps = std::ldexp(1.0, -(i + 1));
    thin[static_cast<size_t>(i)].eta = 0.1;
  }
  CHECK(thrown_code([&] { fit_records(thin, 1.0, nullptr); }) == "insufficient-data");
}

TEST_CASE("mixed-dimension files split into independent groups") {
  std::vector<DosRow> mixed, only1, only2;
  for (int k = 1; k <= 6; ++k) {
    DosRow a;
    a.d = 1;
    a.p = 2;
    a.e = 1.0;
    a.eps = std::ldexp(1.0, -k);
    a.eta = 0.8 / std::log(1 / a.eps);
    DosRow b;
    b.d = 2;
    b.p = 4;
    b.e = 3.0;
    b.eps = std::ldexp(1.0, -k);
    b.eta = 0.05 / std::pow(std::log(1 / b.eps), 1.0 / 6);
    mixed.push_back(a);
    mixed.push_back(b);
    only1.push_back(a);
    only2.push_back(b);
  }
  FitSummary all = fit_records(mixed, 0.0, nullptr);  // per-group default exponent
  FitSummary s1 = fit_records(only1, 0.0, nullptr);
  FitSummary s2 = fit_records(only2, 0.0, nullptr);
  REQUIRE(all.groups.size() == 2);
  REQUIRE(s1.groups.size() == 1);
  REQUIRE(s2.groups.size() == 1);
  CHECK(all.groups[0].kappa_used == 1.0);
  CHECK(all.groups[1].kappa_used == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(all.groups[0].fit.sup_product == s1.groups[0].fit.sup_product);
  CHECK(all.groups[0].fit.slope == s1.groups[0].fit.slope);
  CHECK(all.groups[1].fit.sup_product == s2.groups[0].fit.sup_product);
  CHECK(all.groups[1].fit.slope == s2.groups[0].fit.slope);
}

TEST_CASE("frozen-constant gating marks groups pass or fail") {
  FrozenConstants fc;
  fc.dos_sup[1] = 0.5;
  std::vector<DosRow> rows;
  for (int k = 1; k <= 5; ++k) {
    DosRow r;
    r.d = 1;
    r.p = 2;
    r.e = 1.0;
    r.eps = std::ldexp(1.0, -k);
    r.eta = 0.4 / std::log(1 / r.eps);  // products exactly 0.4 < 0.5
    rows.push_back(r);
  }
  FitSummary ok = fit_records(rows, 1.0, &fc);
  CHECK(ok.groups[0].pass == 1);
  CHECK(ok.groups[0].frozen_sup == 0.5);
  for (DosRow& r : rows) r.eta *= 2;  // products 0.8 > 0.5
  FitSummary bad = fit_records(rows, 1.0, &fc);
  CHECK(bad.groups[0].pass == 0);
  CHECK(ok.text().find("PASS") != std::string::npos);
  CHECK(bad.text().find("FAIL") != std::string::npos);
}

TEST_CASE("constants file round-trips and guards uncalibrated reads") {
  fs::path file = scratch_dir() / "consts.json";
  FrozenConstants fc;
  fc.harmonic_a[2] = 0.34;
  fc.dos1d_l0 = 3.0;
  fc.dos_sup[1] = 0.34;
  fc.ucp_m_fit = 0.0787;
  fc.save(file);
  FrozenConstants back = FrozenConstants::load(file);
  CHECK(back.harmonic_a[2] == 0.34);
  CHECK(back.dos1d_l0 == 3.0);
  CHECK(back.sup_for(1) == 0.34);
  CHECK(back.require_m_fit() == 0.0787);
  CHECK(thrown_code([&] { back.sup_for(2); }) == "uncalibrated");
  FrozenConstants blank;
  CHECK(thrown_code([&] { blank.require_m_fit(); }) == "uncalibrated");
}

TEST_CASE("pipelines that assert constants require the file to exist") {
  std::string conf = R"({
    "pipeline": "ucp",
    "potential": {"kind": "seeded", "p": 4.0},
    "domain": {"d": 2, "n": 12, "side": 4.0},
    "seeds": [1],
    "sweep": {"q": [1.5], "delta": [0.25], "e": [1.0]},
    "ucp": {"theta_lo": [0.5, 0.5], "theta_hi": [1.0, 1.0]},
    "constants": "/nonexistent/frozen.json"
  })";
  CHECK(thrown_what([&] { parse_config(conf, "u.json"); }).find("/constants") !=
        std::string::npos);
  // An explicit m_fit lifts the requirement.
  std::string conf2 = R"({
    "pipeline": "ucp",
    "potential": {"kind": "seeded", "p": 4.0},
    "domain": {"d": 2, "n": 12, "side": 4.0},
    "seeds": [1],
    "sweep": {"q": [1.5], "delta": [0.25], "e": [1.0]},
    "ucp": {"m_fit": 0.1, "theta_lo": [0.5, 0.5], "theta_hi": [1.0, 1.0]}
  })";
  CHECK(parse_config(conf2, "u.json").ucp.m_fit == 0.1);
}

TEST_CASE("module error names propagate through the runner") {
  // The runner covers every requested window with its eigensolver band, so a
  // mixed sweep-plus-window config runs whole.
  std::string conf = R"({
    "pipeline": "dos1d",
    "domain": {"d": 1},
    "sweep": {"l": [3.0], "e": [1.0], "eps": [0.5]},
    "windows": [{"e": 1.0, "eps": 0.25}]
  })";
  RunConfig cfg = parse_config(conf, "w.json");
  RunResult res = run_pipeline(cfg, 1, (scratch_dir() / "wprop").string());
  CHECK(res.rows == 2);
  // Out-of-band windows carry the 1D module's own error name.
  Potential<double> v = Potential<double>::zero(1);
  EigenSystem<double> es = eigs_interval(v, Interval<double>{0.0, 3.0}, 5.0);
  CHECK(thrown_code([&] { dos_window(es, 10.0, 1.0, 3.0); }) == "window-out-of-range");
}

TEST_CASE("command line: exit codes and outputs") {
  fs::path dir = scratch_dir() / "cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  spit(dir / "pi.json", pi_config((dir / "out").string()));

  CliResult ok = run_cli("run " + (dir / "pi.json").string());
  CHECK(ok.exit == 0);
  CHECK(ok.output.find("records.csv") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "manifest.json"));

  // Same config, fresh out dir, identical body.
  CliResult again =
      run_cli("--out " + (dir / "out2").string() + " run " + (dir / "pi.json").string());
  CHECK(again.exit == 0);
  CHECK(csv_body_without_wall(dir / "out" / "records.csv") ==
        csv_body_without_wall(dir / "out2" / "records.csv"));

  spit(dir / "bad.json", R"({"pipeline": "dos1d", "domain": {"d": 1},
    "sweep": {"l": [3.0], "e": [1.0], "eps": [0.7]}})");
  CliResult bad = run_cli("run " + (dir / "bad.json").string());
  CHECK(bad.exit == 2);
  CHECK(bad.output.find("(0, 1/2]") != std::string::npos);

  CliResult missing = run_cli("run " + (dir / "nope.json").string());
  CHECK(missing.exit == 2);

  CliResult help = run_cli("--help");
  CHECK(help.exit == 0);

  // fit over a synthetic exact-law file.
  std::vector<DosRow> law;
  for (int k = 1; k <= 8; ++k) {
    DosRow r;
    r.d = 1;
    r.p = 2;
    r.e = 1.0;
    r.eps = std::ldexp(1.0, -k);
    r.eta = 1.7 / std::log(1 / r.eps);
    law.push_back(r);
  }
  write_dos_csv(dir / "law.csv", law);
  FrozenConstants gate;
  gate.dos_sup[1] = 2.0;  // above the synthetic sup of 1.7
  gate.save(dir / "gate.json");
  CliResult fit = run_cli("fit " + (dir / "law.csv").string() + " --kappa 1 --constants " +
                          (dir / "gate.json").string());
  CHECK(fit.exit == 0);
  CHECK(fit.output.find("group d=1") != std::string::npos);
  CHECK(fit.output.find("kappa_hat=1") != std::string::npos);
  CHECK(fit.output.find("PASS") != std::string::npos);

  CliResult nofile = run_cli("fit " + (dir / "ghost.csv").string() + " --kappa 1");
  CHECK(nofile.exit == 2);

  // Node caps surface as capacity failures with their own exit code.
  spit(dir / "big.json", R"({"pipeline": "dosnd",
    "potential": {"kind": "zero", "p": 12.0},
    "domain": {"d": 3, "n": 40},
    "sweep": {"l": [4.0], "e": [1.0], "eps": [0.5]}})");
  CliResult cap = run_cli("run " + (dir / "big.json").string());
  CHECK(cap.exit == 4);
}

TEST_CASE("manifest records hash, constants and outputs") {
  fs::path dir = scratch_dir() / "mani";
  fs::remove_all(dir);
  RunConfig cfg = parse_config(pi_config((dir / "r").string()), "m.json");
  run_pipeline(cfg, 3);
  std::string manifest = slurp(dir / "r" / "manifest.json");
  CHECK(manifest.find(config_hash_hex(cfg)) != std::string::npos);
  CHECK(manifest.find("\"threads\": 3") != std::string::npos);
  CHECK(manifest.find("records.csv") != std::string::npos);
  CHECK(manifest.find("\"pipeline\": \"dos1d\"") != std::string::npos);
}
