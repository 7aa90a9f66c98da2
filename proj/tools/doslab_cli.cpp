#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "config.hpp"
#include "constants.hpp"
#include "csvio.hpp"
#include "doslab/errors.hpp"
#include "pipelines.hpp"

namespace {

using namespace doslab;
using namespace doslab::app;

constexpr char kDefaultConstants[] = "data/frozen_constants.json";

int cmd_run(const std::string& config_path, int threads, const std::string& out) {
  RunConfig cfg = load_config(config_path);
  RunResult res = run_pipeline(cfg, threads, out);
  std::printf("config %s  hash %s\n", config_path.c_str(), config_hash_hex(cfg).c_str());
  for (const std::string& f : res.files)
    std::printf("wrote %s\n", (res.out_dir / f).string().c_str());
  std::printf("rows: %ld\n", res.rows);
  return 0;
}

int cmd_fit(const std::string& csv_path, double kappa, std::string constants_path,
            const std::string& out) {
  std::vector<DosRow> rows = read_dos_csv(csv_path);
  FrozenConstants fc;
  bool have_fc = false;
  if (constants_path.empty() && std::filesystem::exists(kDefaultConstants))
    constants_path = kDefaultConstants;
  if (!constants_path.empty()) {
    fc = FrozenConstants::load(constants_path);
    have_fc = true;
  }
  FitSummary summary = fit_records(rows, kappa, have_fc ? &fc : nullptr);
  std::fputs(summary.text().c_str(), stdout);
  if (!have_fc) std::puts("(no frozen-constants file; groups not gated)");
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream txt(std::filesystem::path(out) / "fit_summary.txt", std::ios::binary);
    txt << summary.text();
    std::ofstream js(std::filesystem::path(out) / "fit_summary.json", std::ios::binary);
    js << summary.json_text();
    std::printf("wrote %s/fit_summary.{txt,json}\n", out.c_str());
  }
  for (const FitGroup& g : summary.groups)
    if (g.pass == 0) return 1;
  return 0;
}

int cmd_calibrate(const std::string& suite, int threads, const std::string& out) {
  std::filesystem::path target =
      out.empty() ? std::filesystem::path(kDefaultConstants)
                  : std::filesystem::path(out) / "frozen_constants.json";
  FrozenConstants prior;
  bool have_prior = std::filesystem::exists(target);
  if (have_prior) prior = FrozenConstants::load(target);
  FrozenConstants fc = calibrate_suite(suite, threads, have_prior ? &prior : nullptr);
  fc.save(target);
  std::printf("wrote %s\n", target.string().c_str());
  std::fputs(fc.to_json_text().c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"doslab: batch driver for density-of-states and continuation sweeps"};
  app.require_subcommand(1);

  int threads = 1;
  std::string out;
  app.add_option("--threads", threads, "worker threads for sweep points")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory (overrides the config's)");

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "execute a config");
  run->add_option("config", config_path, "JSON run config")->required();

  std::string csv_path, constants_path;
  double kappa = 0;
  CLI::App* fit = app.add_subcommand("fit", "fit log-Hoelder products from a records CSV");
  fit->add_option("csv", csv_path, "records CSV")->required();
  fit->add_option("--kappa", kappa, "modulus exponent; 0 = per-group default")
      ->required();
  fit->add_option("--constants", constants_path, "frozen-constants file for gating");

  std::string suite;
  CLI::App* cal = app.add_subcommand("calibrate", "produce the frozen-constants file");
  cal->add_option("suite", suite, "harmonic|dos1d|dos2d|ucp|all")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : doslab::ValidationError::exit_code;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, threads, out);
    if (fit->parsed()) return cmd_fit(csv_path, kappa, constants_path, out);
    return cmd_calibrate(suite, threads, out);
  } catch (const doslab::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return doslab::ValidationError::exit_code;
  } catch (const doslab::CapacityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return doslab::CapacityError::exit_code;
  } catch (const doslab::NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return doslab::NumericalError::exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return doslab::NumericalError::exit_code;
  }
}
