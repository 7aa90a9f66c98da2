#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"
#include "constants.hpp"
#include "csvio.hpp"
#include "doslab/ucp.hpp"

namespace doslab::app {

struct RunResult {
  std::filesystem::path out_dir;
  std::vector<std::string> files;  // names relative to out_dir, manifest last
  long rows = 0;
};

// Execute a validated config.  out_override replaces cfg.out when nonempty.
// Outputs are a pipeline CSV plus manifest.json; both are deterministic for
// fixed config + seeds + thread count (wall_ms columns excepted).
RunResult run_pipeline(const RunConfig& cfg, int threads,
                       const std::string& out_override = "");

struct FitGroup {
  int d = 1;
  double p = 2;
  double e = 0;
  long rows = 0;
  long skipped = 0;  // raw-window rows (eps > 1/2) excluded from the fit
  double kappa_used = 0;
  LogHolderFit<double> fit;
  double kappa_hat = 0;   // -trend slope
  double frozen_sup = 0;  // 0 = no gate available for this dimension
  int pass = -1;          // 1 pass, 0 fail, -1 not gated
};

struct FitSummary {
  std::vector<FitGroup> groups;
  std::string text() const;
  std::string json_text() const;
};

// Group records by (d, p, E) and fit each group independently; kappa_override
// 0 means the per-group exponent kappa(d, p).  fc may be null (no gating).
FitSummary fit_records(const std::vector<DosRow>& rows, double kappa_override,
                       const FrozenConstants* fc);

// One probe of the standardized 2D continuation suite: three seeded singular
// potentials on (0,4)^2 at p = 4, 48 nodes per side, window eigenfunction at
// the bottom of [2.5, 3.5], probes at Q in {1.5, 2.5, 4} x delta in {0.1,
// 0.25, 0.5} anchored to the observation box [0.5, 1]^2.  m_star is the
// smallest exponent multiplier with margin >= 0 for that probe.
struct UcpSuiteRow {
  long long seed = 0;
  double q = 0, delta = 0, k = 0, e = 0, lambda = 0;
  double m_fit = 0, lhs = 0, rhs = 0, margin = 0, exponent = 0, m_star = 0;
  double psi_theta2 = 0, psi_ball2 = 0, zeta2 = 0;
  bool pass = false, strong = false;
  long grid_n = 0;
  long long wall_ms = 0;
};

std::vector<UcpSuiteRow> run_ucp_suite(double m_fit, int threads);

// Calibration: compute fitted constants for one suite ("harmonic", "dos1d",
// "dos2d", "ucp" or "all"), merged over prior when given.
FrozenConstants calibrate_suite(const std::string& suite, int threads,
                                const FrozenConstants* prior = nullptr);

}  // namespace doslab::app
