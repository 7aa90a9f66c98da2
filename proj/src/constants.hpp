#pragma once

#include <filesystem>
#include <map>
#include <string>

// Frozen calibration constants.  calibrate writes this file once; runs and
// the regression gates read it and never modify it.  Keys missing from the
// file read as "not calibrated" (0) and fail loudly where they are asserted.
namespace doslab::app {

struct FrozenConstants {
  int schema = 1;
  std::map<int, double> harmonic_a;  // d -> fitted expansion-tail constant
  double dos1d_l0 = 0;               // box rule L = l0 log(1/eps), d = 1
  double dos2d_l0 = 0;               // same rule in d = 2 (with desk caps)
  double dos2d_h = 0;                // mesh width used by the d = 2 rule
  std::map<int, double> dos_sup;     // d -> sup of eta (log 1/eps)^kappa
  double ucp_m_fit = 0;              // frozen continuation exponent multiplier
  std::map<int, double> ucp_m_by_d;  // informational per-dimension fits

  double sup_for(int d) const;       // throws when the gate is uncalibrated
  double require_m_fit() const;

  static FrozenConstants load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_json_text() const;
};

}  // namespace doslab::app
