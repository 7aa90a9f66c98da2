#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "doslab/errors.hpp"

// Run configuration for the batch experiment driver.  Configs are JSON files;
// parsing is strict (unknown keys rejected) and serialization is canonical
// (sorted keys, every field emitted), so serialize(parse(x)) is a fixed point
// after one round and configs hash stably.
namespace doslab::app {

enum class Pipeline { decompose, ballsolve, dos1d, dosnd, ucp, fit };

const char* pipeline_name(Pipeline p);
Pipeline pipeline_from_name(const std::string& name, const std::string& where);

struct BumpSpec {
  double amplitude = 1.0;
  std::vector<double> center;
  double alpha = 0.5;
  double cutoff = 0.3;
};

struct PotentialSpec {
  std::string kind = "zero";  // zero | seeded | bumps
  double p = 2.0;
  double density = 0.25;  // seeded: expected bumps per unit volume
  double amp_lo = 0.5;    // seeded: amplitude range
  double amp_hi = 1.5;
  std::vector<BumpSpec> bumps;  // kind == bumps
};

struct DomainSpec {
  int d = 1;
  std::vector<double> lower;  // box corner; empty = origin
  double side = 1.0;          // used when the sweep carries no L values
  int n = 0;                  // grid nodes per side; 0 = derive from h_target
  double h_target = 0.0;      // target mesh width; 0 = use n as given
  std::string bc = "dirichlet";
};

// Raw diagnostic window, exempt from the (0, 1/2] width constraint that
// applies to the eps sweep; the product column is 0 when eps > 1/2.
struct WindowSpec {
  double e = 0.0;
  double eps = 1.0;
};

struct SweepSpec {
  std::vector<double> eps;  // window widths, each in (0, 1/2]
  std::vector<double> e;    // window bottom energies
  std::vector<double> l;    // box sides
  std::vector<double> delta;
  std::vector<double> q;
  std::vector<int> n_degree;
};

struct UcpSpec {
  double m_fit = 0.0;  // 0 = read from the frozen-constants file
  std::vector<double> theta_lo;
  std::vector<double> theta_hi;
  double window_eps = 1.0;
  double k_strength = 2.0;
};

struct FitSpec {
  std::string records;
  double kappa = 0.0;  // 0 = per-group kappa(d, p)
};

struct RunConfig {
  Pipeline pipeline = Pipeline::dos1d;
  PotentialSpec potential;
  DomainSpec domain;
  SweepSpec sweep;
  std::vector<WindowSpec> windows;
  std::vector<long long> seeds{1};
  std::string out = "out";
  std::string constants;  // frozen-constants path; may be empty
  UcpSpec ucp;
  FitSpec fit;
};

// Parse + validate.  source names the config in error messages; parse errors
// carry a line number, semantic errors a JSON-pointer-style path.
RunConfig parse_config(const std::string& text, const std::string& source);
RunConfig load_config(const std::filesystem::path& path);

std::string serialize_config(const RunConfig& cfg);
void validate_config(const RunConfig& cfg, const std::string& source);

std::uint64_t fnv1a(const std::string& bytes);
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace doslab::app
