#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "doslab/ucp.hpp"
#include "json.hpp"

namespace doslab::app {

using nlohmann::json;

const char* pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::decompose: return "decompose";
    case Pipeline::ballsolve: return "ballsolve";
    case Pipeline::dos1d: return "dos1d";
    case Pipeline::dosnd: return "dosnd";
    case Pipeline::ucp: return "ucp";
    case Pipeline::fit: return "fit";
  }
  return "?";
}

Pipeline pipeline_from_name(const std::string& name, const std::string& where) {
  for (Pipeline p : {Pipeline::decompose, Pipeline::ballsolve, Pipeline::dos1d,
                     Pipeline::dosnd, Pipeline::ucp, Pipeline::fit})
    if (name == pipeline_name(p)) return p;
  throw ValidationError("bad-config",
                        where + ": unknown pipeline '" + name +
                            "' (expected decompose|ballsolve|dos1d|dosnd|ucp|fit)");
}

namespace {

[[noreturn]] void fail(const std::string& src, const std::string& ptr, const std::string& msg) {
  throw ValidationError("bad-config", src + ":" + ptr + ": " + msg);
}

void check_keys(const json& j, const std::string& src, const std::string& ptr,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(src, ptr, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; }) == allowed.end())
      fail(src, ptr + "/" + it.key(), "unknown key");
}

double num_at(const json& j, const std::string& src, const std::string& ptr) {
  if (!j.is_number()) fail(src, ptr, "expected a number");
  return j.get<double>();
}

int int_at(const json& j, const std::string& src, const std::string& ptr) {
  if (!j.is_number_integer()) fail(src, ptr, "expected an integer");
  return j.get<int>();
}

std::string str_at(const json& j, const std::string& src, const std::string& ptr) {
  if (!j.is_string()) fail(src, ptr, "expected a string");
  return j.get<std::string>();
}

std::vector<double> num_list(const json& j, const std::string& src, const std::string& ptr) {
  if (!j.is_array()) fail(src, ptr, "expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(num_at(j[i], src, ptr + "/" + std::to_string(i)));
  return out;
}

long line_of_byte(const std::string& text, size_t byte) {
  long line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config-parse", source + ":" +
                                              std::to_string(line_of_byte(text, e.byte)) +
                                              ": " + e.what());
  }
  const std::string& s = source;
  check_keys(j, s, "", {"pipeline", "potential", "domain", "sweep", "windows", "seeds",
                        "out", "constants", "ucp", "fit"});
  RunConfig cfg;
  if (!j.contains("pipeline")) fail(s, "/pipeline", "required key missing");
  cfg.pipeline = pipeline_from_name(str_at(j["pipeline"], s, "/pipeline"), s + ":/pipeline");

  if (j.contains("potential")) {
    const json& p = j["potential"];
    check_keys(p, s, "/potential", {"kind", "p", "density", "amp_lo", "amp_hi", "bumps"});
    if (p.contains("kind")) cfg.potential.kind = str_at(p["kind"], s, "/potential/kind");
    if (p.contains("p")) cfg.potential.p = num_at(p["p"], s, "/potential/p");
    if (p.contains("density"))
      cfg.potential.density = num_at(p["density"], s, "/potential/density");
    if (p.contains("amp_lo")) cfg.potential.amp_lo = num_at(p["amp_lo"], s, "/potential/amp_lo");
    if (p.contains("amp_hi")) cfg.potential.amp_hi = num_at(p["amp_hi"], s, "/potential/amp_hi");
    if (p.contains("bumps")) {
      if (!p["bumps"].is_array()) fail(s, "/potential/bumps", "expected an array");
      for (size_t i = 0; i < p["bumps"].size(); ++i) {
        const json& b = p["bumps"][i];
        std::string bp = "/potential/bumps/" + std::to_string(i);
        check_keys(b, s, bp, {"amplitude", "center", "alpha", "cutoff"});
        BumpSpec bs;
        if (b.contains("amplitude")) bs.amplitude = num_at(b["amplitude"], s, bp + "/amplitude");
        if (b.contains("center")) bs.center = num_list(b["center"], s, bp + "/center");
        if (b.contains("alpha")) bs.alpha = num_at(b["alpha"], s, bp + "/alpha");
        if (b.contains("cutoff")) bs.cutoff = num_at(b["cutoff"], s, bp + "/cutoff");
        cfg.potential.bumps.push_back(std::move(bs));
      }
    }
  }

  if (j.contains("domain")) {
    const json& d = j["domain"];
    check_keys(d, s, "/domain", {"d", "lower", "side", "n", "h_target", "bc"});
    if (d.contains("d")) cfg.domain.d = int_at(d["d"], s, "/domain/d");
    if (d.contains("lower")) cfg.domain.lower = num_list(d["lower"], s, "/domain/lower");
    if (d.contains("side")) cfg.domain.side = num_at(d["side"], s, "/domain/side");
    if (d.contains("n")) cfg.domain.n = int_at(d["n"], s, "/domain/n");
    if (d.contains("h_target")) cfg.domain.h_target = num_at(d["h_target"], s, "/domain/h_target");
    if (d.contains("bc")) cfg.domain.bc = str_at(d["bc"], s, "/domain/bc");
  }

  if (j.contains("sweep")) {
    const json& w = j["sweep"];
    check_keys(w, s, "/sweep", {"eps", "e", "l", "delta", "q", "n_degree"});
    if (w.contains("eps")) cfg.sweep.eps = num_list(w["eps"], s, "/sweep/eps");
    if (w.contains("e")) cfg.sweep.e = num_list(w["e"], s, "/sweep/e");
    if (w.contains("l")) cfg.sweep.l = num_list(w["l"], s, "/sweep/l");
    if (w.contains("delta")) cfg.sweep.delta = num_list(w["delta"], s, "/sweep/delta");
    if (w.contains("q")) cfg.sweep.q = num_list(w["q"], s, "/sweep/q");
    if (w.contains("n_degree")) {
      if (!w["n_degree"].is_array()) fail(s, "/sweep/n_degree", "expected an array");
      for (size_t i = 0; i < w["n_degree"].size(); ++i)
        cfg.sweep.n_degree.push_back(
            int_at(w["n_degree"][i], s, "/sweep/n_degree/" + std::to_string(i)));
    }
  }

  if (j.contains("windows")) {
    if (!j["windows"].is_array()) fail(s, "/windows", "expected an array");
    for (size_t i = 0; i < j["windows"].size(); ++i) {
      const json& w = j["windows"][i];
      std::string wp = "/windows/" + std::to_string(i);
      check_keys(w, s, wp, {"e", "eps"});
      WindowSpec ws;
      if (w.contains("e")) ws.e = num_at(w["e"], s, wp + "/e");
      if (w.contains("eps")) ws.eps = num_at(w["eps"], s, wp + "/eps");
      cfg.windows.push_back(ws);
    }
  }

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) fail(s, "/seeds", "expected an array of integers");
    cfg.seeds.clear();
    for (size_t i = 0; i < j["seeds"].size(); ++i) {
      const json& e = j["seeds"][i];
      if (!e.is_number_integer()) fail(s, "/seeds/" + std::to_string(i), "expected an integer");
      cfg.seeds.push_back(e.get<long long>());
    }
  }

  if (j.contains("out")) cfg.out = str_at(j["out"], s, "/out");
  if (j.contains("constants")) cfg.constants = str_at(j["constants"], s, "/constants");

  if (j.contains("ucp")) {
    const json& u = j["ucp"];
    check_keys(u, s, "/ucp", {"m_fit", "theta_lo", "theta_hi", "window_eps", "k_strength"});
    if (u.contains("m_fit")) cfg.ucp.m_fit = num_at(u["m_fit"], s, "/ucp/m_fit");
    if (u.contains("theta_lo")) cfg.ucp.theta_lo = num_list(u["theta_lo"], s, "/ucp/theta_lo");
    if (u.contains("theta_hi")) cfg.ucp.theta_hi = num_list(u["theta_hi"], s, "/ucp/theta_hi");
    if (u.contains("window_eps"))
      cfg.ucp.window_eps = num_at(u["window_eps"], s, "/ucp/window_eps");
    if (u.contains("k_strength"))
      cfg.ucp.k_strength = num_at(u["k_strength"], s, "/ucp/k_strength");
  }

  if (j.contains("fit")) {
    const json& f = j["fit"];
    check_keys(f, s, "/fit", {"records", "kappa"});
    if (f.contains("records")) cfg.fit.records = str_at(f["records"], s, "/fit/records");
    if (f.contains("kappa")) cfg.fit.kappa = num_at(f["kappa"], s, "/fit/kappa");
  }

  validate_config(cfg, source);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("bad-config", path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void validate_config(const RunConfig& cfg, const std::string& source) {
  const std::string& s = source;
  const int d = cfg.domain.d;
  if (d < 1 || d > 3) fail(s, "/domain/d", "dimension must be 1, 2 or 3");
  if (!cfg.domain.lower.empty() && static_cast<int>(cfg.domain.lower.size()) != d)
    fail(s, "/domain/lower", "expected " + std::to_string(d) + " coordinates");
  if (!(cfg.domain.side > 0)) fail(s, "/domain/side", "box side must be > 0");
  if (cfg.domain.bc != "dirichlet" && cfg.domain.bc != "periodic")
    fail(s, "/domain/bc", "expected 'dirichlet' or 'periodic'");
  if (cfg.domain.n < 0) fail(s, "/domain/n", "grid size must be >= 0");
  if (cfg.domain.h_target < 0) fail(s, "/domain/h_target", "mesh target must be >= 0");

  const PotentialSpec& pot = cfg.potential;
  if (pot.kind != "zero" && pot.kind != "seeded" && pot.kind != "bumps")
    fail(s, "/potential/kind", "expected 'zero', 'seeded' or 'bumps'");
  if (!(pot.p >= 1)) fail(s, "/potential/p", "integrability exponent must be >= 1");
  if (pot.kind == "seeded") {
    if (!(pot.density > 0)) fail(s, "/potential/density", "density must be > 0");
    if (!(pot.amp_hi >= pot.amp_lo))
      fail(s, "/potential/amp_hi", "amplitude range is empty");
    if (cfg.seeds.empty()) fail(s, "/seeds", "seeded potential needs at least one seed");
  }
  if (pot.kind == "bumps") {
    if (pot.bumps.empty()) fail(s, "/potential/bumps", "bump list must be nonempty");
    for (size_t i = 0; i < pot.bumps.size(); ++i)
      if (static_cast<int>(pot.bumps[i].center.size()) != d)
        fail(s, "/potential/bumps/" + std::to_string(i) + "/center",
             "expected " + std::to_string(d) + " coordinates");
  }

  // Width constraint for the eps sweep; raw diagnostic windows are separate.
  for (size_t i = 0; i < cfg.sweep.eps.size(); ++i) {
    double e = cfg.sweep.eps[i];
    if (!(e > 0) || e > 0.5 || !std::isfinite(e))
      fail(s, "/sweep/eps/" + std::to_string(i),
           "window width must lie in (0, 1/2]");
  }
  for (size_t i = 0; i < cfg.windows.size(); ++i)
    if (!(cfg.windows[i].eps > 0) || !std::isfinite(cfg.windows[i].eps))
      fail(s, "/windows/" + std::to_string(i) + "/eps", "window width must be > 0");
  for (size_t i = 0; i < cfg.sweep.l.size(); ++i)
    if (!(cfg.sweep.l[i] > 0))
      fail(s, "/sweep/l/" + std::to_string(i), "box side must be > 0");
  for (size_t i = 0; i < cfg.sweep.delta.size(); ++i)
    if (!(cfg.sweep.delta[i] > 0))
      fail(s, "/sweep/delta/" + std::to_string(i), "radius must be > 0");
  for (size_t i = 0; i < cfg.sweep.q.size(); ++i)
    if (!(cfg.sweep.q[i] >= 1))
      fail(s, "/sweep/q/" + std::to_string(i), "observation spread must be >= 1");
  for (size_t i = 0; i < cfg.sweep.n_degree.size(); ++i)
    if (cfg.sweep.n_degree[i] < 0)
      fail(s, "/sweep/n_degree/" + std::to_string(i), "degree must be >= 0");

  auto need = [&](bool ok, const char* ptr, const char* what) {
    if (!ok) fail(s, ptr, std::string("pipeline ") + pipeline_name(cfg.pipeline) +
                              " needs a nonempty " + what);
  };
  switch (cfg.pipeline) {
    case Pipeline::dos1d:
    case Pipeline::dosnd:
      need(!cfg.sweep.l.empty(), "/sweep/l", "L sweep");
      need(!cfg.sweep.eps.empty() || !cfg.windows.empty(), "/sweep/eps",
           "eps sweep (or explicit windows)");
      need(cfg.sweep.eps.empty() || !cfg.sweep.e.empty(), "/sweep/e", "energy sweep");
      if (cfg.pipeline == Pipeline::dosnd && cfg.domain.n <= 0 && cfg.domain.h_target <= 0)
        fail(s, "/domain/n", "dosnd pipeline needs an explicit grid (n or h_target)");
      if (cfg.pipeline == Pipeline::dosnd && d >= 2) {
        // Surface the admissibility gate of the exponent at config time.
        try {
          kappa(d, pot.p);
        } catch (const ValidationError& e) {
          fail(s, "/potential/p", e.what());
        }
      }
      break;
    case Pipeline::ucp:
      need(!cfg.sweep.q.empty(), "/sweep/q", "Q sweep");
      need(!cfg.sweep.delta.empty(), "/sweep/delta", "delta sweep");
      need(!cfg.sweep.e.empty(), "/sweep/e", "energy sweep");
      if (static_cast<int>(cfg.ucp.theta_lo.size()) != d ||
          static_cast<int>(cfg.ucp.theta_hi.size()) != d)
        fail(s, "/ucp/theta_lo", "observation box needs " + std::to_string(d) +
                                     " coordinates on both sides");
      for (int a = 0; a < d; ++a)
        if (!(cfg.ucp.theta_lo[a] < cfg.ucp.theta_hi[a]))
          fail(s, "/ucp/theta_hi", "observation box is empty");
      if (!(cfg.ucp.window_eps > 0)) fail(s, "/ucp/window_eps", "window width must be > 0");
      if (!(cfg.ucp.k_strength >= 0)) fail(s, "/ucp/k_strength", "K must be >= 0");
      if (cfg.domain.n <= 0 && cfg.domain.h_target <= 0)
        fail(s, "/domain/n", "ucp pipeline needs an explicit grid (n or h_target)");
      break;
    case Pipeline::decompose:
      need(!cfg.sweep.n_degree.empty(), "/sweep/n_degree", "degree sweep");
      need(!cfg.sweep.delta.empty(), "/sweep/delta", "radius sweep");
      if (d < 2) fail(s, "/domain/d", "decompose pipeline needs d = 2 or 3");
      break;
    case Pipeline::ballsolve:
      need(!cfg.sweep.delta.empty(), "/sweep/delta", "radius sweep");
      if (d < 2) fail(s, "/domain/d", "ballsolve pipeline needs d = 2 or 3");
      break;
    case Pipeline::fit:
      if (cfg.fit.records.empty()) fail(s, "/fit/records", "records path required");
      break;
  }

  // Pipelines that assert fitted constants must point at an existing file.
  bool needs_constants = cfg.pipeline == Pipeline::fit ||
                         (cfg.pipeline == Pipeline::ucp && !(cfg.ucp.m_fit > 0));
  if (needs_constants) {
    if (cfg.constants.empty())
      fail(s, "/constants", "this pipeline asserts fitted constants; path required");
    if (!std::filesystem::exists(cfg.constants))
      fail(s, "/constants", "constants file '" + cfg.constants + "' does not exist");
  }
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["pipeline"] = pipeline_name(cfg.pipeline);
  j["potential"] = {{"kind", cfg.potential.kind},
                    {"p", cfg.potential.p},
                    {"density", cfg.potential.density},
                    {"amp_lo", cfg.potential.amp_lo},
                    {"amp_hi", cfg.potential.amp_hi}};
  j["potential"]["bumps"] = json::array();
  for (const BumpSpec& b : cfg.potential.bumps)
    j["potential"]["bumps"].push_back({{"amplitude", b.amplitude},
                                       {"center", b.center},
                                       {"alpha", b.alpha},
                                       {"cutoff", b.cutoff}});
  j["domain"] = {{"d", cfg.domain.d},     {"lower", cfg.domain.lower},
                 {"side", cfg.domain.side}, {"n", cfg.domain.n},
                 {"h_target", cfg.domain.h_target}, {"bc", cfg.domain.bc}};
  j["sweep"] = {{"eps", cfg.sweep.eps}, {"e", cfg.sweep.e},
                {"l", cfg.sweep.l},     {"delta", cfg.sweep.delta},
                {"q", cfg.sweep.q},     {"n_degree", cfg.sweep.n_degree}};
  j["windows"] = json::array();
  for (const WindowSpec& w : cfg.windows) j["windows"].push_back({{"e", w.e}, {"eps", w.eps}});
  j["seeds"] = cfg.seeds;
  j["out"] = cfg.out;
  j["constants"] = cfg.constants;
  j["ucp"] = {{"m_fit", cfg.ucp.m_fit},
              {"theta_lo", cfg.ucp.theta_lo},
              {"theta_hi", cfg.ucp.theta_hi},
              {"window_eps", cfg.ucp.window_eps},
              {"k_strength", cfg.ucp.k_strength}};
  j["fit"] = {{"records", cfg.fit.records}, {"kappa", cfg.fit.kappa}};
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
  std::uint64_t h = fnv1a(serialize_config(cfg));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace doslab::app
