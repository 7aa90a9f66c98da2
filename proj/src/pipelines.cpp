#include "pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "doslab/ballsolve.hpp"
#include "doslab/decompose.hpp"
#include "doslab/gridham.hpp"
#include "doslab/harmonic.hpp"
#include "doslab/potentials.hpp"
#include "doslab/spectral1d.hpp"
#include "json.hpp"
#include "pool.hpp"

namespace doslab::app {

using nlohmann::json;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  long long ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

VectorX<double> vec_of(const std::vector<double>& v) {
  VectorX<double> out(static_cast<long>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<long>(i)] = v[i];
  return out;
}

VectorX<double> lower_of(const DomainSpec& dom) {
  if (!dom.lower.empty()) return vec_of(dom.lower);
  return VectorX<double>(VectorX<double>::Zero(dom.d));
}

Potential<double> build_potential(const PotentialSpec& ps, int d, const VectorX<double>& lo,
                                  const VectorX<double>& hi, long long seed) {
  if (ps.kind == "zero") return Potential<double>::zero(d, ps.p);
  if (ps.kind == "seeded")
    return random_singular<double>(static_cast<unsigned long long>(seed), d, ps.p, lo, hi,
                                   ps.density, ps.amp_lo, ps.amp_hi);
  std::vector<PowerBump<double>> bumps;
  for (const BumpSpec& b : ps.bumps)
    bumps.push_back(
        power_singularity<double>(b.amplitude, vec_of(b.center), b.alpha, b.cutoff, ps.p));
  return Potential<double>(d, ps.p, 0, nullptr, std::move(bumps));
}

// Grid resolution for box side l: explicit n wins, otherwise the mesh target.
int grid_n_for(const DomainSpec& dom, double l) {
  if (dom.n > 0) return dom.n;
  int floor_n = dom.d == 1 ? 2 : 8;
  return std::clamp(static_cast<int>(std::ceil(l / dom.h_target)), floor_n, 1024);
}

double product_of(double eta, double eps, double kap) {
  if (eps > 0.5) return 0.0;  // diagnostic window; log-power not meaningful
  return eta * std::pow(std::log(1 / eps), kap);
}

long long job_seed(const RunConfig& cfg, size_t i) {
  return cfg.potential.kind == "seeded" ? cfg.seeds[i] : 0;
}

size_t job_seed_count(const RunConfig& cfg) {
  return cfg.potential.kind == "seeded" ? std::max<size_t>(cfg.seeds.size(), 1) : 1;
}

// ---------------------------------------------------------------------------
// dos1d / dosnd

std::vector<DosRow> run_dos1d(const RunConfig& cfg, int threads) {
  const double a0 = cfg.domain.lower.empty() ? 0.0 : cfg.domain.lower[0];
  double top = 0;
  for (double e : cfg.sweep.e)
    for (double eps : cfg.sweep.eps) top = std::max(top, e + eps);
  for (const WindowSpec& w : cfg.windows) top = std::max(top, w.e + w.eps);

  struct Job {
    long long seed;
    double l;
  };
  std::vector<Job> jobs;
  for (size_t si = 0; si < job_seed_count(cfg); ++si)
    for (double l : cfg.sweep.l) jobs.push_back({job_seed(cfg, si), l});

  std::vector<std::vector<DosRow>> parts(jobs.size());
  parallel_for_ordered(static_cast<long>(jobs.size()), threads, [&](long ji) {
    const Job& jb = jobs[static_cast<size_t>(ji)];
    VectorX<double> lo(1), hi(1);
    lo << a0;
    hi << a0 + jb.l;
    Potential<double> v = build_potential(cfg.potential, 1, lo, hi, jb.seed);
    EigenSystem<double> es = eigs_interval(v, Interval<double>{a0, jb.l}, top + 1.0);
    auto emit = [&](double e, double eps) {
      Stopwatch sw;
      DosRow r;
      r.d = 1;
      r.p = cfg.potential.p;
      r.l = jb.l;
      r.e = e;
      r.eps = eps;
      r.eta = dos_window(es, e, eps, jb.l);
      r.kappa = 1.0;
      r.bound_product = product_of(r.eta, eps, r.kappa);
      r.center[0] = a0 + jb.l / 2;
      r.seed = jb.seed;
      r.grid_n = es.n;
      r.wall_ms = sw.ms();
      parts[static_cast<size_t>(ji)].push_back(r);
    };
    for (double e : cfg.sweep.e)
      for (double eps : cfg.sweep.eps) emit(e, eps);
    for (const WindowSpec& w : cfg.windows) emit(w.e, w.eps);
  });

  std::vector<DosRow> rows;
  for (const auto& part : parts) rows.insert(rows.end(), part.begin(), part.end());
  return rows;
}

std::vector<DosRow> run_dosnd(const RunConfig& cfg, int threads) {
  const int d = cfg.domain.d;
  const double kap = d == 1 ? 1.0 : kappa(d, cfg.potential.p);
  const VectorX<double> base = lower_of(cfg.domain);

  struct Job {
    long long seed;
    double l;
  };
  std::vector<Job> jobs;
  for (size_t si = 0; si < job_seed_count(cfg); ++si)
    for (double l : cfg.sweep.l) jobs.push_back({job_seed(cfg, si), l});

  std::vector<std::vector<DosRow>> parts(jobs.size());
  parallel_for_ordered(static_cast<long>(jobs.size()), threads, [&](long ji) {
    const Job& jb = jobs[static_cast<size_t>(ji)];
    VectorX<double> hi = base, center = base;
    hi.array() += jb.l;
    center.array() += jb.l / 2;
    Potential<double> v = build_potential(cfg.potential, d, base, hi, jb.seed);
    int n = grid_n_for(cfg.domain, jb.l);
    Bc bc = cfg.domain.bc == "periodic" ? Bc::periodic : Bc::dirichlet;
    GridHamiltonian<double> ham =
        assemble_hamiltonian(v, BoxDomain<double>{center, jb.l}, n, bc);
    auto emit = [&](double e, double eps) {
      Stopwatch sw;
      DosRow r;
      r.d = d;
      r.p = cfg.potential.p;
      r.l = jb.l;
      r.e = e;
      r.eps = eps;
      r.eta = static_cast<double>(window_count(ham, e, eps)) / std::pow(jb.l, d);
      r.kappa = kap;
      r.bound_product = product_of(r.eta, eps, kap);
      for (int a = 0; a < d; ++a) r.center[a] = center[a];
      r.seed = jb.seed;
      r.grid_n = n;
      r.wall_ms = sw.ms();
      parts[static_cast<size_t>(ji)].push_back(r);
    };
    for (double e : cfg.sweep.e)
      for (double eps : cfg.sweep.eps) emit(e, eps);
    for (const WindowSpec& w : cfg.windows) emit(w.e, w.eps);
  });

  std::vector<DosRow> rows;
  for (const auto& part : parts) rows.insert(rows.end(), part.begin(), part.end());
  return rows;
}

// ---------------------------------------------------------------------------
// Continuation (ucp) pipeline

constexpr char kUcpHeader[] =
    "d,p,q,delta,k,e,lambda,m_fit,lhs,rhs,margin,pass,exponent,strong,psi_theta2,"
    "psi_ball2,zeta2,m_star,seed,grid_n,wall_ms";

std::string format_ucp_row(int d, double p, const UcpSuiteRow& r) {
  std::string out = std::to_string(d);
  for (double v :
       {p, r.q, r.delta, r.k, r.e, r.lambda, r.m_fit, r.lhs, r.rhs, r.margin})
    out += ',' + fmt_g(v);
  out += r.pass ? ",1" : ",0";
  out += ',' + fmt_g(r.exponent);
  out += r.strong ? ",1" : ",0";
  for (double v : {r.psi_theta2, r.psi_ball2, r.zeta2, r.m_star}) out += ',' + fmt_g(v);
  out += ',' + std::to_string(r.seed);
  out += ',' + std::to_string(r.grid_n);
  out += ',' + std::to_string(r.wall_ms);
  return out;
}

// Smallest exponent multiplier that passes the continuation check for this
// probe, reconstructed from a record evaluated at multiplier m_eval.
double m_star_of(const UcpRecord<double>& rec, double m_eval, double q, double delta) {
  if (!(rec.rhs > 0)) return std::numeric_limits<double>::infinity();
  if (rec.rhs >= rec.psi_theta2) return 0.0;
  double e1 = rec.exponent / m_eval;  // strength * depth factor
  return std::log(rec.psi_theta2 / rec.rhs) / (e1 * std::log(q / delta));
}

std::vector<UcpSuiteRow> ucp_rows_for(const GridHamiltonian<double>& ham, double p,
                                      const std::vector<double>& e_list,
                                      const std::vector<double>& q_list,
                                      const std::vector<double>& d_list,
                                      const VectorX<double>& theta_lo,
                                      const VectorX<double>& theta_hi, double window_eps,
                                      double k_strength, double m_fit, long long seed) {
  const GridGeom<double>& g = ham.grid;
  std::vector<long> theta = nodes_in_box(g, theta_lo, theta_hi);
  if (theta.empty())
    throw ValidationError("bad-parameter", "observation box contains no grid nodes");
  // Anchor the probe chain at the lowest corner node of the observation set;
  // walking out along the main diagonal makes the spread equal Q exactly.
  long anchor = theta[0];
  double best = std::numeric_limits<double>::infinity();
  for (long i : theta) {
    double s = g.node(i).sum();
    if (s < best) {
      best = s;
      anchor = i;
    }
  }
  VectorX<double> c = g.node(anchor);
  VectorX<double> u(VectorX<double>::Constant(g.dim, 1.0 / std::sqrt(double(g.dim))));

  std::vector<UcpSuiteRow> rows;
  for (double e0 : e_list) {
    SpectralWindow<double> w = eigs_window(ham, e0, window_eps);
    if (w.count == 0)
      throw NumericalError("empty-window", "no eigenvalue in [" + std::to_string(e0) +
                                               ", " + std::to_string(e0 + window_eps) + "]");
    VectorX<double> psi(w.basis.col(0));
    double lam = w.eigenvalues[0];
    for (double q : q_list) {
      VectorX<double> x0 = c + q * u;
      for (double delta : d_list) {
        Stopwatch sw;
        UcpProbe<double> probe = make_ucp_probe(g, theta, x0, delta, k_strength, p);
        UcpRecord<double> rec = ucp_check(ham, psi, lam, probe, m_fit);
        UcpSuiteRow r;
        r.seed = seed;
        r.q = probe.q;
        r.delta = delta;
        r.k = k_strength;
        r.e = e0;
        r.lambda = lam;
        r.m_fit = m_fit;
        r.lhs = rec.lhs;
        r.rhs = rec.rhs;
        r.margin = rec.margin;
        r.exponent = rec.exponent;
        r.m_star = m_star_of(rec, m_fit, probe.q, delta);
        r.psi_theta2 = rec.psi_theta2;
        r.psi_ball2 = rec.psi_ball2;
        r.zeta2 = rec.zeta2;
        r.pass = rec.pass;
        r.strong = probe.strong;
        r.grid_n = g.n;
        r.wall_ms = sw.ms();
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::vector<UcpSuiteRow> run_ucp_config(const RunConfig& cfg, int threads, double m_fit) {
  const int d = cfg.domain.d;
  const double l = cfg.domain.side;
  const VectorX<double> base = lower_of(cfg.domain);
  VectorX<double> center = base, hi = base;
  center.array() += l / 2;
  hi.array() += l;
  VectorX<double> tlo = vec_of(cfg.ucp.theta_lo), thi = vec_of(cfg.ucp.theta_hi);
  Bc bc = cfg.domain.bc == "periodic" ? Bc::periodic : Bc::dirichlet;

  std::vector<std::vector<UcpSuiteRow>> parts(job_seed_count(cfg));
  parallel_for_ordered(static_cast<long>(parts.size()), threads, [&](long ji) {
    long long seed = job_seed(cfg, static_cast<size_t>(ji));
    Potential<double> v = build_potential(cfg.potential, d, base, hi, seed);
    GridHamiltonian<double> ham =
        assemble_hamiltonian(v, BoxDomain<double>{center, l}, grid_n_for(cfg.domain, l), bc);
    parts[static_cast<size_t>(ji)] =
        ucp_rows_for(ham, cfg.potential.p, cfg.sweep.e, cfg.sweep.q, cfg.sweep.delta, tlo,
                     thi, cfg.ucp.window_eps, cfg.ucp.k_strength, m_fit, seed);
  });

  std::vector<UcpSuiteRow> rows;
  for (const auto& part : parts) rows.insert(rows.end(), part.begin(), part.end());
  return rows;
}

void write_ucp_csv(const std::filesystem::path& path, int d, double p,
                   const std::vector<UcpSuiteRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("bad-output", path.string() + ": cannot write CSV");
  out << kUcpHeader << '\n';
  for (const UcpSuiteRow& r : rows) out << format_ucp_row(d, p, r) << '\n';
}

// ---------------------------------------------------------------------------
// decompose / ballsolve pipelines

constexpr char kDecomposeHeader[] =
    "d,n_degree,r,order,slope,remainder_sup,lower_residual,seed,wall_ms";
constexpr char kBallsolveHeader[] =
    "d,p,r,kappa_hat,iterations,contraction,final_update,seed,wall_ms";

// Solid harmonic of degree n: Re((x + iy)^n) in the plane, r^n P_n(z/r) in
// space.  Exact vanishing order n at the origin, so the truncation map's
// degree gate is satisfied by construction.
std::function<double(const VectorX<double>&)> solid_harmonic(int d, int n) {
  if (d == 2)
    return [n](const VectorX<double>& x) {
      double rad = x.norm();
      if (rad == 0) return n == 0 ? 1.0 : 0.0;
      return std::pow(rad, n) * std::cos(n * std::atan2(x[1], x[0]));
    };
  return [n](const VectorX<double>& x) {
    double rad = x.norm();
    if (rad == 0) return n == 0 ? 1.0 : 0.0;
    return std::pow(rad, n) * legendre_p(n, x[2] / rad);
  };
}

struct DecompRow {
  int d, n_degree;
  double r;
  int order;
  double slope, remainder_sup, lower_residual;
  long long seed, wall_ms;
};

std::vector<DecompRow> run_decompose(const RunConfig& cfg, int threads) {
  const int d = cfg.domain.d;
  long long seed = job_seed(cfg, 0);

  struct Job {
    int n;
    double r;
  };
  std::vector<Job> jobs;
  for (int n : cfg.sweep.n_degree)
    for (double r : cfg.sweep.delta) jobs.push_back({n, r});

  std::vector<DecompRow> rows(jobs.size());
  parallel_for_ordered(static_cast<long>(jobs.size()), threads, [&](long ji) {
    const Job& jb = jobs[static_cast<size_t>(ji)];
    Stopwatch sw;
    VectorX<double> lo(VectorX<double>::Constant(d, -jb.r));
    VectorX<double> hi(VectorX<double>::Constant(d, jb.r));
    Potential<double> w = build_potential(cfg.potential, d, lo, hi, seed);
    VectorX<double> origin(VectorX<double>::Zero(d));
    BallSample<double> phi = sample_ball<double>(solid_harmonic(d, jb.n), d, origin, jb.r,
                                                 24, d == 2 ? 64 : 8);
    DecompositionResult<double> res =
        compute_YN<double>(phi, [&w](const VectorX<double>& x) { return w(x); }, jb.n);
    VanishingOrderResult<double> vo = vanishing_order(phi, origin);
    DecompRow& out = rows[static_cast<size_t>(ji)];
    out.d = d;
    out.n_degree = jb.n;
    out.r = jb.r;
    out.order = vo.order;
    out.slope = vo.slope;
    out.remainder_sup = res.remainder.size() ? res.remainder.cwiseAbs().maxCoeff() : 0.0;
    out.lower_residual = res.lower_degree_residual;
    out.seed = seed;
    out.wall_ms = sw.ms();
  });
  return rows;
}

struct BallRow {
  int d;
  double p, r, kappa_hat;
  int iterations;
  double contraction, final_update;
  long long seed, wall_ms;
};

std::vector<BallRow> run_ballsolve(const RunConfig& cfg, int threads) {
  const int d = cfg.domain.d;

  struct Job {
    long long seed;
    double r;
  };
  std::vector<Job> jobs;
  for (size_t si = 0; si < job_seed_count(cfg); ++si)
    for (double r : cfg.sweep.delta) jobs.push_back({job_seed(cfg, si), r});

  std::vector<BallRow> rows(jobs.size());
  parallel_for_ordered(static_cast<long>(jobs.size()), threads, [&](long ji) {
    const Job& jb = jobs[static_cast<size_t>(ji)];
    Stopwatch sw;
    VectorX<double> lo(VectorX<double>::Constant(d, -jb.r));
    VectorX<double> hi(VectorX<double>::Constant(d, jb.r));
    Potential<double> w = build_potential(cfg.potential, d, lo, hi, jb.seed);
    double r = jb.r;
    DirichletResult<double> res = dirichlet_solve<double>(
        w, r, [r](const VectorX<double>& x) { return 1.0 + x[0] / (2 * r); });
    BallRow& out = rows[static_cast<size_t>(ji)];
    out.d = d;
    out.p = cfg.potential.p;
    out.r = r;
    out.kappa_hat = res.kappa;
    out.iterations = res.iterations;
    out.contraction = res.observed_contraction;
    out.final_update = res.final_update;
    out.seed = jb.seed;
    out.wall_ms = sw.ms();
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Manifest

void write_manifest(const std::filesystem::path& out_dir, const RunConfig& cfg, int threads,
                    const std::vector<std::string>& files, long rows,
                    const FrozenConstants* fc) {
  json j;
  j["config_hash"] = config_hash_hex(cfg);
  j["pipeline"] = pipeline_name(cfg.pipeline);
  j["threads"] = threads;
  j["seeds"] = cfg.seeds;
  j["constants_path"] = cfg.constants;
  j["constants"] = fc ? json::parse(fc->to_json_text()) : json();
  j["outputs"] = files;
  j["rows"] = rows;
  j["tool"] = {{"name", "doslab"}, {"version", "0.1.0"}};
  j["versions"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out)
    throw ValidationError("bad-output", (out_dir / "manifest.json").string() +
                                            ": cannot write manifest");
  out << j.dump(2) << '\n';
}

template <typename Row>
void write_simple_csv(const std::filesystem::path& path, const char* header,
                      const std::vector<Row>& rows, std::string (*fmt)(const Row&)) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("bad-output", path.string() + ": cannot write CSV");
  out << header << '\n';
  for (const Row& r : rows) out << fmt(r) << '\n';
}

std::string format_decomp_row(const DecompRow& r) {
  std::string s = std::to_string(r.d);
  s += ',' + std::to_string(r.n_degree);
  s += ',' + fmt_g(r.r);
  s += ',' + std::to_string(r.order);
  s += ',' + fmt_g(r.slope);
  s += ',' + fmt_g(r.remainder_sup);
  s += ',' + fmt_g(r.lower_residual);
  s += ',' + std::to_string(r.seed);
  s += ',' + std::to_string(r.wall_ms);
  return s;
}

std::string format_ball_row(const BallRow& r) {
  std::string s = std::to_string(r.d);
  s += ',' + fmt_g(r.p);
  s += ',' + fmt_g(r.r);
  s += ',' + fmt_g(r.kappa_hat);
  s += ',' + std::to_string(r.iterations);
  s += ',' + fmt_g(r.contraction);
  s += ',' + fmt_g(r.final_update);
  s += ',' + std::to_string(r.seed);
  s += ',' + std::to_string(r.wall_ms);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// fit

FitSummary fit_records(const std::vector<DosRow>& rows, double kappa_override,
                       const FrozenConstants* fc) {
  if (rows.empty()) throw ValidationError("insufficient-data", "no data rows to fit");
  std::map<std::tuple<int, double, double>, std::vector<const DosRow*>> groups;
  for (const DosRow& r : rows) groups[{r.d, r.p, r.e}].push_back(&r);

  FitSummary out;
  for (const auto& [key, members] : groups) {
    FitGroup g;
    g.d = std::get<0>(key);
    g.p = std::get<1>(key);
    g.e = std::get<2>(key);
    g.kappa_used = kappa_override > 0
                       ? kappa_override
                       : (g.d == 1 ? 1.0 : kappa(g.d, g.p));
    std::vector<double> eps, eta;
    for (const DosRow* r : members) {
      if (r->eps > 0.5) {
        ++g.skipped;  // raw diagnostic windows stay out of the modulus fit
        continue;
      }
      eps.push_back(r->eps);
      eta.push_back(r->eta);
    }
    g.rows = static_cast<long>(eps.size());
    g.fit = log_holder_fit(eps, eta, g.kappa_used);
    g.kappa_hat = -g.fit.slope;
    if (fc) {
      auto it = fc->dos_sup.find(g.d);
      if (it != fc->dos_sup.end() && it->second > 0) {
        g.frozen_sup = it->second;
        g.pass = g.fit.sup_product <= g.frozen_sup ? 1 : 0;
      }
    }
    out.groups.push_back(std::move(g));
  }
  return out;
}

std::string FitSummary::text() const {
  std::ostringstream os;
  for (const FitGroup& g : groups) {
    os << "group d=" << g.d << " p=" << fmt_g(g.p) << " E=" << fmt_g(g.e)
       << ": rows=" << g.rows;
    if (g.skipped) os << " (skipped " << g.skipped << " diagnostic)";
    os << " sup=" << fmt_g(g.fit.sup_product) << " slope=" << fmt_g(g.fit.slope)
       << " kappa=" << fmt_g(g.kappa_used) << " kappa_hat=" << fmt_g(g.kappa_hat);
    if (g.pass >= 0)
      os << " frozen=" << fmt_g(g.frozen_sup) << (g.pass ? " PASS" : " FAIL");
    else
      os << " frozen=n/a";
    os << '\n';
  }
  os << "total groups: " << groups.size() << '\n';
  return os.str();
}

std::string FitSummary::json_text() const {
  json j;
  j["schema"] = 1;
  j["groups"] = json::array();
  for (const FitGroup& g : groups) {
    json e;
    e["d"] = g.d;
    e["p"] = g.p;
    e["E"] = g.e;
    e["rows"] = g.rows;
    e["skipped"] = g.skipped;
    e["kappa_used"] = g.kappa_used;
    e["sup_product"] = g.fit.sup_product;
    e["slope"] = g.fit.slope;
    e["kappa_hat"] = g.kappa_hat;
    e["fit_rows_used"] = g.fit.used;
    if (g.pass >= 0) {
      e["frozen_sup"] = g.frozen_sup;
      e["pass"] = g.pass == 1;
    } else {
      e["frozen_sup"] = json();
      e["pass"] = json();
    }
    j["groups"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// run

RunResult run_pipeline(const RunConfig& cfg, int threads, const std::string& out_override) {
  RunResult res;
  res.out_dir = out_override.empty() ? cfg.out : out_override;
  std::filesystem::create_directories(res.out_dir);

  FrozenConstants fc;
  bool have_fc = false;
  if (!cfg.constants.empty() && std::filesystem::exists(cfg.constants)) {
    fc = FrozenConstants::load(cfg.constants);
    have_fc = true;
  }

  switch (cfg.pipeline) {
    case Pipeline::dos1d:
    case Pipeline::dosnd: {
      std::vector<DosRow> rows = cfg.pipeline == Pipeline::dos1d
                                     ? run_dos1d(cfg, threads)
                                     : run_dosnd(cfg, threads);
      write_dos_csv(res.out_dir / "records.csv", rows);
      res.files = {"records.csv"};
      res.rows = static_cast<long>(rows.size());
      break;
    }
    case Pipeline::ucp: {
      double m_fit = cfg.ucp.m_fit > 0 ? cfg.ucp.m_fit : fc.require_m_fit();
      std::vector<UcpSuiteRow> rows = run_ucp_config(cfg, threads, m_fit);
      write_ucp_csv(res.out_dir / "ucp.csv", cfg.domain.d, cfg.potential.p, rows);
      res.files = {"ucp.csv"};
      res.rows = static_cast<long>(rows.size());
      break;
    }
    case Pipeline::decompose: {
      std::vector<DecompRow> rows = run_decompose(cfg, threads);
      write_simple_csv(res.out_dir / "decompose.csv", kDecomposeHeader, rows,
                       format_decomp_row);
      res.files = {"decompose.csv"};
      res.rows = static_cast<long>(rows.size());
      break;
    }
    case Pipeline::ballsolve: {
      std::vector<BallRow> rows = run_ballsolve(cfg, threads);
      write_simple_csv(res.out_dir / "ballsolve.csv", kBallsolveHeader, rows,
                       format_ball_row);
      res.files = {"ballsolve.csv"};
      res.rows = static_cast<long>(rows.size());
      break;
    }
    case Pipeline::fit: {
      std::vector<DosRow> rows = read_dos_csv(cfg.fit.records);
      FitSummary summary = fit_records(rows, cfg.fit.kappa, have_fc ? &fc : nullptr);
      std::ofstream txt(res.out_dir / "fit_summary.txt", std::ios::binary);
      txt << summary.text();
      std::ofstream js(res.out_dir / "fit_summary.json", std::ios::binary);
      js << summary.json_text();
      res.files = {"fit_summary.txt", "fit_summary.json"};
      res.rows = static_cast<long>(summary.groups.size());
      break;
    }
  }

  std::vector<std::string> all = res.files;
  all.push_back("manifest.json");
  write_manifest(res.out_dir, cfg, threads, all, res.rows, have_fc ? &fc : nullptr);
  res.files = all;
  return res;
}

// ---------------------------------------------------------------------------
// standardized continuation suite + calibration

std::vector<UcpSuiteRow> run_ucp_suite(double m_fit, int threads) {
  RunConfig cfg;
  cfg.pipeline = Pipeline::ucp;
  cfg.potential.kind = "seeded";
  cfg.potential.p = 4.0;
  cfg.potential.density = 0.3;
  cfg.potential.amp_lo = 0.6;
  cfg.potential.amp_hi = 1.4;
  cfg.domain.d = 2;
  cfg.domain.side = 4.0;
  cfg.domain.n = 48;
  cfg.seeds = {11, 23, 37};
  // The [2.5, 3.5] window holds the second Dirichlet level, whose nodal
  // lines cross the probe diagonal: the delta-ball can land in a low-mass
  // region, so the continuation inequality is non-vacuous there.
  cfg.sweep.e = {2.5};
  cfg.sweep.q = {1.5, 2.5, 4.0};
  cfg.sweep.delta = {0.1, 0.25, 0.5};
  cfg.ucp.window_eps = 1.0;
  cfg.ucp.k_strength = 2.0;
  cfg.ucp.theta_lo = {0.5, 0.5};
  cfg.ucp.theta_hi = {1.0, 1.0};
  return run_ucp_config(cfg, threads, m_fit);
}

namespace {

void calibrate_harmonic(FrozenConstants& fc) {
  for (int d : {2, 3}) {
    std::mt19937_64 gen(9000 + static_cast<unsigned long long>(d));
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    auto direction = [&] {
      VectorX<double> v(d);
      for (;;) {
        for (int a = 0; a < d; ++a) v[a] = gauss(gen);
        double nrm = v.norm();
        if (nrm > 1e-8) return VectorX<double>(v / nrm);
      }
    };
    double worst = 0;
    for (int trial = 0; trial < 50; ++trial) {
      double ay = 0.7 + 0.8 * unif(gen);
      VectorX<double> y(ay * direction());
      double ax = (0.05 + 0.45 * unif(gen)) * ay;
      VectorX<double> x(ax * direction());
      std::vector<HarmonicPoly<double>> terms = expand_fundamental(d, y, 10);
      VectorX<double> diff(x - y);
      double exact = fundamental_solution(d, diff);
      double partial = 0;
      for (int n = 0; n <= 10; ++n) {
        partial += terms[static_cast<size_t>(n)](x);
        if (n == 0) continue;
        double shape = expansion_tail_shape(d, ax, ay, n);
        worst = std::max(worst, std::abs(exact - partial) / shape);
      }
    }
    fc.harmonic_a[d] = 1.25 * worst;  // headroom for fresh sample clouds
  }
}

void calibrate_dos1d(FrozenConstants& fc, int threads) {
  std::vector<double> eps;
  for (int k = 1; k <= 12; ++k) eps.push_back(std::ldexp(1.0, -k));
  const std::vector<double> e_grid = {1.0, 2.0};
  Potential<double> zero = Potential<double>::zero(1, 2.0);

  // Box rule L = l0 log(1/eps): pick the smallest candidate for which the
  // free product eta log(1/eps) is nonincreasing over the last six widths.
  double chosen = 0;
  for (double l0 : {3.0, 3.2, 3.4, 3.6, 3.8, 4.0}) {
    std::vector<LogHolderRow<double>> rows = log_holder_check_1d(zero, 2.0, eps, l0, e_grid);
    bool ok = true;
    for (double e : e_grid) {
      std::vector<double> prod;
      for (const auto& r : rows)
        if (r.e == e && r.eps <= eps[6] + 1e-15) prod.push_back(r.product);
      for (size_t i = 1; i < prod.size(); ++i) ok = ok && prod[i] <= prod[i - 1] + 1e-12;
    }
    if (ok) {
      chosen = l0;
      break;
    }
  }
  if (chosen == 0)
    throw NumericalError("calibration-failed",
                         "no candidate box rule keeps the free product monotone");

  VectorX<double> lo(1), hi(1);
  lo << 0.0;
  hi << 34.0;  // covers L(2^-12) for every candidate rule
  std::vector<Potential<double>> pots = {zero};
  for (unsigned long long seed : {101ull, 202ull, 303ull})
    pots.push_back(random_singular<double>(seed, 1, 2.0, lo, hi, 0.35, 0.4, 1.2));

  std::vector<double> sups(pots.size(), 0.0);
  parallel_for_ordered(static_cast<long>(pots.size()), threads, [&](long i) {
    std::vector<LogHolderRow<double>> rows =
        log_holder_check_1d(pots[static_cast<size_t>(i)], 2.0, eps, chosen, e_grid);
    for (const auto& r : rows)
      sups[static_cast<size_t>(i)] = std::max(sups[static_cast<size_t>(i)], r.product);
  });
  fc.dos1d_l0 = chosen;
  fc.dos_sup[1] = 1.02 * *std::max_element(sups.begin(), sups.end());
}

void calibrate_dos2d(FrozenConstants& fc, int threads) {
  const double l0 = 6.0, h = 0.1, l_cap = 20.0;
  const double e0 = 3.0;
  const double kap = kappa(2, 4.0);
  std::vector<double> eps;
  for (int k = 1; k <= 8; ++k) eps.push_back(std::ldexp(1.0, -k));

  VectorX<double> lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << l_cap, l_cap;
  std::vector<Potential<double>> pots = {Potential<double>::zero(2, 4.0),
                                         random_singular<double>(404, 2, 4.0, lo, hi, 0.03,
                                                                 0.4, 1.0)};

  struct Job {
    size_t pot;
    double eps;
  };
  std::vector<Job> jobs;
  for (size_t pi = 0; pi < pots.size(); ++pi)
    for (double ep : eps) jobs.push_back({pi, ep});

  std::vector<double> prods(jobs.size(), 0.0);
  parallel_for_ordered(static_cast<long>(jobs.size()), threads, [&](long ji) {
    const Job& jb = jobs[static_cast<size_t>(ji)];
    double l = std::min(l0 * std::log(1 / jb.eps), l_cap);
    int n = std::clamp(static_cast<int>(std::ceil(l / h)), 8, 200);
    VectorX<double> center(2);
    center << l / 2, l / 2;
    GridHamiltonian<double> ham = assemble_hamiltonian(
        pots[jb.pot], BoxDomain<double>{center, l}, n, Bc::dirichlet);
    double eta = static_cast<double>(window_count(ham, e0, jb.eps)) / (l * l);
    prods[static_cast<size_t>(ji)] = eta * std::pow(std::log(1 / jb.eps), kap);
  });
  fc.dos2d_l0 = l0;
  fc.dos2d_h = h;
  fc.dos_sup[2] = 1.05 * *std::max_element(prods.begin(), prods.end());
}

void calibrate_ucp(FrozenConstants& fc, int threads) {
  std::vector<UcpSuiteRow> rows = run_ucp_suite(1.0, threads);
  double worst = 0;
  for (const UcpSuiteRow& r : rows) worst = std::max(worst, r.m_star);
  if (!std::isfinite(worst))
    throw NumericalError("calibration-failed", "continuation probe with empty right side");
  fc.ucp_m_fit = std::max(0.05, 1.10 * worst);
  fc.ucp_m_by_d[2] = fc.ucp_m_fit;
}

}  // namespace

FrozenConstants calibrate_suite(const std::string& suite, int threads,
                                const FrozenConstants* prior) {
  FrozenConstants fc = prior ? *prior : FrozenConstants{};
  bool all = suite == "all";
  bool known = all;
  if (all || suite == "harmonic") {
    calibrate_harmonic(fc);
    known = true;
  }
  if (all || suite == "dos1d") {
    calibrate_dos1d(fc, threads);
    known = true;
  }
  if (all || suite == "dos2d") {
    calibrate_dos2d(fc, threads);
    known = true;
  }
  if (all || suite == "ucp") {
    calibrate_ucp(fc, threads);
    known = true;
  }
  if (!known)
    throw ValidationError("bad-parameter",
                          "unknown calibration suite '" + suite +
                              "' (expected harmonic|dos1d|dos2d|ucp|all)");
  return fc;
}

}  // namespace doslab::app
