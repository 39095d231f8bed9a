#include "qlnf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

#include "qlnf/generator.hpp"
#include "qlnf/trilinear.hpp"

namespace qlnf {

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string g6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::vector<Monomial> parse_F(const json& spec, int d, bool semilinear) {
  if (spec.is_string()) {
    const auto s = spec.get<std::string>();
    if (s == "default") return semilinear ? std::vector<Monomial>{} : default_F(d);
    if (s == "none") return {};
    throw ConfigError("F_spec must be \"default\", \"none\" or a list of monomials");
  }
  if (!spec.is_array()) throw ConfigError("F_spec must be \"default\", \"none\" or a list of monomials");
  std::vector<Monomial> out;
  for (const auto& m : spec) {
    if (!m.is_object() || !m.contains("coef") || !m.contains("e")) throw ConfigError("F_spec monomials need coef and e");
    Monomial mono;
    mono.coef = get_as<double>(m["coef"], "F_spec.coef");
    auto e = get_as<std::vector<int>>(m["e"], "F_spec.e");
    if (e.size() > 4) throw ConfigError("F_spec exponent lists have at most 4 entries");
    for (std::size_t i = 0; i < e.size(); ++i) mono.e[i] = e[i];
    out.push_back(mono);
  }
  return out;
}

const std::set<std::string> kKeys = {"model", "d", "K", "s", "eps", "epsilon_list", "seed", "dt", "t_max",
                                     "N_threshold", "semilinear", "potential", "mass", "h_kind", "F_spec",
                                     "G_spec", "output_dir", "epsilon", "snapshot_every", "nonlinear",
                                     "kappa", "samples"};

int k_cap(int d) { return d == 1 ? 128 : d == 2 ? 32 : 12; }
int scan_cap(int d) { return d == 1 ? 128 : d == 2 ? 24 : 10; }

// Real coefficient depending only on the four shells; has every quartic symmetry.
QuarticHamiltonian shell_hamiltonian(const FrequencyLattice& lat) {
  const int d = lat.d;
  return {lat, [d](const IVec& xi, const IVec& eta, const IVec& zeta) {
            const IVec p = sub(sub(xi, eta), zeta);
            const int s = norm2(xi, d) + norm2(eta, d) + norm2(zeta, d) + norm2(p, d);
            return cplx(1.0 / (1.0 + s) + 0.25 * std::cos(0.3 * s));
          }};
}

double max_diff(const FourierField& a, const FourierField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

CheckResult make(int criterion, std::string name, bool ok, double value, std::string bound,
                 std::string detail = "") {
  CheckResult r;
  r.criterion = criterion;
  r.name = std::move(name);
  r.status = ok ? CheckStatus::pass : CheckStatus::fail;
  r.value = value;
  r.bound = std::move(bound);
  r.detail = std::move(detail);
  return r;
}

// Runs f, stamping the elapsed time on each result; exceptions become a failed check.
template <class F>
void timed(std::vector<CheckResult>& out, int criterion, const std::string& name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto rs = f();
    const double dt = seconds_since(t0) / static_cast<double>(std::max<std::size_t>(1, rs.size()));
    for (auto& r : rs) {
      r.seconds = dt;
      out.push_back(std::move(r));
    }
  } catch (const std::exception& e) {
    CheckResult r = make(criterion, name, false, 0.0, "", std::string("exception: ") + e.what());
    r.seconds = seconds_since(t0);
    out.push_back(r);
  }
}

const std::vector<double> kSweepEps = {1e-1, 3e-2, 1e-2};
const std::vector<double> kLedgerEps = {1e-1, 1e-2, 1e-3};

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!kKeys.count(k)) throw ConfigError("unknown config key '" + k + "'");
  ExperimentConfig c;
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) field = get_as<std::decay_t<decltype(field)>>(j[key], key);
  };
  opt("model", c.model);
  opt("d", c.d);
  opt("K", c.K);
  opt("s", c.s);
  opt("eps", c.eps);
  opt("epsilon_list", c.epsilon_list);
  opt("seed", c.seed);
  opt("dt", c.dt);
  opt("t_max", c.t_max);
  opt("N_threshold", c.N_threshold);
  opt("semilinear", c.semilinear);
  opt("mass", c.mass);
  opt("h_kind", c.h_kind);
  opt("output_dir", c.output_dir);
  opt("epsilon", c.epsilon);
  opt("snapshot_every", c.snapshot_every);
  opt("nonlinear", c.nonlinear);
  opt("kappa", c.kappa);
  opt("samples", c.samples);
  if (j.contains("potential")) {
    const json& p = j["potential"];
    if (!p.is_object()) throw ConfigError("potential must be an object");
    for (const auto& [k, v] : p.items())
      if (k != "seed" && k != "m" && k != "enabled") throw ConfigError("unknown potential key '" + k + "'");
    if (p.contains("seed")) c.potential.seed = get_as<std::uint64_t>(p["seed"], "potential.seed");
    if (p.contains("m")) c.potential.m = get_as<int>(p["m"], "potential.m");
    if (p.contains("enabled")) c.potential.enabled = get_as<bool>(p["enabled"], "potential.enabled");
  }
  if (j.contains("F_spec")) c.F_spec = j["F_spec"];
  if (j.contains("G_spec")) {
    auto g = get_as<std::vector<double>>(j["G_spec"], "G_spec");
    if (g.size() != 5) throw ConfigError("G_spec must list 5 coefficients");
    std::copy(g.begin(), g.end(), c.G_spec.begin());
  } else if (c.semilinear) {
    c.G_spec = {0.25, 0.0, 0.0, 0.0, 0.0};
  }

  if (c.model != "nls" && c.model != "kg") throw ConfigError("model must be nls or kg");
  if (c.d < 1 || c.d > 3) throw ConfigError("d must be 1, 2 or 3");
  if (c.K < 1) throw ConfigError("K must be positive");
  if (!(c.s > 0.0)) throw ConfigError("s must be positive");
  if (!(c.eps > 0.0 && c.eps < 0.5)) throw ConfigError("eps must lie in (0, 1/2)");
  if (c.epsilon_list.empty()) throw ConfigError("epsilon_list must not be empty");
  for (double e : c.epsilon_list)
    if (!(e > 0.0)) throw ConfigError("epsilon_list entries must be positive");
  if (!(c.dt >= 0.0)) throw ConfigError("dt must be >= 0 (0 selects the CFL step)");
  if (!(c.t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (c.N_threshold < 1) throw ConfigError("N_threshold must be >= 1");
  if (c.potential.m <= 1) throw ConfigError("potential.m must be > 1");
  if (c.h_kind != "tau_squared") throw ConfigError("h_kind must be tau_squared");
  if (c.semilinear && c.model != "kg") throw ConfigError("semilinear applies to model kg only");
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (c.snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
  if (!(c.kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (c.samples <= 0) throw ConfigError("samples must be positive");
  parse_F(c.F_spec, c.d, c.semilinear);
  if (c.model == "kg") kg_config(c);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = c.model;
  j["d"] = c.d;
  j["K"] = c.K;
  j["s"] = c.s;
  j["eps"] = c.eps;
  j["epsilon_list"] = c.epsilon_list;
  j["seed"] = c.seed;
  j["dt"] = c.dt;
  j["t_max"] = c.t_max;
  j["N_threshold"] = c.N_threshold;
  j["semilinear"] = c.semilinear;
  j["potential"] = {{"seed", c.potential.seed}, {"m", c.potential.m}, {"enabled", c.potential.enabled}};
  j["mass"] = c.mass;
  j["h_kind"] = c.h_kind;
  j["F_spec"] = c.F_spec;
  j["G_spec"] = c.G_spec;
  j["output_dir"] = c.output_dir;
  j["epsilon"] = c.epsilon;
  j["snapshot_every"] = c.snapshot_every;
  j["nonlinear"] = c.nonlinear;
  j["kappa"] = c.kappa;
  j["samples"] = c.samples;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("output_dir");  // results do not depend on where they are written
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string header_comment(const ExperimentConfig& cfg) {
  return "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed) + "\n# config=" +
         config_to_json(cfg).dump() + "\n";
}

NlsConfig nls_config(const ExperimentConfig& cfg) {
  NlsConfig c;
  c.d = cfg.d;
  c.K = cfg.K;
  c.h_kind = cfg.h_kind;
  c.V = cfg.potential.enabled ? build_potential(cfg.potential.seed, cfg.potential.m, cfg.d, cfg.K)
                              : PotentialTable::zero(cfg.d);
  c.eps = cfg.eps;
  c.s = cfg.s;
  c.t_max = cfg.t_max;
  c.nonlinear = cfg.nonlinear;
  c.dt = cfg.dt > 0.0 ? cfg.dt : 0.5 / nls_lambda_max(c);
  try {
    validate(c);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

KgConfig kg_config(const ExperimentConfig& cfg) {
  KgConfig c;
  c.d = cfg.d;
  c.K = cfg.K;
  c.mass = cfg.mass;
  c.F = parse_F(cfg.F_spec, cfg.d, cfg.semilinear);
  c.G = cfg.G_spec;
  c.semilinear = cfg.semilinear;
  c.s = cfg.s;
  c.t_max = cfg.t_max;
  c.eps = cfg.eps;
  c.nonlinear = cfg.nonlinear;
  try {
    validate(c);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  c.dt = cfg.dt > 0.0 ? cfg.dt : 0.5 / kg_lambda_max(c);
  return c;
}

void check_caps(const ExperimentConfig& cfg, const std::string& command) {
  if (command == "divisor-stats") {
    if (cfg.K > scan_cap(cfg.d))
      throw ConfigError("divisor-stats: K = " + std::to_string(cfg.K) + " exceeds the enumeration cap " +
                        std::to_string(scan_cap(cfg.d)) + " for d = " + std::to_string(cfg.d));
    return;
  }
  if (command == "mass-measure") {
    if (cfg.d < 2) throw ConfigError("mass-measure needs d >= 2");
    if (cfg.K > 64) throw ConfigError("mass-measure: quadruple search radius K is capped at 64");
    if (cfg.samples > 100000000L) throw ConfigError("mass-measure: samples capped at 1e8");
    return;
  }
  if (cfg.K > k_cap(cfg.d))
    throw ConfigError(command + ": K = " + std::to_string(cfg.K) + " exceeds the cap " +
                      std::to_string(k_cap(cfg.d)) + " for d = " + std::to_string(cfg.d));
  const double dt = cfg.model == "nls" ? nls_config(cfg).dt : kg_config(cfg).dt;
  if (cfg.t_max / dt > 2e7) throw ConfigError(command + ": more than 2e7 time steps requested");
}

json field_to_json(const FourierField& f) {
  const auto& lat = f.lattice();
  json out = json::array();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const IVec k = lat.freq(i);
    json kk = json::array();
    for (int t = 0; t < lat.d; ++t) kk.push_back(k[t]);
    out.push_back(json::array({kk, f[i].real(), f[i].imag()}));
  }
  return out;
}

FourierField field_from_json(const json& j, const FrequencyLattice& lat) {
  FourierField f(lat);
  for (const auto& e : j) {
    IVec k{0, 0, 0};
    const auto kk = e.at(0).get<std::vector<int>>();
    if (static_cast<int>(kk.size()) != lat.d) throw ConfigError("field entry has the wrong dimension");
    for (int t = 0; t < lat.d; ++t) k[t] = kk[t];
    if (!lat.contains(k)) throw ConfigError("field entry outside the lattice");
    f.at(k) = cplx(e.at(1).get<double>(), e.at(2).get<double>());
  }
  return f;
}

SimulationResult simulate(const ExperimentConfig& cfg) {
  SimulationResult res;
  std::ostringstream csv;
  csv << header_comment(cfg);
  json traj;
  traj["config_hash"] = config_hash(cfg);
  traj["seed"] = cfg.seed;
  traj["model"] = cfg.model;
  traj["snapshots"] = json::array();

  const bool nls = cfg.model == "nls";
  NlsConfig nc;
  KgConfig kc;
  if (nls)
    nc = nls_config(cfg);
  else
    kc = kg_config(cfg);
  const double dt = nls ? nc.dt : kc.dt;
  const FrequencyLattice lat(cfg.d, cfg.K);
  traj["dt"] = dt;
  const long n = static_cast<long>(std::ceil(cfg.t_max / dt - 1e-9));
  const long every_row = cfg.snapshot_every > 0 ? cfg.snapshot_every : std::max(1L, n / 200);

  PairState U(initial_profile(lat, cfg.seed, cfg.s, cfg.epsilon));
  double t = 0.0;
  csv << (nls ? "t,hamiltonian,mass,hs_norm\n" : "t,hamiltonian,hs_norm\n");
  auto record = [&](long i) {
    if (i % every_row == 0 || i == n) {
      csv << g17(t) << ',' << g17(nls ? nls_hamiltonian(U, nc) : kg_hamiltonian(U, kc)) << ',';
      if (nls) csv << g17(nls_mass(U)) << ',';
      csv << g17(sobolev_norm(U.plus, cfg.s)) << '\n';
    }
    if (cfg.snapshot_every > 0 && i % cfg.snapshot_every == 0)
      traj["snapshots"].push_back({{"t", t}, {"field", field_to_json(U.plus)}});
  };
  record(0);
  for (long i = 1; i <= n; ++i) {
    if (nls) {
      NlsState st = step(NlsState{t, U}, nc);
      t = st.t;
      U = std::move(st.U);
    } else {
      KgState st = step(KgState{t, U}, kc);
      t = st.t;
      U = std::move(st.U);
    }
    record(i);
  }
  res.csv = csv.str();
  res.trajectory = std::move(traj);
  res.steps = n;
  return res;
}

EnergyLedger ledger_from_trajectory(const json& trajectory, const ExperimentConfig& cfg) {
  if (!trajectory.contains("config_hash") || !trajectory.contains("snapshots"))
    throw ConfigError("trajectory file lacks config_hash or snapshots");
  const auto hash = trajectory["config_hash"].get<std::string>();
  if (hash != config_hash(cfg))
    throw ConfigError("trajectory was written under config hash " + hash + ", current config hashes to " +
                      config_hash(cfg));
  const FrequencyLattice lat(cfg.d, cfg.K);
  if (cfg.model == "nls") {
    std::vector<NlsState> snaps;
    for (const auto& s : trajectory["snapshots"])
      snaps.push_back({s.at("t").get<double>(), PairState(field_from_json(s.at("field"), lat))});
    return energy_decomposition(snaps, nls_config(cfg));
  }
  std::vector<KgState> snaps;
  for (const auto& s : trajectory["snapshots"])
    snaps.push_back({s.at("t").get<double>(), PairState(field_from_json(s.at("field"), lat))});
  return energy_decomposition(snaps, kg_config(cfg));
}

RunRecord lifespan_run(const ExperimentConfig& cfg, double epsilon) {
  RunRecord r;
  r.epsilon = epsilon;
  r.seed = cfg.seed;
  r.config_hash = config_hash(cfg);
  r.T_star = cfg.t_max;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const FrequencyLattice lat(cfg.d, cfg.K);
    PairState U(initial_profile(lat, cfg.seed, cfg.s, epsilon));
    const double h0 = sobolev_norm(U.plus, cfg.s);
    r.max_norm_ratio = 1.0;
    const bool nls = cfg.model == "nls";
    NlsConfig nc;
    KgConfig kc;
    if (nls)
      nc = nls_config(cfg);
    else
      kc = kg_config(cfg);
    const double dt = nls ? nc.dt : kc.dt;
    const long n = static_cast<long>(std::ceil(cfg.t_max / dt - 1e-9));
    double t = 0.0;
    for (long i = 1; i <= n; ++i) {
      if (nls) {
        NlsState st = step(NlsState{t, U}, nc);
        t = st.t;
        U = std::move(st.U);
      } else {
        KgState st = step(KgState{t, U}, kc);
        t = st.t;
        U = std::move(st.U);
      }
      const double ratio = sobolev_norm(U.plus, cfg.s) / h0;
      r.max_norm_ratio = std::max(r.max_norm_ratio, ratio);
      if (!std::isfinite(ratio) || ratio >= 2.0) {
        r.reached_threshold = true;
        r.T_star = std::min(t, cfg.t_max);
        break;
      }
    }
  } catch (const std::exception& e) {
    r.failed = true;
    r.error = e.what();
  }
  r.wall_time = seconds_since(t0);
  return r;
}

std::vector<RunRecord> lifespan_experiment(const ExperimentConfig& cfg) {
  const auto& eps = cfg.epsilon_list;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (eps[i] > 0.2) throw ConfigError("lifespan: epsilon_list entries must be <= 0.2");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw ConfigError("lifespan: epsilon_list must be strictly descending");
  }
  std::vector<RunRecord> out(eps.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < eps.size();) out[i] = lifespan_run(cfg, eps[i]);
  };
  const std::size_t nw = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), eps.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

std::string lifespan_csv(const std::vector<RunRecord>& runs, const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << header_comment(cfg);
  out << "epsilon,T_star,max_norm_ratio,reached_threshold,status,seed,config_hash\n";
  for (const auto& r : runs)
    out << g17(r.epsilon) << ',' << g17(r.T_star) << ',' << g17(r.max_norm_ratio) << ','
        << (r.reached_threshold ? 1 : 0) << ',' << (r.failed ? "failed" : "ok") << ',' << r.seed << ','
        << r.config_hash << '\n';
  return out.str();
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& pairs, double t_max) {
  std::vector<double> x, y;
  for (const auto& [e, T] : pairs)
    if (e > 0.0 && T > 0.0 && T < t_max) {
      x.push_back(e);
      y.push_back(T);
    }
  if (x.size() < 3)
    throw std::invalid_argument("fit_exponent needs at least 3 points with T* < t_max, got " +
                                std::to_string(x.size()));
  LineFit f = fit_loglog(x, y);
  return {f.slope, f.intercept, f.r2, static_cast<int>(x.size())};
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::fail:
      return "fail";
    default:
      return "skipped";
  }
}

std::vector<CheckResult> check_identities() {
  std::vector<CheckResult> out;
  timed(out, 1, "nls diagonalizer", [] {
    NlsConfig c;
    c.K = 16;
    double det = 0.0, conj = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
      auto D = diag_order2(PairState(initial_profile(c.lattice(), seed, c.s, 0.15)), c);
      det = std::max(det, D.determinant_defect);
      conj = std::max(conj, D.conjugation_defect);
    }
    return std::vector<CheckResult>{make(1, "nls s1^2-|s2|^2=1", det <= 1e-12, det, "<= 1e-12"),
                                    make(1, "nls off-diagonal of S^-1 E(1+A)S", conj <= 1e-12, conj, "<= 1e-12")};
  });
  timed(out, 1, "kg diagonalizer", [] {
    double det = 0.0, conj = 0.0;
    for (int d : {1, 2}) {
      KgConfig c = kg_default(d, d == 1 ? 16 : 6);
      for (std::uint64_t seed : {1, 7}) {
        auto D = kg_diag_order1(PairState(initial_profile(c.lattice(), seed, c.s, 0.15)), c);
        det = std::max(det, D.determinant_defect);
        conj = std::max(conj, D.conjugation_defect);
      }
    }
    return std::vector<CheckResult>{make(1, "kg s1^2-s2^2=1", det <= 1e-12, det, "<= 1e-12"),
                                    make(1, "kg off-diagonal of S^-1 E(1+A)S", conj <= 1e-12, conj, "<= 1e-12")};
  });
  timed(out, 1, "kg complex transform round trip", [] {
    double e = 0.0;
    for (int d : {1, 2}) {
      FrequencyLattice lat(d, d == 1 ? 32 : 8);
      auto psi = random_field(lat, 11, 2.0, true), phi = random_field(lat, 12, 1.0, true);
      for (double m : {1.0, 1.5, 2.0}) {
        auto [p, q] = inverse_complex_transform(complex_transform(psi, phi, m), m);
        e = std::max(e, std::max(max_diff(p, psi) / psi.max_abs(), max_diff(q, phi) / phi.max_abs()));
      }
    }
    return std::vector<CheckResult>{make(1, "kg complex transform round trip", e <= 1e-13, e, "<= 1e-13")};
  });
  return out;
}

std::vector<CheckResult> check_cancellation() {
  std::vector<CheckResult> out;
  for (int d : {1, 2}) {
    const std::string tag = "d=" + std::to_string(d);
    timed(out, 2, "cancellation " + tag, [d, tag] {
      NlsConfig c;
      c.d = d;
      c.K = d == 1 ? 16 : 8;
      c.V = build_potential(5, 2, d, c.K);
      auto lat = c.lattice();
      auto z = random_field(lat, 3, 2.0);
      z *= cplx(0.1);
      auto zn = random_field(lat, 8, 3.0);
      std::vector<CheckResult> rs;
      const std::pair<std::string, CubicField> fields[] = {
          {"nls z-field", nls_z_field(c)}, {"shell hamiltonian", hamiltonian_vector_field(shell_hamiltonian(lat))}};
      for (const auto& [label, X] : fields) {
        auto r = cancellation_suite(X, z, zn, c.n(), c.eps);
        double worst = 0.0;
        std::string detail;
        for (const auto& [k, v] : r.as_map()) {
          worst = std::max(worst, std::abs(v));
          detail += k + "=" + g6(v) + " ";
        }
        rs.push_back(make(2, "cancellation " + label + " " + tag + " K=" + std::to_string(c.K), worst <= 1e-12,
                          worst, "<= 1e-12", detail));
      }
      return rs;
    });
  }
  return out;
}

std::vector<CheckResult> check_superactions() {
  std::vector<CheckResult> out;
  timed(out, 3, "super actions", [] {
    FrequencyLattice lat(2, 8);
    auto z = random_field(lat, 7, 0.0);
    z *= cplx(0.3);
    auto r = resonant_flow_superactions(hamiltonian_vector_field(shell_hamiltonian(lat)), z, 1e-3, 1.0);
    return std::vector<CheckResult>{make(3, "super-action drift d=2 K=8 t=1", r.max_relative_drift <= 1e-8,
                                         r.max_relative_drift, "<= 1e-8",
                                         "shells=" + std::to_string(r.shells) +
                                             " resonant_triples=" + std::to_string(r.resonant_triples))};
  });
  return out;
}

std::vector<CheckResult> check_sweeps() {
  std::vector<CheckResult> out;
  timed(out, 4, "nls paralinearization residual", [] {
    NlsConfig c;
    c.K = 16;
    c.s = 4.0;
    auto u0 = initial_profile(c.lattice(), 9, c.s, 1.0);
    std::vector<double> r;
    for (double e : kSweepEps)
      r.push_back(sobolev_norm(nls_paralinear_symbols(PairState(cplx(e) * u0), c).residual.plus, c.s));
    const double sl = fit_loglog(kSweepEps, r).slope;
    return std::vector<CheckResult>{make(4, "nls paralinearization residual slope", sl >= 6.5, sl, ">= 6.5")};
  });
  timed(out, 4, "kg paralinearization residual", [] {
    KgConfig c = kg_default(1, 16);
    c.s = 4.0;
    auto u0 = initial_profile(c.lattice(), 3, c.s, 1.0);
    std::vector<double> r;
    for (double e : kSweepEps)
      r.push_back(sobolev_norm(kg_paralinear_symbols(PairState(cplx(e) * u0), c).residual.plus, c.s));
    const double sl = fit_loglog(kSweepEps, r).slope;
    return std::vector<CheckResult>{make(4, "kg paralinearization residual slope", sl >= 4.5, sl, ">= 4.5")};
  });
  timed(out, 4, "kg approximate inverse", [] {
    KgConfig c = kg_default(1, 16);
    c.s = 4.0;
    GeneratorSpec g = kg_generator_spec(c);
    auto u0 = initial_profile(c.lattice(), 3, c.s, 1.0);
    std::vector<double> r;
    for (double e : kSweepEps) {
      PairState W(cplx(e) * u0);
      r.push_back(sobolev_norm(W.plus - generator_inverse(g, kg_diag_order0(W, c).Z).plus, c.s));
    }
    const double sl = fit_loglog(kSweepEps, r).slope;
    return std::vector<CheckResult>{make(4, "kg approximate inverse residual slope", sl >= 4.5, sl, ">= 4.5")};
  });
  timed(out, 4, "energy ledger slopes", [] {
    NlsConfig c;
    c.K = 32;
    c.s = 4.0;
    auto lat = c.lattice();
    auto b2 = tabulate_kernel(build_B2_kernel(c).q, lat);
    KgConfig k = kg_default(1, 32);
    k.s = 4.0;
    auto u0 = initial_profile(lat, 1, c.s, 1.0);
    std::vector<double> B, G, KB, KG;
    for (double e : kLedgerEps) {
      EnergyTerms t = nls_energy_terms(NlsState{0.0, PairState(cplx(e) * u0)}, c, &b2);
      B.push_back(t.B);
      G.push_back(t.D - t.B);
      EnergyTerms s = kg_energy_terms(KgState{0.0, PairState(cplx(e) * u0)}, k);
      KB.push_back(s.B);
      KG.push_back(s.D - s.B);
    }
    const double b = fit_loglog(kLedgerEps, B).slope, g = fit_loglog(kLedgerEps, G).slope;
    const double kb = fit_loglog(kLedgerEps, KB).slope, kg = fit_loglog(kLedgerEps, KG).slope;
    return std::vector<CheckResult>{make(4, "nls B slope", std::abs(b - 4.0) <= 0.2, b, "4.0 +- 0.2"),
                                    make(4, "nls B_gt5 slope", g >= 5.5, g, ">= 5.5"),
                                    make(4, "kg B slope", std::abs(kb - 4.0) <= 0.2, kb, "4.0 +- 0.2"),
                                    make(4, "kg B_gt5 slope", kg >= 5.5, kg, ">= 5.5")};
  });
  return out;
}

std::vector<CheckResult> check_taylor() {
  std::vector<CheckResult> out;
  timed(out, 5, "taylor surrogate", [] {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CheckResult> rs;
    for (int d : {1, 2}) {
      std::vector<double> x, e;
      for (int J = 16; J <= 1024; J *= 2) {
        const IVec j{J, 0, 0}, k = d == 1 ? IVec{J - 1, 0, 0} : IVec{J - 1, 1, 0};
        x.push_back(J);
        e.push_back(taylor_error_check(j, k, 1.5, d).error);
      }
      const double sl = fit_loglog(x, e).slope;
      rs.push_back(make(5, "taylor error slope d=" + std::to_string(d) + " m=1.5", std::abs(sl + 4.0) <= 0.3, sl,
                        "-4 +- 0.3"));
    }
    const double secs = seconds_since(t0);
    rs.push_back(make(5, "taylor runtime", secs < 1.0, secs, "< 1 s"));
    return rs;
  });
  return out;
}

std::vector<CheckResult> check_divisors(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  auto skipped = [](std::string name, int K) {
    CheckResult r = make(6, std::move(name), true, 0.0, "", "K=" + std::to_string(K) + " below the enumeration minimum");
    r.status = CheckStatus::skipped;
    return r;
  };
  if (opt.scan_K_nls < kMinScanK) {
    out.push_back(skipped("nls d=1 divisor scan", opt.scan_K_nls));
  } else {
    timed(out, 6, "nls d=1 divisor scan", [&] {
      ScanParams p;
      p.V = PotentialTable::zero(1);
      auto r = divisor_scan(1, opt.scan_K_nls, "nls", p);
      const bool ok = r.has_data && r.min_abs_omega == 2.0 && r.exact_zero == 0;
      return std::vector<CheckResult>{make(6, "nls d=1 K=" + std::to_string(opt.scan_K_nls) + " min |omega|", ok,
                                           r.min_abs_omega, "== 2",
                                           "nonresonant=" + std::to_string(r.nonresonant) +
                                               " exact_zero=" + std::to_string(r.exact_zero))};
    });
  }
  for (double m : opt.kg_masses) {
    const std::string name = "kg d=3 K=" + std::to_string(opt.scan_K_kg) + " m=" + g6(m);
    if (opt.scan_K_kg < kMinScanK) {
      out.push_back(skipped(name, opt.scan_K_kg));
      continue;
    }
    timed(out, 6, name, [&] {
      ScanParams p;
      p.mass = m;
      auto r = divisor_scan(3, opt.scan_K_kg, "kg", p);
      std::string detail = "beta=" + g6(r.beta) + " gamma=" + g6(r.gamma) + " N0=" + g6(r.N0) +
                           " min|omega|=" + g6(r.min_abs_omega) + " exact_zero=" + std::to_string(r.exact_zero);
      if (r.exact_zero > 0 && !r.worst.empty()) {
        const auto& w = r.worst.front();
        auto v = [](const IVec& k) {
          return "(" + std::to_string(k[0]) + "," + std::to_string(k[1]) + "," + std::to_string(k[2]) + ")";
        };
        detail += " e.g. xi=" + v(w.xi) + " eta=" + v(w.eta) + " zeta=" + v(w.zeta);
      }
      return std::vector<CheckResult>{make(6, name + " beta", r.has_data && r.beta <= 4.0, r.beta, "<= 4", detail),
                                      make(6, name + " gamma", r.has_data && r.gamma > 0.0, r.gamma, "> 0", detail)};
    });
  }
  return out;
}

std::vector<CheckResult> check_conservation() {
  std::vector<CheckResult> out;
  timed(out, 7, "nls hamiltonian drift", [] {
    NlsConfig c;
    c.K = 32;
    c.dt = 0.5 / nls_lambda_max(c);
    NlsState st{0.0, PairState(initial_profile(c.lattice(), 1, c.s, 0.05))};
    const double H0 = nls_hamiltonian(st.U, c);
    const long n = std::lround(10.0 / c.dt);
    for (long i = 0; i < n; ++i) st = step(st, c);
    const double drift = std::abs(nls_hamiltonian(st.U, c) - H0) / std::abs(H0);
    return std::vector<CheckResult>{make(7, "nls hamiltonian drift t=10", drift <= 1e-8, drift, "<= 1e-8")};
  });
  timed(out, 7, "kg hamiltonian drift", [] {
    KgConfig c = kg_default(1, 32);
    c.dt = 0.5 / kg_lambda_max(c);
    KgState st{0.0, PairState(initial_profile(c.lattice(), 1, c.s, 0.05))};
    const double H0 = kg_hamiltonian(st.U, c);
    const long n = std::lround(10.0 / c.dt);
    for (long i = 0; i < n; ++i) st = step(st, c);
    const double drift = std::abs(kg_hamiltonian(st.U, c) - H0) / std::abs(H0);
    return std::vector<CheckResult>{make(7, "kg hamiltonian drift t=10", drift <= 1e-8, drift, "<= 1e-8")};
  });
  timed(out, 7, "nls integrator order", [] {
    NlsConfig c;
    c.K = 8;
    auto u0 = initial_profile(c.lattice(), 1, 1.0, 1.5);
    const double T = 0.5, dt0 = 0.5 / nls_lambda_max(c);
    auto run = [&](double dt) {
      NlsConfig cc = c;
      cc.dt = dt;
      NlsState s{0.0, PairState(u0)};
      const long n = std::lround(T / dt);
      for (long i = 0; i < n; ++i) s = step(s, cc);
      return s.U.plus;
    };
    auto ref = run(dt0 / 32);
    std::vector<double> dts = {dt0, dt0 / 2, dt0 / 4}, err;
    for (double dt : dts) err.push_back(max_diff(run(dt), ref));
    const double sl = fit_loglog(dts, err).slope;
    return std::vector<CheckResult>{make(7, "nls integrator slope", std::abs(sl - 4.0) <= 0.2, sl, "4.0 +- 0.2")};
  });
  timed(out, 7, "kg integrator order", [] {
    KgConfig c = kg_default(1, 8);
    auto u0 = initial_profile(c.lattice(), 1, 1.0, 1.5);
    const double T = 0.5, dt0 = T / std::ceil(T * 2.0 * kg_lambda_max(c));
    auto run = [&](double dt) {
      KgConfig cc = c;
      cc.dt = dt;
      KgState s{0.0, PairState(u0)};
      const long n = std::lround(T / dt);
      for (long i = 0; i < n; ++i) s = step(s, cc);
      return s.U.plus;
    };
    auto ref = run(dt0 / 32);
    std::vector<double> dts = {dt0, dt0 / 2, dt0 / 4}, err;
    for (double dt : dts) err.push_back(max_diff(run(dt), ref));
    const double sl = fit_loglog(dts, err).slope;
    return std::vector<CheckResult>{make(7, "kg integrator slope", std::abs(sl - 4.0) <= 0.2, sl, "4.0 +- 0.2")};
  });
  return out;
}

std::vector<CheckResult> check_ledger_closure() {
  std::vector<CheckResult> out;
  timed(out, 8, "nls ledger closure", [] {
    NlsConfig c;
    c.K = 32;
    c.s = 4.0;
    c.dt = 0.5 / nls_lambda_max(c);
    NlsState st{0.0, PairState(initial_profile(c.lattice(), 1, c.s, 0.1))};
    std::vector<NlsState> traj{st};
    for (int i = 0; i < 16; ++i) traj.push_back(st = step(st, c));
    auto at = [&](int m) {
      return std::abs(energy_decomposition(std::vector<NlsState>{traj[8 - m], traj[8], traj[8 + m]}, c).rows.at(0).closure);
    };
    const double r8 = at(8), r4 = at(4), r2 = at(2);
    const double q = std::min(r8 / r4, r4 / r2);
    return std::vector<CheckResult>{make(8, "nls closure shrink per halving", q >= 3.5, q, ">= 3.5",
                                         "closure(8dt,4dt,2dt)=" + g6(r8) + "," + g6(r4) + "," + g6(r2))};
  });
  timed(out, 8, "kg ledger closure", [] {
    KgConfig k = kg_default(1, 32);
    k.s = 4.0;
    k.dt = 0.5 / kg_lambda_max(k);
    KgState st{0.0, PairState(initial_profile(k.lattice(), 1, k.s, 0.1))};
    std::vector<KgState> traj{st};
    for (int i = 0; i < 8; ++i) traj.push_back(st = step(st, k));
    const double a = std::abs(energy_decomposition(std::vector<KgState>{traj[0], traj[4], traj[8]}, k).rows.at(0).closure);
    const double b = std::abs(energy_decomposition(std::vector<KgState>{traj[2], traj[4], traj[6]}, k).rows.at(0).closure);
    return std::vector<CheckResult>{make(8, "kg closure shrink per halving", a >= 3.5 * b, a / b, ">= 3.5",
                                         "closure(4dt,2dt)=" + g6(a) + "," + g6(b))};
  });
  return out;
}

std::vector<CheckResult> check_cutoff_smoothness() {
  const double defect = cutoff_join_defect();
  return {make(0, "cutoff transition smoothness", defect < 1e-6, defect, "< 1e-6")};
}

std::vector<CheckResult> run_verify(const VerifyOptions& opt) {
  std::vector<CheckResult> out = check_cutoff_smoothness();
  auto add = [&](std::vector<CheckResult> rs) {
    for (auto& r : rs) out.push_back(std::move(r));
  };
  for (int c : opt.criteria) {
    switch (c) {
      case 1: add(check_identities()); break;
      case 2: add(check_cancellation()); break;
      case 3: add(check_superactions()); break;
      case 4: add(check_sweeps()); break;
      case 5: add(check_taylor()); break;
      case 6: add(check_divisors(opt)); break;
      case 7: add(check_conservation()); break;
      case 8: add(check_ledger_closure()); break;
      default: throw ConfigError("verify covers criteria 1 to 8, got " + std::to_string(c));
    }
  }
  return out;
}

bool all_pass(const std::vector<CheckResult>& checks) {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult& r) { return r.status == CheckStatus::fail; });
}

json checks_to_json(const std::vector<CheckResult>& checks) {
  json arr = json::array();
  for (const auto& r : checks)
    arr.push_back({{"criterion", r.criterion},
                   {"name", r.name},
                   {"status", to_string(r.status)},
                   {"value", r.value},
                   {"bound", r.bound},
                   {"detail", r.detail}});
  return {{"checks", arr}, {"all_pass", all_pass(checks)}};
}

std::string checks_table(const std::vector<CheckResult>& checks) {
  std::ostringstream out;
  char buf[512];
  for (const auto& r : checks) {
    std::string st = to_string(r.status);
    std::transform(st.begin(), st.end(), st.begin(), ::toupper);
    std::snprintf(buf, sizeof buf, "%-8s c%d  %-48s %14s  %-12s %7.2fs  %s\n", st.c_str(), r.criterion,
                  r.name.c_str(), g6(r.value).c_str(), r.bound.c_str(), r.seconds, r.detail.c_str());
    out << buf;
  }
  return out.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

}  // namespace qlnf
