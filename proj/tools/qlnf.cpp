#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qlnf/experiment.hpp"
#include "qlnf/symbol.hpp"
#include "qlnf/trilinear.hpp"

using namespace qlnf;

namespace {

enum class Kind { text, number, boolean, list };

struct Flag {
  std::string name;  // flag without dashes
  std::vector<std::string> path;  // JSON key path
  Kind kind;
  std::string value;
  CLI::Option* opt = nullptr;
};

std::vector<Flag> config_flags() {
  return {{"model", {"model"}, Kind::text},
          {"d", {"d"}, Kind::number},
          {"K", {"K"}, Kind::number},
          {"s", {"s"}, Kind::number},
          {"eps", {"eps"}, Kind::number},
          {"epsilon-list", {"epsilon_list"}, Kind::list},
          {"seed", {"seed"}, Kind::number},
          {"dt", {"dt"}, Kind::number},
          {"t-max", {"t_max"}, Kind::number},
          {"N-threshold", {"N_threshold"}, Kind::number},
          {"semilinear", {"semilinear"}, Kind::boolean},
          {"potential-seed", {"potential", "seed"}, Kind::number},
          {"potential-m", {"potential", "m"}, Kind::number},
          {"potential-enabled", {"potential", "enabled"}, Kind::boolean},
          {"mass", {"mass"}, Kind::number},
          {"h-kind", {"h_kind"}, Kind::text},
          {"F-spec", {"F_spec"}, Kind::text},
          {"G-spec", {"G_spec"}, Kind::list},
          {"output-dir", {"output_dir"}, Kind::text},
          {"epsilon", {"epsilon"}, Kind::number},
          {"snapshot-every", {"snapshot_every"}, Kind::number},
          {"nonlinear", {"nonlinear"}, Kind::boolean},
          {"kappa", {"kappa"}, Kind::number},
          {"samples", {"samples"}, Kind::number}};
}

json flag_value(const Flag& f) {
  try {
    switch (f.kind) {
      case Kind::text:
        // F_spec accepts a JSON list as well as the keywords
        if (f.name == "F-spec" && !f.value.empty() && f.value.front() == '[') return json::parse(f.value);
        return f.value;
      case Kind::number:
      case Kind::boolean:
        return json::parse(f.value);
      case Kind::list: {
        json arr = json::array();
        std::stringstream ss(f.value);
        for (std::string item; std::getline(ss, item, ',');) arr.push_back(json::parse(item));
        return arr;
      }
    }
  } catch (const json::exception&) {
  }
  throw ConfigError("cannot parse --" + f.name + " " + f.value);
}

struct Command {
  std::string config_path;
  std::vector<Flag> flags = config_flags();
};

void add_config_options(CLI::App* sub, Command& cmd) {
  sub->add_option("--config", cmd.config_path, "JSON configuration file");
  for (auto& f : cmd.flags) f.opt = sub->add_option("--" + f.name, f.value);
}

ExperimentConfig load_config(const Command& cmd, const std::string& forced_model = "") {
  json j = json::object();
  if (!cmd.config_path.empty()) {
    std::ifstream in(cmd.config_path);
    if (!in) throw ConfigError("cannot open config " + cmd.config_path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
  }
  for (const auto& f : cmd.flags) {
    if (f.opt->count() == 0) continue;
    json* node = &j;
    for (std::size_t i = 0; i + 1 < f.path.size(); ++i) node = &(*node)[f.path[i]];
    (*node)[f.path.back()] = flag_value(f);
  }
  if (!forced_model.empty()) {
    if (j.contains("model") && j["model"] != forced_model)
      throw ConfigError("this subcommand runs model " + forced_model);
    j["model"] = forced_model;
  }
  return config_from_json(j);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
  return (std::filesystem::path(cfg.output_dir) / file).string();
}

// Timestamps and wall times live only here.
void log_run(const ExperimentConfig& cfg, const std::string& command, double seconds, const std::string& note) {
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream log(out_path(cfg, "run.log"), std::ios::app);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  log << stamp << ' ' << command << " config_hash=" << config_hash(cfg) << " seed=" << cfg.seed
      << " wall_s=" << seconds << (note.empty() ? "" : " " + note) << '\n';
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_simulate(const ExperimentConfig& cfg, const std::string& name) {
  check_caps(cfg, name);
  const auto t0 = std::chrono::steady_clock::now();
  SimulationResult r = simulate(cfg);
  const std::string series = out_path(cfg, cfg.model + "_series.csv");
  write_atomic(series, r.csv);
  std::cout << "steps " << r.steps << "\nwrote " << series << '\n';
  if (cfg.snapshot_every > 0) {
    const std::string traj = out_path(cfg, cfg.model + "_trajectory.json");
    write_atomic(traj, dump(r.trajectory));
    std::cout << "wrote " << traj << '\n';
  }
  log_run(cfg, name, since(t0), "");
  return 0;
}

int run_lifespan(const ExperimentConfig& cfg) {
  check_caps(cfg, "lifespan");
  const auto t0 = std::chrono::steady_clock::now();
  auto runs = lifespan_experiment(cfg);
  write_atomic(out_path(cfg, "lifespan.csv"), lifespan_csv(runs, cfg));

  json rep;
  rep["config_hash"] = config_hash(cfg);
  rep["seed"] = cfg.seed;
  rep["t_max"] = cfg.t_max;
  rep["runs"] = json::array();
  std::vector<std::pair<double, double>> pairs;
  bool failed = false;
  for (const auto& r : runs) {
    rep["runs"].push_back({{"epsilon", r.epsilon},
                           {"T_star", r.T_star},
                           {"max_norm_ratio", r.max_norm_ratio},
                           {"reached_threshold", r.reached_threshold},
                           {"status", r.failed ? "failed" : "ok"},
                           {"error", r.error}});
    if (!r.failed) pairs.emplace_back(r.epsilon, r.T_star);
    failed = failed || r.failed;
    std::cout << "epsilon " << r.epsilon << "  T* " << r.T_star << "  max ratio " << r.max_norm_ratio
              << (r.failed ? "  FAILED: " + r.error : "") << '\n';
  }
  try {
    ExponentFit f = fit_exponent(pairs, cfg.t_max);
    rep["fit"] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.points},
                  {"gap_to_minus4", f.slope + 4.0}};
    std::cout << "slope " << f.slope << "  R^2 " << f.r2 << '\n';
  } catch (const std::invalid_argument& e) {
    rep["fit"] = {{"error", e.what()}};
    std::cout << "fit: " << e.what() << '\n';
  }
  write_atomic(out_path(cfg, "lifespan.json"), dump(rep));
  std::string walls;
  for (const auto& r : runs) walls += "eps" + std::to_string(r.epsilon) + "=" + std::to_string(r.wall_time) + "s ";
  log_run(cfg, "lifespan", since(t0), walls);
  return failed ? 1 : 0;
}

int run_divisor_stats(const ExperimentConfig& cfg) {
  check_caps(cfg, "divisor-stats");
  const auto t0 = std::chrono::steady_clock::now();
  ScanParams p;
  p.mass = cfg.mass;
  p.V = cfg.potential.enabled ? build_potential(cfg.potential.seed, cfg.potential.m, cfg.d, cfg.K)
                              : PotentialTable::zero(cfg.d);
  DivisorReport r = divisor_scan(cfg.d, cfg.K, cfg.model, p);
  std::ostringstream tag;
  tag << cfg.model << "_d" << cfg.d << "_K" << cfg.K;
  std::string seed_or_mass;
  if (cfg.model == "kg") {
    std::ostringstream m;
    m << cfg.mass;
    seed_or_mass = m.str();
    tag << "_m" << seed_or_mass;
  } else {
    seed_or_mass = cfg.potential.enabled ? std::to_string(cfg.potential.seed) : "V0";
    tag << "_" << seed_or_mass;
  }
  const std::string file = out_path(cfg, "divisor_" + tag.str() + ".csv");
  write_atomic(file, divisor_csv(r, seed_or_mass, header_comment(cfg)));

  json rep;
  rep["config_hash"] = config_hash(cfg);
  rep["has_data"] = r.has_data;
  rep["min_abs_omega"] = r.min_abs_omega;
  rep["gamma"] = r.gamma;
  rep["N0"] = r.N0;
  rep["beta"] = r.beta;
  rep["nonresonant"] = r.nonresonant;
  rep["resonant"] = r.resonant;
  rep["exact_zero"] = r.exact_zero;
  rep["worst"] = json::array();
  for (const auto& w : r.worst)
    rep["worst"].push_back({{"xi", w.xi}, {"eta", w.eta}, {"zeta", w.zeta}, {"signs", w.signs}, {"omega", w.omega}});
  write_atomic(out_path(cfg, "divisor_" + tag.str() + ".json"), dump(rep));
  std::cout << "min |omega| " << r.min_abs_omega << "  gamma " << r.gamma << "  N0 " << r.N0 << "  beta " << r.beta
            << "  exact zeros " << r.exact_zero << "\nwrote " << file << '\n';
  log_run(cfg, "divisor-stats", since(t0), "");
  return 0;
}

int run_mass_measure(const ExperimentConfig& cfg) {
  check_caps(cfg, "mass-measure");
  const auto t0 = std::chrono::steady_clock::now();
  MassQuadruple q = find_crossing_quadruple(cfg.d, cfg.K);
  MassScanResult r = bad_mass_measure(q, cfg.kappa, cfg.samples, cfg.seed);
  json rep;
  rep["config_hash"] = config_hash(cfg);
  rep["seed"] = cfg.seed;
  rep["quadruple"] = {{"j1", q.j1}, {"j2", q.j2}, {"j3", q.j3}, {"j4", q.j4}, {"s3", q.s3}, {"s4", q.s4}};
  rep["kappa"] = r.kappa;
  rep["samples"] = r.samples;
  rep["bad"] = r.bad;
  rep["fraction"] = r.fraction;
  rep["wilson95"] = {r.lo, r.hi};
  write_atomic(out_path(cfg, "mass_measure.json"), dump(rep));
  std::cout << "bad fraction " << r.fraction << "  [" << r.lo << ", " << r.hi << "]\n";
  log_run(cfg, "mass-measure", since(t0), "");
  return 0;
}

int run_ledger(const ExperimentConfig& cfg, const std::string& trajectory_path) {
  check_caps(cfg, "ledger");
  const auto t0 = std::chrono::steady_clock::now();
  std::ifstream in(trajectory_path);
  if (!in) throw ConfigError("cannot open trajectory " + trajectory_path);
  json traj;
  try {
    traj = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trajectory is not valid JSON: ") + e.what());
  }
  EnergyLedger L;
  try {
    L = ledger_from_trajectory(traj, cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const std::string file = out_path(cfg, cfg.model + "_ledger.csv");
  write_atomic(file, L.csv(header_comment(cfg)));
  std::cout << "rows " << L.rows.size() << "\nwrote " << file << '\n';
  log_run(cfg, "ledger", since(t0), "");
  return 0;
}

int run_verify_cmd(const ExperimentConfig& cfg, const std::vector<int>& criteria, bool mutate) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions opt;
  opt.scan_K_nls = cfg.K;
  opt.scan_K_kg = std::min(cfg.K, 8);
  if (!criteria.empty()) opt.criteria = criteria;
  if (mutate) set_cutoff_mutation(true);
  auto checks = run_verify(opt);
  if (mutate) set_cutoff_mutation(false);
  std::cout << checks_table(checks);
  json rep = checks_to_json(checks);
  rep["config_hash"] = config_hash(cfg);
  write_atomic(out_path(cfg, "verify.json"), dump(rep));
  const bool ok = all_pass(checks);
  std::cout << (ok ? "verify: all checks pass" : "verify: FAILED") << '\n';
  log_run(cfg, "verify", since(t0), ok ? "pass" : "fail");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-linear Hamiltonian PDE normal-form experiments"};
  app.require_subcommand(1);

  Command nls_cmd, kg_cmd, life_cmd, div_cmd, mass_cmd, ledger_cmd, verify_cmd;
  auto* nls = app.add_subcommand("simulate-nls", "Integrate the NLS model and write a diagnostics series");
  add_config_options(nls, nls_cmd);
  auto* kg = app.add_subcommand("simulate-kg", "Integrate the KG model and write a diagnostics series");
  add_config_options(kg, kg_cmd);
  auto* life = app.add_subcommand("lifespan", "Norm-doubling times over the epsilon list and the exponent fit");
  add_config_options(life, life_cmd);
  auto* div = app.add_subcommand("divisor-stats", "Small-divisor scan over the frequency ball");
  add_config_options(div, div_cmd);
  auto* mass = app.add_subcommand("mass-measure", "Monte Carlo measure of excluded masses");
  add_config_options(mass, mass_cmd);
  auto* ledger = app.add_subcommand("ledger", "Energy ledger of a stored trajectory");
  add_config_options(ledger, ledger_cmd);
  std::string trajectory;
  ledger->add_option("--trajectory", trajectory, "trajectory JSON written by simulate-*")->required();
  auto* verify = app.add_subcommand("verify", "Run the invariant suite");
  add_config_options(verify, verify_cmd);
  std::vector<int> criteria;
  bool mutate = false;
  verify->add_option("--criteria", criteria, "subset of criteria 1-8")->delimiter(',');
  verify->add_flag("--inject-cutoff-mutation", mutate, "test hook: mirror the cutoff transition");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*nls) return run_simulate(load_config(nls_cmd, "nls"), "simulate-nls");
    if (*kg) return run_simulate(load_config(kg_cmd, "kg"), "simulate-kg");
    if (*life) return run_lifespan(load_config(life_cmd));
    if (*div) return run_divisor_stats(load_config(div_cmd));
    if (*mass) return run_mass_measure(load_config(mass_cmd));
    if (*ledger) return run_ledger(load_config(ledger_cmd), trajectory);
    if (*verify) return run_verify_cmd(load_config(verify_cmd), criteria, mutate);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
