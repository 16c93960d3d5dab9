#include "jumpsim/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "jumpsim/csv.hpp"
#include "jumpsim/ensemble.hpp"
#include "jumpsim/jump_engine.hpp"
#include "jumpsim/models.hpp"
#include "jumpsim/quantum_oracle.hpp"

#ifndef JUMPSIM_VERSION
#define JUMPSIM_VERSION "0.0.0"
#endif

namespace jumpsim::experiments {

using nlohmann::json;

namespace {

json common_defaults() {
  return {{"schema", kConfigSchema},
          {"kind", ""},
          {"seed", 1},
          {"workers", 0},
          {"hbar2", 1e-3},
          {"epsilon_psi", 1e-6},
          {"rate_clamp", true},
          {"max_events", 500'000'000},
          {"max_failure_fraction", 0.01}};
}

// Two-level model started off a zero crossing, so the literal rule stays stable.
json default_model() {
  return {{"topology", "two_level"}, {"g", 1.0}, {"psi0", {std::cos(std::numbers::pi / 6), 0.5}}};
}

bool same_type(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return a.is_number_float() || b.is_number_integer() || b.is_number_unsigned();
  return a.type() == b.type();
}

void merge_into(json& target, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw SchemaError(where + " must be a JSON object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!target.contains(key)) throw SchemaError("unknown config field '" + path + "'");
    json& slot = target[key];
    if (key == "model") {
      // model keys are checked by the model builder; a new topology starts from scratch
      if (!value.is_object()) throw SchemaError("'model' must be an object");
      if (value.contains("topology") && value["topology"] != slot.value("topology", json())) slot = json::object();
      for (const auto& [mk, mv] : value.items()) slot[mk] = mv;
    } else if (slot.is_object()) {
      merge_into(slot, value, path);
    } else {
      if (!same_type(slot, value)) {
        throw SchemaError("config field '" + path + "' should be " + std::string(slot.type_name()) + ", got " +
                          value.type_name());
      }
      slot = value;
    }
  }
}

void apply_override(json& cfg, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw SchemaError("override '" + text + "' is not key=value");
  const std::string key = text.substr(0, eq), raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json patch = value;
  std::string k = key;
  for (auto dot = k.rfind('.'); dot != std::string::npos; dot = k.rfind('.')) {
    patch = json{{k.substr(dot + 1), patch}};
    k = k.substr(0, dot);
  }
  merge_into(cfg, json{{k, patch}}, "");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw SchemaError(what);
}

std::vector<double> number_list(const json& cfg, const char* key) {
  std::vector<double> out;
  for (const auto& v : cfg.at(key)) {
    require(v.is_number(), std::string("'") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

void validate(const std::string& kind, const json& cfg) {
  require(cfg.at("schema") == kConfigSchema, std::string("config schema must be '") + kConfigSchema + "'");
  require(cfg.at("kind") == kind, "config kind '" + cfg.at("kind").get<std::string>() + "' does not match '" + kind + "'");
  require(cfg.at("hbar2").get<double>() > 0.0, "hbar2 must be > 0");
  require(cfg.at("epsilon_psi").get<double>() > 0.0, "epsilon_psi must be > 0");
  require(cfg.at("max_events").get<double>() >= 1.0, "max_events must be >= 1");
  require(cfg.at("workers").get<int>() >= 0, "workers must be >= 0");
  const double mf = cfg.at("max_failure_fraction").get<double>();
  require(mf >= 0.0 && mf <= 1.0, "max_failure_fraction must be in [0, 1]");
  if (cfg.contains("trajectories")) require(cfg.at("trajectories").get<double>() >= 1.0, "trajectories must be >= 1");
  if (cfg.contains("t_end")) require(cfg.at("t_end").get<double>() >= 0.0, "t_end must be >= 0");
  if (cfg.contains("snapshots")) require(cfg.at("snapshots").get<int>() >= 1, "snapshots must be >= 1");
  if (cfg.contains("model")) {
    try {
      models::model_from_json(cfg.at("model"));
    } catch (const std::exception& e) {
      throw SchemaError(std::string("model: ") + e.what());
    }
  }
  for (const char* key : {"hbar2_ladder", "sizes", "d_env", "theta"}) {
    if (!cfg.contains(key)) continue;
    const auto v = number_list(cfg, key);
    require(!v.empty(), std::string("'") + key + "' must not be empty");
    for (double x : v) require(x > 0.0 || std::string(key) == "theta", std::string("'") + key + "' entries must be > 0");
  }
  if (kind == "recurrence-scaling") {
    require(cfg.at("sizes").size() >= 3 && cfg.at("hbar2_ladder").size() >= 3,
            "recurrence-scaling needs at least 3 sizes and 3 hbar2 values");
  }
  if (kind == "cat-state") require(cfg.at("n_qubits").get<int>() >= 2, "n_qubits must be >= 2");
  if (kind == "measurement") {
    const auto b = cfg.at("basis").get<std::string>();
    require(b == "computational" || b == "hadamard", "basis must be 'computational' or 'hadamard'");
  }
}

EngineConfig engine_from(const json& cfg) {
  EngineConfig e;
  e.constants.hbar2 = cfg.at("hbar2").get<double>();
  e.rate_clamp = cfg.at("rate_clamp").get<bool>();
  e.max_events = cfg.at("max_events").get<std::uint64_t>();
  return e;
}

EnsembleConfig ensemble_from(const json& cfg) {
  EnsembleConfig c;
  c.n_trajectories = cfg.at("trajectories").get<std::size_t>();
  c.seed = cfg.at("seed").get<std::uint64_t>();
  c.epsilon_psi = cfg.at("epsilon_psi").get<double>();
  c.engine = engine_from(cfg);
  c.workers = cfg.at("workers").get<int>();
  c.max_failure_fraction = cfg.at("max_failure_fraction").get<double>();
  if (cfg.contains("t_end")) {
    c.t_end = cfg.at("t_end").get<double>();
    const int k = cfg.value("snapshots", 0);
    for (int i = 1; i <= k; ++i) c.snapshot_times.push_back(c.t_end * i / k);
  }
  return c;
}

// Expected jumps per unit time from the initial potentials: sum over start nodes of
// |psi'_n|^2 times the total rate out of n.
double initial_rate(const HamiltonianModel& h, const Vector& psi0, double eps, double hbar2) {
  const auto graph = build_graph(h);
  const auto table = init_potentials(graph, h, psi0, eps);
  const Eigen::VectorXd p = initial_distribution(psi0, eps);
  PhysicalConstants c;
  c.hbar2 = hbar2;
  double rate = 0.0;
  for (NodeId n = 0; n < graph.node_count(); ++n) {
    double out = 0.0;
    for (EdgeIndex e : graph.out_edges(n)) out += std::max(0.0, raw_rate(table.value[e], c));
    rate += p[n] * out;
  }
  return rate;
}

Matrix measured_basis(const json& cfg) {
  if (cfg.at("basis") == "computational") return Matrix::Identity(2, 2);
  Matrix b(2, 2);
  b << 1.0, 1.0, 1.0, -1.0;
  return b / std::sqrt(2.0);
}

Vector system_state(double theta) {
  Vector s(2);
  s << std::cos(theta), std::sin(theta);
  return s;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name);
    if (!os) throw IoError("cannot write " + (dir_ / name).string());
    files_.push_back(name);
    return os;
  }

  void csv(const std::string& name, const CsvTable& t) {
    auto os = open(name);
    write_csv(os, t);
    if (!os) throw IoError("write failed for " + name);
  }

  void json_file(const std::string& name, const json& j) {
    auto os = open(name);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write failed for " + name);
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

RunResult run_trajectory(const json& cfg, Writer& w) {
  const auto spec = models::model_from_json(cfg.at("model"));
  const JumpModel model(spec.hamiltonian);
  EngineConfig e = engine_from(cfg);
  const double eps = cfg.at("epsilon_psi").get<double>();
  const auto p = initial_distribution(spec.psi0, eps);
  Rng rng = make_rng(cfg.at("seed").get<std::uint64_t>(), 0);
  NodeId start = cfg.at("start").get<int>() >= 0 ? NodeId(cfg.at("start").get<int>()) : NodeId(0);
  if (cfg.at("start").get<int>() < 0) {
    std::discrete_distribution<NodeId> d(p.data(), p.data() + p.size());
    start = d(rng);
  }
  auto st = make_trajectory(model, start, spec.psi0, eps, std::move(rng));
  auto events = w.open("events.jsonl");
  std::uint64_t n = 0;
  evolve_trajectory(st, model, cfg.at("t_end").get<double>(), e, [&](const JumpEvent& ev, const TrajectoryState&) {
    events << event_to_json(ev).dump() << "\n";
    ++n;
  });
  events.close();
  if (!events) throw IoError("write failed for events.jsonl");
  json snap = snapshot_to_json(model.graph(), st.potentials);
  snap["node"] = st.node;
  snap["time"] = st.time;
  w.json_file("final_snapshot.json", snap);
  return {true, {}, fmt("%llu events, start node %u, final node %u", (unsigned long long)n, start, st.node)};
}

CsvTable occupancy_table(const EnsembleResult& r, std::size_t nodes) {
  CsvTable t{"occupancy", {"t"}, {}};
  for (std::size_t n = 0; n < nodes; ++n) t.columns.push_back("n" + std::to_string(n));
  for (std::size_t k = 0; k < r.snapshot_times.size(); ++k) {
    std::vector<double> row{r.snapshot_times[k]};
    for (auto c : r.occupancy[k]) row.push_back(double(c) / double(r.trajectories.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

RunResult run_ensemble_kind(const json& cfg, Writer& w, bool equivariance) {
  const auto spec = models::model_from_json(cfg.at("model"));
  const JumpModel model(spec.hamiltonian);
  const EnsembleConfig ec = ensemble_from(cfg);
  EnsembleResult r = run_ensemble(model, spec.psi0, ec);
  RunResult out;
  if (equivariance) {
    const Propagator prop(spec.hamiltonian);
    std::vector<Eigen::VectorXd> oracle;
    for (const auto& psi : prop.path({spec.psi0, 0.0}, ec.snapshot_times)) oracle.push_back(psi.amplitudes.cwiseAbs2());
    const auto rep = equivariance_distance(r, oracle, ec.seed, cfg.at("bootstrap").get<int>());
    CsvTable t{"equivariance", {"t", "tv", "ci_low", "ci_high", "floor_mean", "floor_sd", "flagged"}, {}};
    for (const auto& s : rep.snapshots)
      t.rows.push_back({s.time, s.tv, s.ci_low, s.ci_high, s.floor_mean, s.floor_sd, s.flagged ? 1.0 : 0.0});
    w.csv("equivariance.csv", t);
    out.check_passed = rep.all_within();
    double worst = 0.0;
    for (const auto& s : rep.snapshots) worst = std::max(worst, s.tv);
    out.summary = fmt("max TV %.4g, %s", worst, out.check_passed ? "all snapshots within 3 sigma" : "deviation flagged");
  } else {
    out.summary = fmt("%zu trajectories, %llu events, %zu failures", r.trajectories.size(),
                      (unsigned long long)r.total_events, r.failures);
  }
  w.json_file("histogram.json", ensemble_to_json(r));
  w.csv("occupancy.csv", occupancy_table(r, model.node_count()));
  return out;
}

RunResult run_recurrence(const json& cfg, Writer& w) {
  std::vector<RecurrenceSample> samples;
  const double g = cfg.at("g").get<double>();
  const double horizon = cfg.at("horizon_events").get<double>();
  for (double n : number_list(cfg, "sizes")) {
    const JumpModel model(models::complete_graph(int(n), g));
    for (double h2 : number_list(cfg, "hbar2_ladder")) {
      json c = cfg;
      c["hbar2"] = h2;
      EnsembleConfig ec = ensemble_from(c);
      ec.t_end = horizon * h2 / g;
      ec.engine.track_recurrence = true;
      const auto r = run_ensemble(model, models::uniform_state(int(n)), ec);
      samples.push_back({std::size_t(n), h2, r.median_recurrence_time()});
    }
  }
  w.csv("recurrence_scaling.csv", recurrence_table(samples));
  const auto fit = recurrence_scaling_fit(samples);
  const auto gr = number_list(cfg, "gamma_range"), hr = number_list(cfg, "hbar2_exponent_range");
  w.json_file("fit.json", {{"gamma", fit.gamma},
                           {"gamma_se", fit.gamma_se},
                           {"hbar2_exponent", fit.hbar2_exponent},
                           {"hbar2_exponent_se", fit.hbar2_exponent_se},
                           {"prefactor", fit.prefactor},
                           {"r_squared", fit.r_squared},
                           {"samples", fit.samples}});
  const bool ok = fit.gamma >= gr.at(0) && fit.gamma <= gr.at(1) && fit.hbar2_exponent >= hr.at(0) &&
                  fit.hbar2_exponent <= hr.at(1);
  return {ok, {}, fmt("gamma %.3f, hbar2 exponent %.3f", fit.gamma, fit.hbar2_exponent)};
}

RunResult run_cat(const json& cfg, Writer& w) {
  const int nq = cfg.at("n_qubits").get<int>();
  const auto circuit = models::cat_state_circuit(nq, cfg.at("tau_gate").get<double>(),
                                                 cfg.at("baseline_floor").get<double>(),
                                                 cfg.at("parallel_cnots").get<bool>());
  const auto ladder = number_list(cfg, "hbar2_ladder");
  const auto sweep = cat_state_sweep(circuit, ladder, ensemble_from(cfg));
  w.csv("cat_state.csv", cat_sweep_table(sweep));
  w.json_file("cat_state.json", {{"crossover_hbar2", std::isfinite(sweep.crossover_hbar2)
                                                          ? json(sweep.crossover_hbar2)
                                                          : json()},
                                 {"monotone", sweep.monotone},
                                 {"failure_limits_held", sweep.ok()}});
  const auto& lo = sweep.points.front();
  const auto& hi = sweep.points.back();
  const bool ok = std::abs(lo.spin.m) < 3.0 * lo.spin.m_se && hi.spin.m > 0.8 * nq && sweep.monotone && sweep.ok();
  return {ok, {}, fmt("M = %.3f at hbar2 %g, %.3f at hbar2 %g, crossover %.3g", lo.spin.m, lo.hbar2, hi.spin.m,
                      hi.hbar2, sweep.crossover_hbar2)};
}

RunResult run_measurement(const json& cfg, Writer& w) {
  const Matrix basis = measured_basis(cfg);
  const Matrix h_sys = Matrix::Zero(2, 2);
  const double omega = cfg.at("omega_int").get<double>(), floor = cfg.at("baseline_floor").get<double>();
  const EnsembleConfig ec = ensemble_from(cfg);
  bool ok = true;
  CsvTable born{"born_frequencies", {"theta", "d_env", "f0", "f0_se", "target", "failures"}, {}};
  const int d_born = cfg.at("born_d_env").get<int>();
  const auto app_born = models::measurement_apparatus(h_sys, basis, d_born, omega, floor);
  for (double theta : number_list(cfg, "theta")) {
    const Vector sys = system_state(theta);
    const auto rep = measurement_statistics(app_born, sys, ec);
    const double target = std::norm(basis.col(0).dot(sys));
    ok = ok && !rep.ensemble_failed && std::abs(rep.frequency[0] - target) < 3.0 * rep.frequency_se[0];
    born.rows.push_back({theta, double(d_born), rep.frequency[0], rep.frequency_se[0], target, double(rep.failures)});
  }
  w.csv("born_frequencies.csv", born);

  std::vector<int> depths;
  std::vector<MeasurementReport> reports;
  const Vector even = system_state(std::numbers::pi / 4);
  for (double d : number_list(cfg, "d_env")) {
    depths.push_back(int(d));
    const auto app = models::measurement_apparatus(h_sys, basis, int(d), omega, floor);
    reports.push_back(measurement_statistics(app, even, ec));
    ok = ok && !reports.back().ensemble_failed;
    if (reports.size() > 1) ok = ok && reports.back().switch_rate < reports[reports.size() - 2].switch_rate;
  }
  w.csv("measurement.csv", measurement_table(depths, reports));
  return {ok, {}, ok ? "Born frequencies and confinement trend hold" : "Born or confinement check failed"};
}

RunResult run_oracle(const json& cfg, Writer& w) {
  const auto spec = models::model_from_json(cfg.at("model"));
  const Propagator prop(spec.hamiltonian);
  const auto graph = build_graph(spec.hamiltonian);
  const double t_end = cfg.at("t_end").get<double>();
  const int samples = cfg.at("samples").get<int>();
  std::vector<double> times;
  for (int k = 0; k < samples; ++k) times.push_back(samples == 1 ? t_end : t_end * k / (samples - 1));
  const WaveFunction psi0{spec.psi0, 0.0};
  const auto path = prop.path(psi0, times);
  std::vector<Eigen::VectorXd> rows;
  for (const auto& p : path) rows.push_back(p.amplitudes.cwiseAbs2());
  {
    auto os = w.open("born.csv");
    write_timeseries_csv(os, "born", times, rows, "p");
  }
  // The potential ODE against the identification, where psi has no zeros.
  const double eps = cfg.at("epsilon_psi").get<double>();
  double worst = 0.0;
  std::string note = "route check skipped: psi path touches zero";
  double min_amp = 1.0;
  for (const auto& r : rows) min_amp = std::min(min_amp, r.minCoeff());
  if (min_amp > 1e-6) {
    const auto ode = potential_ode_path(graph, spec.hamiltonian, potentials_from_psi(graph, spec.hamiltonian, psi0, eps),
                                        0.0, times);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto ident = potentials_from_psi(graph, spec.hamiltonian, path[k], eps);
      for (std::size_t e = 0; e < ident.value.size(); ++e)
        worst = std::max(worst, std::abs(ode[k].value[e] - ident.value[e]) / std::abs(ident.value[e]));
    }
    note = fmt("potential ODE vs identification max relative difference %.2e", worst);
  }
  double norm_dev = 0.0;
  for (const auto& r : rows) norm_dev = std::max(norm_dev, std::abs(r.sum() - 1.0));
  const bool ok = worst < cfg.at("route_tolerance").get<double>() && norm_dev < 1e-9;
  return {ok, {}, note + fmt("; norm deviation %.1e", norm_dev)};
}

}  // namespace

const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k{"trajectory",    "ensemble",  "equivariance", "recurrence-scaling",
                                          "cat-state",     "measurement", "oracle-check"};
  return k;
}

json default_config(const std::string& kind) {
  json c = common_defaults();
  c["kind"] = kind;
  if (kind == "trajectory") {
    c["model"] = default_model();
    c["t_end"] = 10.0;
    c["start"] = -1;  // -1: sample from the regularized |psi0|^2
  } else if (kind == "ensemble" || kind == "equivariance") {
    c["model"] = default_model();
    c["hbar2"] = 1e-4;
    c["trajectories"] = 10000;
    c["t_end"] = 2.0;
    c["snapshots"] = 5;
    if (kind == "equivariance") c["bootstrap"] = 400;
  } else if (kind == "recurrence-scaling") {
    c["g"] = 1.0;
    c["sizes"] = {4, 8, 16};
    c["hbar2_ladder"] = {2.5e-5, 5e-5, 1e-4};
    c["trajectories"] = 16;
    c["horizon_events"] = 2000.0;
    c["gamma_range"] = {0.7, 1.3};
    c["hbar2_exponent_range"] = {0.8, 1.2};
  } else if (kind == "cat-state") {
    c["n_qubits"] = 4;
    c["tau_gate"] = 1.0;
    c["baseline_floor"] = 0.2;
    c["parallel_cnots"] = true;
    c["hbar2_ladder"] = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    c["trajectories"] = 1000;
    c["epsilon_psi"] = 0.1;
    c["max_events"] = 20'000'000;
  } else if (kind == "measurement") {
    c["hbar2"] = 1e-5;
    c["epsilon_psi"] = 0.02;
    c["baseline_floor"] = 0.2;
    c["omega_int"] = 1.0;
    c["basis"] = "computational";
    c["theta"] = {std::numbers::pi / 8, std::numbers::pi / 4};
    c["born_d_env"] = 6;
    c["d_env"] = {2, 4, 6, 8};
    c["trajectories"] = 400;
    c["max_events"] = 20'000'000;
  } else if (kind == "oracle-check") {
    c["model"] = default_model();
    c["t_end"] = 10.0;
    c["samples"] = 101;
    c["epsilon_psi"] = 1e-12;
    c["route_tolerance"] = 1e-6;
  } else {
    throw SchemaError("unknown experiment kind '" + kind + "'");
  }
  return c;
}

json resolve_config(const std::string& kind, const json& user, const std::vector<std::string>& overrides) {
  json cfg = default_config(kind);
  if (!user.is_null()) {
    json patch = user;
    if (patch.is_object() && !patch.contains("kind")) patch["kind"] = kind;
    merge_into(cfg, patch, "");
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  validate(kind, cfg);
  return cfg;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Plan describe(const std::string& kind, const json& cfg) {
  Plan plan;
  const double h2 = cfg.at("hbar2").get<double>();
  const double eps = cfg.at("epsilon_psi").get<double>();
  plan.lines.push_back("experiment: " + kind + " (config " + config_hash(cfg) + ")");
  auto add_cells = [&](std::size_t cells, double events_per_cell, const std::string& what) {
    plan.cells += cells;
    plan.estimated_events += double(cells) * events_per_cell;
    plan.lines.push_back(fmt("%zu cell(s): ", cells) + what + fmt(", ~%.3g events each", events_per_cell));
  };
  if (cfg.contains("model")) {
    const auto spec = models::model_from_json(cfg.at("model"));
    const auto graph = build_graph(spec.hamiltonian);
    plan.lines.push_back(fmt("model: %s, %zu nodes, %zu edges", spec.name.c_str(), graph.node_count(),
                             graph.edge_count()));
    const double rate = initial_rate(spec.hamiltonian, spec.psi0, eps, h2);
    const double t_end = cfg.at("t_end").get<double>();
    const double traj = cfg.value("trajectories", 1.0);
    if (kind == "oracle-check") {
      add_cells(1, 0.0, fmt("exact evolution to t=%g at %d samples", t_end, cfg.at("samples").get<int>()));
    } else {
      add_cells(1, rate * t_end * traj, fmt("%g trajectory(ies) to t=%g at hbar2=%g", traj, t_end, h2));
    }
  } else if (kind == "recurrence-scaling") {
    const auto sizes = number_list(cfg, "sizes");
    const auto ladder = number_list(cfg, "hbar2_ladder");
    plan.lines.push_back(fmt("grid: %zu sizes x %zu hbar2 values", sizes.size(), ladder.size()));
    for (double n : sizes) {
      for (double l : ladder) {
        const double ev = (n - 1) * cfg.at("horizon_events").get<double>() * cfg.at("trajectories").get<double>();
        add_cells(1, ev, fmt("K%g at hbar2=%g", n, l));
      }
    }
  } else if (kind == "cat-state") {
    const auto c = models::cat_state_circuit(cfg.at("n_qubits").get<int>(), cfg.at("tau_gate").get<double>(),
                                             cfg.at("baseline_floor").get<double>(), cfg.at("parallel_cnots").get<bool>());
    plan.lines.push_back(fmt("register: %d qubits, %zu pulses, duration %g", c.reg.n_qubits, c.schedule.gates.size(),
                             c.schedule.total_duration()));
    for (double l : number_list(cfg, "hbar2_ladder")) {
      const double rate = initial_rate(c.hamiltonian, c.psi0, eps, l);
      add_cells(1, rate * c.schedule.total_duration() * cfg.at("trajectories").get<double>(), fmt("hbar2=%g", l));
    }
  } else if (kind == "measurement") {
    const Matrix basis = measured_basis(cfg);
    auto cell = [&](int d, double theta) {
      const auto app = models::measurement_apparatus(Matrix::Zero(2, 2), basis, d, cfg.at("omega_int").get<double>(),
                                                     cfg.at("baseline_floor").get<double>());
      const double rate = initial_rate(app.hamiltonian, app.initial_state(system_state(theta)), eps, h2);
      add_cells(1, rate * app.end_time() * cfg.at("trajectories").get<double>(),
                fmt("d_env=%d theta=%.4f (%zu nodes)", d, theta, app.dimension()));
    };
    for (double th : number_list(cfg, "theta")) cell(cfg.at("born_d_env").get<int>(), th);
    for (double d : number_list(cfg, "d_env")) cell(int(d), std::numbers::pi / 4);
  }
  plan.lines.push_back(fmt("total: %zu cell(s), ~%.3g jump events (rate estimate sum |A|/hbar2 at t=0)", plan.cells,
                           plan.estimated_events));
  return plan;
}

RunResult run(const std::string& kind, const json& cfg, const std::filesystem::path& out_dir,
              const std::vector<std::string>& command_line) {
  const auto start = std::chrono::steady_clock::now();
  Writer w(out_dir);
  RunResult r;
  if (kind == "trajectory") {
    r = run_trajectory(cfg, w);
  } else if (kind == "ensemble") {
    r = run_ensemble_kind(cfg, w, false);
  } else if (kind == "equivariance") {
    r = run_ensemble_kind(cfg, w, true);
  } else if (kind == "recurrence-scaling") {
    r = run_recurrence(cfg, w);
  } else if (kind == "cat-state") {
    r = run_cat(cfg, w);
  } else if (kind == "measurement") {
    r = run_measurement(cfg, w);
  } else if (kind == "oracle-check") {
    r = run_oracle(cfg, w);
  } else {
    throw SchemaError("unknown experiment kind '" + kind + "'");
  }
  r.files = w.files();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  w.json_file("manifest.json", {{"schema", "jumpsim.manifest.v1"},
                                {"kind", kind},
                                {"version", JUMPSIM_VERSION},
                                {"config_hash", config_hash(cfg)},
                                {"seed", cfg.at("seed")},
                                {"config", cfg},
                                {"command_line", command_line},
                                {"wall_time_s", wall},
                                {"outputs", r.files},
                                {"check_passed", r.check_passed},
                                {"summary", r.summary}});
  return r;
}

}  // namespace jumpsim::experiments
