#include "jumpsim/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <omp.h>

namespace jumpsim {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void validate(const EnsembleConfig& cfg, const JumpModel& model, const Vector& psi0) {
  if (cfg.n_trajectories < 1) throw Error("n_trajectories must be >= 1");
  if (!(cfg.t_end >= cfg.t0)) throw Error("t_end must not precede t0");
  if (static_cast<std::size_t>(psi0.size()) != model.node_count()) {
    throw Error("initial state dimension does not match the model");
  }
  double prev = cfg.t0;
  for (double t : cfg.snapshot_times) {
    if (t < prev || t > cfg.t_end) throw Error("snapshot times must be ascending and inside [t0, t_end]");
    prev = t;
  }
  if (!(cfg.max_failure_fraction >= 0.0)) throw Error("max_failure_fraction must be >= 0");
}

struct Runner {
  const JumpModel& model;
  const Vector& psi0;
  const EnsembleConfig& cfg;
  std::vector<double> cdf;

  Runner(const JumpModel& m, const Vector& psi, const EnsembleConfig& c) : model(m), psi0(psi), cfg(c) {
    const Eigen::VectorXd p = initial_distribution(psi0, cfg.epsilon_psi);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) cdf.push_back(acc += p[i]);
    cdf.back() = 1.0;
  }

  TrajectoryRecord run(std::size_t index, const EventSink& sink) const {
    TrajectoryRecord rec;
    Rng rng = make_rng(cfg.seed, index);
    const double u = uniform01(rng);
    rec.start = static_cast<NodeId>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    TrajectoryState st = make_trajectory(model, rec.start, psi0, cfg.epsilon_psi, std::move(rng), cfg.t0);
    rec.snapshot_nodes.reserve(cfg.snapshot_times.size());
    auto advance = [&](double t) {
      auto res = evolve_trajectory(st, model, t, cfg.engine, sink);
      if (cfg.engine.record_events) {
        rec.log.insert(rec.log.end(), res.log.begin(), res.log.end());
      }
    };
    try {
      for (double t : cfg.snapshot_times) {
        advance(t);
        rec.snapshot_nodes.push_back(st.node);
      }
      advance(cfg.t_end);
    } catch (const TruncationError& e) {
      rec.failed = true;
      rec.error = e.what();
      if (cfg.engine.record_events) rec.log.insert(rec.log.end(), e.partial_log().begin(), e.partial_log().end());
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    if (rec.failed) {
      rec.failed_at = st.time;
      rec.snapshot_nodes.resize(cfg.snapshot_times.size(), st.node);
    }
    rec.terminal = st.node;
    rec.events = st.events;
    if (cfg.engine.track_recurrence) rec.t_rec = recurrence_time(st.recurrence);
    return rec;
  }
};

EnsembleResult aggregate(const JumpModel& model, const EnsembleConfig& cfg,
                         std::vector<TrajectoryRecord> records) {
  EnsembleResult out;
  out.snapshot_times = cfg.snapshot_times;
  out.occupancy.assign(cfg.snapshot_times.size(), std::vector<std::uint64_t>(model.node_count(), 0));
  for (const auto& r : records) {
    for (std::size_t k = 0; k < r.snapshot_nodes.size(); ++k) ++out.occupancy[k][r.snapshot_nodes[k]];
    out.total_events += r.events;
    if (r.failed) ++out.failures;
  }
  out.trajectories = std::move(records);
  if (out.failure_fraction() > cfg.max_failure_fraction) {
    std::ostringstream os;
    os << out.failures << " of " << out.trajectories.size() << " trajectories failed (limit "
       << cfg.max_failure_fraction * 100.0 << "%)";
    for (const auto& r : out.trajectories) {
      if (r.failed) {
        os << "; first: " << r.error;
        break;
      }
    }
    throw EnsembleFailure(os.str(), std::move(out));
  }
  return out;
}

EventSink sink_for(const TrajectoryHook& hook, std::size_t i) { return hook ? hook(i) : EventSink{}; }

// Exact multinomial draw by sequential binomials.
void multinomial(Rng& rng, std::uint64_t n, const Eigen::VectorXd& p, Eigen::VectorXd& counts) {
  counts.setZero(p.size());
  double rest = 1.0;
  std::uint64_t left = n;
  for (Eigen::Index i = 0; i + 1 < p.size() && left > 0; ++i) {
    const double q = rest > 0.0 ? std::clamp(p[i] / rest, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::uint64_t> b(left, q);
    const std::uint64_t k = b(rng);
    counts[i] = static_cast<double>(k);
    left -= k;
    rest -= p[i];
  }
  counts[p.size() - 1] += static_cast<double>(left);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double EnsembleResult::failure_fraction() const {
  return trajectories.empty() ? 0.0 : static_cast<double>(failures) / static_cast<double>(trajectories.size());
}

std::vector<NodeId> EnsembleResult::terminal_nodes() const {
  std::vector<NodeId> out;
  out.reserve(trajectories.size());
  for (const auto& r : trajectories) {
    if (!r.failed) out.push_back(r.terminal);
  }
  return out;
}

double EnsembleResult::median_recurrence_time() const {
  std::vector<double> v;
  for (const auto& r : trajectories) {
    if (!r.failed && std::isfinite(r.t_rec)) v.push_back(r.t_rec);
  }
  if (v.empty()) return kNaN;
  return quantile(std::move(v), 0.5);
}

Eigen::VectorXd initial_distribution(const Vector& psi0, double epsilon_psi) {
  Eigen::VectorXd p = regularize_amplitudes(psi0, epsilon_psi).cwiseAbs2();
  return p / p.sum();
}

EnsembleResult run_ensemble(const JumpModel& model, const Vector& psi0, const EnsembleConfig& config,
                            const TrajectoryHook& hook) {
  validate(config, model, psi0);
  const Runner runner(model, psi0, config);
  std::vector<TrajectoryRecord> records(config.n_trajectories);
  const int workers = config.workers > 0 ? config.workers : omp_get_max_threads();
  const auto n = static_cast<std::int64_t>(config.n_trajectories);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    records[idx] = runner.run(idx, sink_for(hook, idx));
  }
  return aggregate(model, config, std::move(records));
}

EnsembleResult run_ensemble_serial(const JumpModel& model, const Vector& psi0, const EnsembleConfig& config,
                                   const TrajectoryHook& hook) {
  validate(config, model, psi0);
  const Runner runner(model, psi0, config);
  std::vector<TrajectoryRecord> records(config.n_trajectories);
  for (std::size_t i = 0; i < config.n_trajectories; ++i) records[i] = runner.run(i, sink_for(hook, i));
  return aggregate(model, config, std::move(records));
}

nlohmann::json ensemble_to_json(const EnsembleResult& r) {
  nlohmann::json snaps = nlohmann::json::array();
  for (std::size_t k = 0; k < r.snapshot_times.size(); ++k) {
    snaps.push_back({{"t", r.snapshot_times[k]}, {"counts", r.occupancy[k]}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
    const auto& t = r.trajectories[i];
    if (t.failed) failures.push_back({{"trajectory", i}, {"t", t.failed_at}, {"error", t.error}});
  }
  nlohmann::json j{{"schema", "jumpsim.histogram.v1"},
                   {"trajectories", r.trajectories.size()},
                   {"total_events", r.total_events},
                   {"snapshots", std::move(snaps)},
                   {"failures", std::move(failures)}};
  j["deviation_time"] = std::isfinite(r.deviation_time) ? nlohmann::json(r.deviation_time) : nlohmann::json();
  return j;
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw Error("total_variation: size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

bool EquivarianceReport::all_within() const {
  return std::none_of(snapshots.begin(), snapshots.end(), [](const auto& s) { return s.flagged; });
}

EquivarianceReport equivariance_distance(EnsembleResult& result, std::span<const Eigen::VectorXd> oracle,
                                         std::uint64_t seed, int bootstrap) {
  if (oracle.size() != result.snapshot_times.size()) throw Error("oracle path must match the snapshot times");
  if (bootstrap < 10) throw Error("bootstrap needs at least 10 resamples");
  EquivarianceReport rep;
  Rng rng = make_rng(seed, 0);
  const auto n = static_cast<std::uint64_t>(result.trajectories.size());
  Eigen::VectorXd draw;
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    const Eigen::VectorXd& p = oracle[k];
    Eigen::VectorXd emp(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) emp[i] = static_cast<double>(result.occupancy[k][i]);
    emp /= static_cast<double>(n);

    SnapshotDistance s;
    s.time = result.snapshot_times[k];
    s.tv = total_variation(emp, p);
    std::vector<double> null_tv, boot_tv;
    for (int b = 0; b < bootstrap; ++b) {
      multinomial(rng, n, p, draw);
      null_tv.push_back(total_variation(draw / static_cast<double>(n), p));
      multinomial(rng, n, emp, draw);
      boot_tv.push_back(total_variation(draw / static_cast<double>(n), p));
    }
    s.floor_mean = mean_of(null_tv);
    s.floor_sd = sd_of(null_tv);
    s.ci_low = quantile(boot_tv, 0.025);
    s.ci_high = quantile(boot_tv, 0.975);
    s.flagged = s.tv > s.floor_mean + 3.0 * s.floor_sd;
    if (s.flagged && std::isnan(rep.deviation_time)) rep.deviation_time = s.time;
    rep.snapshots.push_back(s);
  }
  result.deviation_time = rep.deviation_time;
  return rep;
}

ScalingFit recurrence_scaling_fit(std::span<const RecurrenceSample> samples) {
  std::vector<std::size_t> sizes;
  std::vector<double> hbars;
  for (const auto& s : samples) {
    if (!(s.t_rec > 0.0) || !(s.hbar2 > 0.0) || s.nodes < 1) {
      throw Error("recurrence samples need positive t_rec, hbar2 and size");
    }
    sizes.push_back(s.nodes);
    hbars.push_back(s.hbar2);
  }
  std::sort(sizes.begin(), sizes.end());
  std::sort(hbars.begin(), hbars.end());
  const auto distinct_sizes = std::unique(sizes.begin(), sizes.end()) - sizes.begin();
  const auto distinct_hbars = std::unique(hbars.begin(), hbars.end()) - hbars.begin();
  if (distinct_sizes < 3 || distinct_hbars < 3) {
    throw Error("recurrence scaling fit needs at least 3 graph sizes and 3 hbar2 values");
  }

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = std::log(static_cast<double>(s.nodes));
    x(i, 2) = std::log(s.hbar2);
    y[i] = std::log(s.t_rec);
  }
  const Eigen::Vector3d beta = x.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const double dof = static_cast<double>(n - 3);
  const double s2 = dof > 0 ? resid.squaredNorm() / dof : 0.0;
  const Eigen::Matrix3d cov = s2 * (x.transpose() * x).inverse();
  const double ss_tot = (y.array() - y.mean()).square().sum();

  ScalingFit fit;
  fit.prefactor = std::exp(beta[0]);
  fit.gamma = beta[1];
  fit.hbar2_exponent = beta[2];
  fit.gamma_se = std::sqrt(cov(1, 1));
  fit.hbar2_exponent_se = std::sqrt(cov(2, 2));
  fit.r_squared = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
  fit.residual_sd = std::sqrt(s2);
  fit.samples = samples.size();
  return fit;
}

CatSweep cat_state_sweep(const models::CatStateCircuit& circuit, std::span<const double> ladder,
                         const EnsembleConfig& base) {
  if (ladder.empty()) throw Error("cat-state sweep needs a non-empty hbar2 ladder");
  std::vector<double> hs(ladder.begin(), ladder.end());
  std::sort(hs.begin(), hs.end());
  const JumpModel model(circuit.hamiltonian);
  CatSweep sweep;
  sweep.n_qubits = circuit.reg.n_qubits;
  for (double h2 : hs) {
    EnsembleConfig cfg = base;
    cfg.t0 = 0.0;
    cfg.t_end = circuit.schedule.total_duration();
    cfg.snapshot_times.clear();
    cfg.engine.constants.hbar2 = h2;
    cfg.engine.time_dependent_rule = true;
    cfg.engine.track_recurrence = true;
    CatSweepPoint pt;
    pt.hbar2 = h2;
    EnsembleResult r;
    try {
      r = run_ensemble(model, circuit.psi0, cfg);
    } catch (const EnsembleFailure& e) {
      r = e.result();
      pt.ensemble_failed = true;
      pt.error = e.what();
    }
    const auto terminal = r.terminal_nodes();
    if (!terminal.empty()) pt.spin = models::total_spin(circuit.reg, terminal);
    pt.failures = r.failures;
    pt.events = r.total_events;
    pt.t_rec = r.median_recurrence_time();
    sweep.points.push_back(std::move(pt));
  }
  const double half = 0.5 * sweep.n_qubits;
  for (std::size_t i = 0; i + 1 < sweep.points.size(); ++i) {
    const auto& a = sweep.points[i];
    const auto& b = sweep.points[i + 1];
    if (a.spin.samples == 0 || b.spin.samples == 0) continue;
    if ((a.spin.m - half) * (b.spin.m - half) <= 0.0 && a.spin.m != b.spin.m) {
      const double f = (half - a.spin.m) / (b.spin.m - a.spin.m);
      sweep.crossover_hbar2 = std::exp(std::log(a.hbar2) + f * (std::log(b.hbar2) - std::log(a.hbar2)));
      break;
    }
  }
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    for (std::size_t j = i + 1; j < sweep.points.size(); ++j) {
      const auto& a = sweep.points[i].spin;
      const auto& b = sweep.points[j].spin;
      if (a.samples == 0 || b.samples == 0) continue;
      if (b.m < a.m - 3.0 * std::hypot(a.m_se, b.m_se)) sweep.monotone = false;
    }
  }
  return sweep;
}

bool CatSweep::ok() const {
  return std::none_of(points.begin(), points.end(), [](const auto& p) { return p.ensemble_failed; });
}

MeasurementReport measurement_statistics(const models::ApparatusModel& app, const Vector& psi_sys,
                                         const EnsembleConfig& base) {
  const JumpModel model(app.hamiltonian);
  const double window_start = app.first_cascade_end();
  EnsembleConfig cfg = base;
  cfg.t0 = 0.0;
  cfg.t_end = app.end_time();
  cfg.snapshot_times.clear();
  cfg.engine.time_dependent_rule = true;

  struct Tracker {
    int last_branch = -1;
    std::uint64_t switches = 0;
  };
  std::vector<Tracker> trackers(cfg.n_trajectories);
  TrajectoryHook hook = [&](std::size_t i) -> EventSink {
    return [&app, &trackers, i, window_start](const JumpEvent& ev, const TrajectoryState&) {
      Tracker& tr = trackers[i];
      const int b = app.branch_of(ev.to);
      if (b < 0) return;
      if (tr.last_branch >= 0 && b != tr.last_branch && ev.at > window_start) ++tr.switches;
      tr.last_branch = b;
    };
  };
  MeasurementReport rep;
  EnsembleResult r;
  try {
    r = run_ensemble(model, app.initial_state(psi_sys), cfg, hook);
  } catch (const EnsembleFailure& e) {
    r = e.result();
    rep.ensemble_failed = true;
    rep.error = e.what();
  }

  rep.counts.assign(app.pointer_states, 0);
  rep.trajectories = r.trajectories.size();
  rep.failures = r.failures;
  std::size_t decided = 0;
  for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
    const auto& t = r.trajectories[i];
    if (t.failed) continue;
    rep.switches.push_back(trackers[i].switches);
    const int b = app.branch_of(t.terminal);
    if (b < 0) {
      ++rep.undecided;
      continue;
    }
    ++rep.counts[static_cast<std::size_t>(b)];
    ++decided;
  }
  for (std::uint64_t c : rep.counts) {
    const double f = decided ? static_cast<double>(c) / static_cast<double>(decided) : kNaN;
    rep.frequency.push_back(f);
    rep.frequency_se.push_back(decided ? std::sqrt(f * (1.0 - f) / static_cast<double>(decided)) : kNaN);
  }
  if (!rep.switches.empty()) {
    std::vector<double> sw(rep.switches.begin(), rep.switches.end());
    rep.mean_switches = mean_of(sw);
    const double window = cfg.t_end - window_start;
    if (window > 0.0) {
      rep.switch_rate = rep.mean_switches / window;
      rep.switch_rate_se = sd_of(sw) / std::sqrt(static_cast<double>(sw.size())) / window;
    }
  }
  return rep;
}

}  // namespace jumpsim
