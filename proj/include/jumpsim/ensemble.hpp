#ifndef JUMPSIM_ENSEMBLE_HPP
#define JUMPSIM_ENSEMBLE_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jumpsim/jump_engine.hpp"
#include "jumpsim/models.hpp"

namespace jumpsim {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EnsembleConfig {
  std::size_t n_trajectories = 1000;
  std::uint64_t seed = 1;  // trajectory i uses make_rng(seed, i)
  double t0 = 0.0;
  double t_end = 1.0;
  std::vector<double> snapshot_times;  // ascending, inside [t0, t_end]
  double epsilon_psi = 1e-6;
  EngineConfig engine;
  int workers = 0;  // 0: OpenMP default
  double max_failure_fraction = 0.01;
};

struct TrajectoryRecord {
  NodeId start = 0;
  NodeId terminal = 0;
  std::vector<NodeId> snapshot_nodes;
  std::uint64_t events = 0;
  double t_rec = kNaN;
  bool failed = false;
  double failed_at = kNaN;
  std::string error;
  std::vector<JumpEvent> log;  // only with engine.record_events
};

struct EnsembleResult {
  std::vector<double> snapshot_times;
  std::vector<std::vector<std::uint64_t>> occupancy;  // [snapshot][node]
  std::vector<TrajectoryRecord> trajectories;
  std::size_t failures = 0;
  std::uint64_t total_events = 0;
  double deviation_time = kNaN;  // set by the equivariance check

  double failure_fraction() const;
  // Terminal nodes of the trajectories that did not fail.
  std::vector<NodeId> terminal_nodes() const;
  // Median over successful trajectories of their recurrence time (needs track_recurrence).
  double median_recurrence_time() const;
};

/// Thrown when more than max_failure_fraction of the trajectories fail.
class EnsembleFailure : public Error {
 public:
  EnsembleFailure(const std::string& what, EnsembleResult result)
      : Error(what), result_(std::move(result)) {}
  const EnsembleResult& result() const { return result_; }

 private:
  EnsembleResult result_;
};

// Per-trajectory event observer; created once per trajectory index, called
// from the worker running that trajectory only.
using TrajectoryHook = std::function<EventSink(std::size_t trajectory)>;

/// Initial-node distribution: |psi'|^2 of the regularized state, renormalized.
Eigen::VectorXd initial_distribution(const Vector& psi0, double epsilon_psi);

/**
 * Independent trajectories, one RNG stream each; a failed trajectory keeps
 * its last node in the remaining snapshots. Results do not depend on the
 * number of workers.
 */
EnsembleResult run_ensemble(const JumpModel& model, const Vector& psi0, const EnsembleConfig& config,
                            const TrajectoryHook& hook = {});

// Single-threaded reference with identical output.
EnsembleResult run_ensemble_serial(const JumpModel& model, const Vector& psi0, const EnsembleConfig& config,
                                   const TrajectoryHook& hook = {});

nlohmann::json ensemble_to_json(const EnsembleResult& result);

struct SnapshotDistance {
  double time = 0.0;
  double tv = 0.0;
  double ci_low = 0.0;  // bootstrap 95% interval of tv
  double ci_high = 0.0;
  double floor_mean = 0.0;  // TV of exact multinomial draws from the oracle distribution
  double floor_sd = 0.0;
  bool flagged = false;  // tv > floor_mean + 3 floor_sd
};

struct EquivarianceReport {
  std::vector<SnapshotDistance> snapshots;
  double deviation_time = kNaN;  // first flagged snapshot
  bool all_within() const;
};

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// oracle[k] is |psi(t_k)|^2 at result.snapshot_times[k].
EquivarianceReport equivariance_distance(EnsembleResult& result, std::span<const Eigen::VectorXd> oracle,
                                         std::uint64_t seed = 7, int bootstrap = 400);

struct RecurrenceSample {
  std::size_t nodes = 0;
  double hbar2 = 0.0;
  double t_rec = 0.0;
};

/// log t_rec = log c + gamma log|N| + beta log hbar2, by least squares.
struct ScalingFit {
  double gamma = 0.0;
  double gamma_se = 0.0;
  double hbar2_exponent = 0.0;
  double hbar2_exponent_se = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
  double residual_sd = 0.0;
  std::size_t samples = 0;
};

ScalingFit recurrence_scaling_fit(std::span<const RecurrenceSample> samples);

struct CatSweepPoint {
  double hbar2 = 0.0;
  models::SpinEstimate spin;
  std::size_t failures = 0;
  std::uint64_t events = 0;
  double t_rec = kNaN;
  bool ensemble_failed = false;  // failures above the ensemble limit; spin is from the survivors
  std::string error;
};

struct CatSweep {
  int n_qubits = 0;
  std::vector<CatSweepPoint> points;  // ascending hbar2
  double crossover_hbar2 = kNaN;      // M = n_qubits / 2, log-linear interpolation
  bool monotone = true;               // M nondecreasing in hbar2 within 3 sigma
  bool ok() const;                    // no point exceeded the failure limit
};

/**
 * The ensemble config's engine settings are reused at every hbar2 of the
 * ladder. A point whose ensemble fails is kept, flagged, and the sweep goes on.
 */
CatSweep cat_state_sweep(const models::CatStateCircuit& circuit, std::span<const double> ladder,
                         const EnsembleConfig& base);

struct MeasurementReport {
  std::vector<std::uint64_t> counts;  // per outcome
  std::vector<double> frequency;
  std::vector<double> frequency_se;
  std::uint64_t undecided = 0;
  std::size_t trajectories = 0;
  std::size_t failures = 0;
  std::vector<std::uint64_t> switches;  // per successful trajectory
  double mean_switches = 0.0;
  double switch_rate = 0.0;  // switches per trajectory per unit time after the first cascade pulse
  double switch_rate_se = 0.0;
  bool ensemble_failed = false;  // failures above the ensemble limit; statistics are from the survivors
  std::string error;
};

/**
 * Ensemble over the apparatus from psi_sys (x) |P_0> (x) |0...0> to the end of
 * the cascade. A branch switch is a move into a decided node whose branch
 * differs from the last decided one, counted after the first cascade pulse.
 */
MeasurementReport measurement_statistics(const models::ApparatusModel& app, const Vector& psi_sys,
                                         const EnsembleConfig& base);

}  // namespace jumpsim

#endif  // JUMPSIM_ENSEMBLE_HPP
