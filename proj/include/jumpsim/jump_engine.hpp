#ifndef JUMPSIM_JUMP_ENGINE_HPP
#define JUMPSIM_JUMP_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "jumpsim/hamiltonian.hpp"
#include "jumpsim/state_graph.hpp"

namespace jumpsim {

using Rng = std::mt19937_64;

// Internal units: hbar = 1 and the characteristic energy is O(1).
struct PhysicalConstants {
  double hbar = 1.0;
  double hbar2 = 1e-3;
};

struct EngineConfig {
  PhysicalConstants constants;
  bool time_dependent_rule = false;
  bool rate_clamp = true;
  std::uint64_t max_events = 500'000'000;
  bool record_events = false;
  bool track_recurrence = false;
};

/// A Hamiltonian together with its state graph and H on each directed edge per slice.
class JumpModel {
 public:
  explicit JumpModel(HamiltonianModel h);

  const HamiltonianModel& hamiltonian() const { return h_; }
  const StateGraph& graph() const { return graph_; }
  std::size_t node_count() const { return graph_.node_count(); }

  // H_{source(e), target(e)} in force at time t.
  Complex edge_h(EdgeIndex e, double t) const { return edge_h_[h_.slice_index(t)][e]; }

 private:
  HamiltonianModel h_;
  StateGraph graph_;
  std::vector<std::vector<Complex>> edge_h_;
};

struct JumpEvent {
  NodeId from = 0;
  NodeId to = 0;
  double at = 0.0;
  double waiting_time = 0.0;
  double rate_total = 0.0;
  EdgeIndex edge = 0;
};

// Online per-directed-edge statistics of same-direction repeat intervals.
struct RecurrenceTally {
  std::vector<std::uint64_t> repeats;
  std::vector<double> gap_sum;
  std::vector<std::uint8_t> visited;
};

struct TrajectoryState {
  NodeId node = 0;
  double time = 0.0;
  PotentialTable potentials;
  Rng rng;
  std::uint64_t events = 0;
  RecurrenceTally recurrence;
};

struct EdgeRate {
  EdgeIndex edge = 0;
  double rate = 0.0;
};

class FrozenTrajectory : public Error {
 public:
  using Error::Error;
};

class NegativeRate : public Error {
 public:
  using Error::Error;
};

class NonFinitePotential : public Error {
 public:
  using Error::Error;
};

/// Thrown when max_events is exhausted; the state passed in holds the partial trajectory.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::vector<JumpEvent> log)
      : Error(what), log_(std::move(log)) {}
  const std::vector<JumpEvent>& partial_log() const { return log_; }

 private:
  std::vector<JumpEvent> log_;
};

/// Deterministic generator for (base seed, stream index).
Rng make_rng(std::uint64_t base_seed, std::uint64_t stream);

/**
 * Fresh trajectory at `start` with potentials initialized from psi0 and
 * every last-jump time set to t0.
 */
TrajectoryState make_trajectory(const JumpModel& model, NodeId start, const Vector& psi0,
                                double epsilon_psi, Rng rng, double t0 = 0.0);

/// Rate on a single potential: -Im[A]/hbar + |A|/hbar2.
inline double raw_rate(Complex a, const PhysicalConstants& c) {
  return -a.imag() / c.hbar + std::sqrt(std::norm(a)) / c.hbar2;
}

std::vector<EdgeRate> jump_rates(const TrajectoryState& state, const JumpModel& model,
                                 const EngineConfig& config);

JumpEvent sample_next_jump(TrajectoryState& state, std::span<const EdgeRate> rates,
                           const JumpModel& model);

/**
 * Applies the memory and update rules for one jump n -> m at event.at.
 *
 * With Phi the sum of the stored potentials on every directed edge leaving m
 * (read before any update) and Delta = event.at - tbar(n->m):
 *   A(n->m) *= exp(-i Phi Delta / hbar),  A(m->n) *= exp(+i Phi Delta / hbar).
 * Loop jumps skip this step entirely. With the time-dependent rule,
 * A(m->n) is additionally rescaled by H_mn(event.at) / H_mn(tbar(n->m)).
 */
void apply_jump(TrajectoryState& state, const JumpEvent& event, const JumpModel& model,
                const EngineConfig& config);

using EventSink = std::function<void(const JumpEvent&, const TrajectoryState&)>;

struct EvolveResult {
  std::uint64_t events = 0;
  std::vector<JumpEvent> log;
};

/**
 * Samples and applies jumps until the next waiting time would pass t_end,
 * then sets state.time = t_end. The sink, if set, sees every applied event.
 */
EvolveResult evolve_trajectory(TrajectoryState& state, const JumpModel& model, double t_end,
                               const EngineConfig& config, const EventSink& sink = {});

nlohmann::json event_to_json(const JumpEvent& event);

// Per directed edge, gaps between successive same-direction jumps.
std::vector<std::vector<double>> recurrence_intervals(const StateGraph& graph,
                                                      std::span<const JumpEvent> log);

/// Median over directed edges (with at least one repeat) of the mean repeat gap; NaN if none.
double recurrence_time(const std::vector<std::vector<double>>& intervals);
double recurrence_time(const RecurrenceTally& tally);

}  // namespace jumpsim

#endif  // JUMPSIM_JUMP_ENGINE_HPP
