#ifndef JUMPSIM_MODELS_HPP
#define JUMPSIM_MODELS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jumpsim/hamiltonian.hpp"
#include "jumpsim/state_graph.hpp"

namespace jumpsim::models {

// Elementary fixtures (hbar = 1, coupling g sets the energy scale).
HamiltonianModel two_level(double g);
HamiltonianModel ring(int n, double g);
HamiltonianModel complete_graph(int n, double g);

/// Dense random Hermitian matrix with entries of typical magnitude `scale`.
HamiltonianModel random_hermitian(int n, std::uint64_t seed, double scale = 1.0, bool zero_diagonal = false);

/// Random normalized state with every |psi_n| >= min_magnitude / sqrt(n).
Vector random_state(int n, std::uint64_t seed, double min_magnitude = 0.3);
Vector uniform_state(int n);
Vector basis_state(int n, int index);

/**
 * n-qubit register. Node ids are bitstrings with qubit 1 as the most
 * significant bit: node = sum_i b_i 2^(n - i), i = 1..n.
 */
struct QubitRegister {
  int n_qubits = 1;

  std::size_t dimension() const { return std::size_t{1} << n_qubits; }
  int bit(NodeId node, int qubit) const { return static_cast<int>((node >> (n_qubits - qubit)) & 1u); }
  NodeId flip(NodeId node, int qubit) const { return node ^ (NodeId{1} << (n_qubits - qubit)); }
  std::string bitstring(NodeId node) const;
};

/**
 * One pulse: a Hermitian generator K applied for `duration`, such that
 * exp(-i K duration) equals `unitary`, the gate written out directly.
 */
struct Gate {
  std::string name;
  std::vector<int> targets;
  double duration = 1.0;
  Matrix generator;
  Matrix unitary;
};

struct GateSchedule {
  std::vector<Gate> gates;  // consecutive, non-overlapping pulses starting at t = 0

  double total_duration() const;
  double start_of(std::size_t k) const;
};

/**
 * Slices: H_static + K_k on pulse k, then a final idle slice H_static after
 * the schedule. Entries active anywhere are floored at `baseline_floor`.
 */
HamiltonianModel schedule_hamiltonian(const GateSchedule& schedule, const Matrix& h_static,
                                      double baseline_floor);

// Gate builders on an n-qubit register (qubits numbered from 1).
Gate rotate_y_half(const QubitRegister& reg, int qubit, double tau);
Gate controlled_not(const QubitRegister& reg, int control, int target, double tau);
// Several commuting CNOTs sharing a control, applied in one pulse.
Gate fan_out_cnot(const QubitRegister& reg, int control, std::span<const int> targets, double tau);

struct CatStateCircuit {
  QubitRegister reg;
  GateSchedule schedule;
  HamiltonianModel hamiltonian;
  Vector psi0;  // |0...0>
};

/**
 * Cat-state preparation: a half rotation |0> -> (|0> + |1>)/sqrt2 on qubit 1,
 * then CNOTs from qubit 1 into every other qubit (serially, or as one
 * fan-out pulse when parallel_cnots is set). Pulses last tau_gate.
 */
CatStateCircuit cat_state_circuit(int n_qubits, double tau_gate, double baseline_floor,
                                  bool parallel_cnots = false);

/**
 * System + pointer + environment-qubit chain.
 *
 * Node layout: ((s * P + p) << d_env) | e with s the system index, p the
 * pointer index (P = system dimension, p = 0 is the ready state and the
 * pointer state for outcome 0) and e the environment bits, environment
 * qubit 1 most significant.
 *
 * Pulse 0 couples system to pointer only while the environment is in
 * |0...0>, realizing |phi_m>|P_0> -> |phi_m>|P_m>. Pulse j = 1..d_env rotates
 * environment qubit j by R_y(theta_p) conditioned on the pointer, with
 * theta_p spread over [pi/2, -pi/2] (orthogonal images for two outcomes).
 * Environment couplings never change p, so outcome branches only touch at
 * the roots (any s, any p, e = 0).
 */
struct ApparatusModel {
  int system_dim = 2;
  int pointer_states = 2;
  int d_env = 0;
  double omega_int = 1.0;
  Matrix basis;  // columns are the measured states |phi_m>
  GateSchedule schedule;
  HamiltonianModel hamiltonian;

  std::size_t dimension() const;
  NodeId node(int s, int p, std::uint32_t env) const;
  int system_of(NodeId node) const;
  int pointer_of(NodeId node) const;
  std::uint32_t env_of(NodeId node) const;
  bool is_root(NodeId node) const { return env_of(node) == 0; }
  // Outcome branch of a node, or -1 ("undecided") at the roots.
  int branch_of(NodeId node) const { return is_root(node) ? -1 : pointer_of(node); }

  double pointer_pulse_end() const { return schedule.start_of(0) + schedule.gates.front().duration; }
  double first_cascade_end() const;
  double end_time() const { return schedule.total_duration(); }

  // psi_sys (x) |P_0> (x) |0...0>.
  Vector initial_state(const Vector& psi_sys) const;
};

ApparatusModel measurement_apparatus(const Matrix& h_sys, const Matrix& basis, int d_env, double omega_int,
                                     double baseline_floor);

struct SpinEstimate {
  double m = 0.0;
  double m_se = 0.0;
  std::vector<double> sigma_z;
  std::vector<double> sigma_z_se;
  std::size_t samples = 0;
};

/**
 * Total spin M = sum_i <sigma_z^i> over terminal nodes (bit 0 -> +1). The
 * standard error comes from the per-trajectory sums, so correlations
 * between qubits are kept.
 */
SpinEstimate total_spin(const QubitRegister& reg, std::span<const NodeId> terminal_nodes);

// Per-qubit outcome tallies; no cross-qubit correlation information, so
// m_se assumes independent qubits.
SpinEstimate total_spin(std::span<const std::uint64_t> up, std::span<const std::uint64_t> down);

/**
 * Model from a declarative description. Recognized "topology" values:
 * two_level, ring, complete_graph, random, matrix. See README for keys.
 */
struct ModelSpec {
  HamiltonianModel hamiltonian;
  Vector psi0;
  std::string name;
};
ModelSpec model_from_json(const nlohmann::json& j);

}  // namespace jumpsim::models

#endif  // JUMPSIM_MODELS_HPP
