#ifndef JUMPSIM_STATE_GRAPH_HPP
#define JUMPSIM_STATE_GRAPH_HPP

#include <cstdint>
#include <optional>
#include <ranges>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jumpsim/hamiltonian.hpp"

namespace jumpsim {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint32_t;

struct DirectedEdge {
  NodeId from = 0;
  NodeId to = 0;
  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

/**
 * Undirected state graph with CSR storage of its directed edges.
 *
 * Each non-loop edge {n,m} contributes two directed edges n->m and m->n; a
 * loop {n,n} contributes one. The directed edges leaving node n occupy the
 * contiguous index range out_edges(n), sorted by target. Immutable after
 * construction.
 */
class StateGraph {
 public:
  StateGraph() = default;
  // Pairs may repeat or come in either orientation; they are canonicalized.
  StateGraph(std::size_t node_count, std::vector<std::pair<NodeId, NodeId>> edges);

  std::size_t node_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const { return undirected_.size(); }
  std::size_t directed_count() const { return targets_.size(); }

  auto out_edges(NodeId n) const { return std::views::iota(offsets_[n], offsets_[n + 1]); }
  std::size_t degree(NodeId n) const { return offsets_[n + 1] - offsets_[n]; }

  NodeId source(EdgeIndex e) const { return sources_[e]; }
  NodeId target(EdgeIndex e) const { return targets_[e]; }
  EdgeIndex reverse(EdgeIndex e) const { return reverse_[e]; }
  bool is_loop(EdgeIndex e) const { return sources_[e] == targets_[e]; }
  DirectedEdge directed(EdgeIndex e) const { return {sources_[e], targets_[e]}; }

  std::optional<EdgeIndex> find(NodeId from, NodeId to) const;
  const std::vector<std::pair<NodeId, NodeId>>& undirected_edges() const { return undirected_; }

  friend bool operator==(const StateGraph&, const StateGraph&) = default;

 private:
  std::vector<EdgeIndex> offsets_;
  std::vector<NodeId> sources_;
  std::vector<NodeId> targets_;
  std::vector<EdgeIndex> reverse_;
  std::vector<std::pair<NodeId, NodeId>> undirected_;
};

/// Jump potentials A_nm and last same-direction jump times, indexed by EdgeIndex.
struct PotentialTable {
  std::vector<Complex> value;
  std::vector<double> last_jump;
};

/// E = union over slices of {n,m} with |H_nm| >= kStructuralZero.
StateGraph build_graph(const HamiltonianModel& h);

/**
 * Replaces every component with magnitude below epsilon by one of magnitude
 * epsilon, keeping its phase (exact zeros get phase 0). No renormalization.
 */
Vector regularize_amplitudes(const Vector& psi, double epsilon);

/**
 * A_nm = H_nm(t0) psi'_m / psi'_n on every directed edge, psi' the
 * regularized psi0; every last_jump is set to t0.
 */
PotentialTable init_potentials(const StateGraph& graph, const HamiltonianModel& h,
                               const Vector& psi0, double epsilon_psi, double t0 = 0.0);

nlohmann::json snapshot_to_json(const StateGraph& graph, const PotentialTable& table);
StateGraph graph_from_json(const nlohmann::json& j);
PotentialTable table_from_json(const StateGraph& graph, const nlohmann::json& j);

}  // namespace jumpsim

#endif  // JUMPSIM_STATE_GRAPH_HPP
