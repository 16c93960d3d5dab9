#include "jumpsim/state_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jumpsim {

StateGraph::StateGraph(std::size_t node_count, std::vector<std::pair<NodeId, NodeId>> edges) {
  if (node_count < 1) throw Error("state graph needs at least one node");
  for (auto& [a, b] : edges) {
    if (a >= node_count || b >= node_count) {
      std::ostringstream os;
      os << "edge {" << a << "," << b << "} references a node outside [0," << node_count << ")";
      throw Error(os.str());
    }
    if (b < a) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  undirected_ = std::move(edges);

  std::vector<std::vector<NodeId>> adjacency(node_count);
  for (const auto& [a, b] : undirected_) {
    adjacency[a].push_back(b);
    if (a != b) adjacency[b].push_back(a);
  }
  offsets_.assign(node_count + 1, 0);
  for (std::size_t n = 0; n < node_count; ++n) {
    std::sort(adjacency[n].begin(), adjacency[n].end());
    offsets_[n + 1] = offsets_[n] + static_cast<EdgeIndex>(adjacency[n].size());
  }
  sources_.resize(offsets_.back());
  targets_.resize(offsets_.back());
  for (std::size_t n = 0; n < node_count; ++n) {
    std::copy(adjacency[n].begin(), adjacency[n].end(), targets_.begin() + offsets_[n]);
    std::fill(sources_.begin() + offsets_[n], sources_.begin() + offsets_[n + 1], static_cast<NodeId>(n));
  }
  reverse_.resize(targets_.size());
  for (EdgeIndex e = 0; e < targets_.size(); ++e) reverse_[e] = *find(targets_[e], sources_[e]);
}

std::optional<EdgeIndex> StateGraph::find(NodeId from, NodeId to) const {
  if (from >= node_count()) return std::nullopt;
  auto first = targets_.begin() + offsets_[from];
  auto last = targets_.begin() + offsets_[from + 1];
  auto it = std::lower_bound(first, last, to);
  if (it == last || *it != to) return std::nullopt;
  return static_cast<EdgeIndex>(it - targets_.begin());
}

StateGraph build_graph(const HamiltonianModel& h) {
  const int d = h.dimension();
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int n = 0; n < d; ++n) {
    for (int m = n; m < d; ++m) {
      if (h.structurally_active(n, m)) edges.emplace_back(n, m);
    }
  }
  return StateGraph(static_cast<std::size_t>(d), std::move(edges));
}

Vector regularize_amplitudes(const Vector& psi, double epsilon) {
  if (!(epsilon > 0.0)) throw Error("epsilon_psi must be > 0");
  Vector out = psi;
  for (Eigen::Index n = 0; n < out.size(); ++n) {
    const double mag = std::abs(out[n]);
    if (mag < epsilon) out[n] = mag > 0.0 ? out[n] * (epsilon / mag) : Complex{epsilon, 0.0};
  }
  return out;
}

PotentialTable init_potentials(const StateGraph& graph, const HamiltonianModel& h,
                               const Vector& psi0, double epsilon_psi, double t0) {
  if (!(epsilon_psi > 0.0)) throw Error("epsilon_psi must be > 0");
  if (static_cast<std::size_t>(psi0.size()) != graph.node_count()) {
    throw Error("initial state dimension does not match the state graph");
  }
  if (std::abs(psi0.norm() - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "initial state is not normalized (norm = " << psi0.norm() << ")";
    throw Error(os.str());
  }
  const Vector psi = regularize_amplitudes(psi0, epsilon_psi);
  const Matrix& hm = h.at(t0);
  PotentialTable table;
  table.value.resize(graph.directed_count());
  table.last_jump.assign(graph.directed_count(), t0);
  for (EdgeIndex e = 0; e < graph.directed_count(); ++e) {
    const NodeId n = graph.source(e);
    const NodeId m = graph.target(e);
    const Complex a = hm(n, m) * psi[m] / psi[n];
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      std::ostringstream os;
      os << "non-finite initial potential on edge " << n << "->" << m;
      throw Error(os.str());
    }
    table.value[e] = a;
  }
  return table;
}

nlohmann::json snapshot_to_json(const StateGraph& graph, const PotentialTable& table) {
  nlohmann::json j;
  j["schema"] = "jumpsim.snapshot.v1";
  j["node_count"] = graph.node_count();
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : graph.undirected_edges()) edges.push_back({a, b});
  auto& pots = j["potentials"] = nlohmann::json::array();
  for (EdgeIndex e = 0; e < graph.directed_count(); ++e) {
    pots.push_back({{"from", graph.source(e)},
                    {"to", graph.target(e)},
                    {"A", {table.value[e].real(), table.value[e].imag()}},
                    {"tbar", table.last_jump[e]}});
  }
  return j;
}

StateGraph graph_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "jumpsim.snapshot.v1") throw Error("unrecognized snapshot schema");
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  return StateGraph(j.at("node_count").get<std::size_t>(), std::move(edges));
}

PotentialTable table_from_json(const StateGraph& graph, const nlohmann::json& j) {
  if (!(graph_from_json(j) == graph)) throw Error("snapshot graph does not match the model graph");
  PotentialTable table;
  table.value.resize(graph.directed_count());
  table.last_jump.resize(graph.directed_count());
  std::vector<bool> seen(graph.directed_count(), false);
  for (const auto& p : j.at("potentials")) {
    auto e = graph.find(p.at("from").get<NodeId>(), p.at("to").get<NodeId>());
    if (!e) throw Error("snapshot potential on an edge missing from the graph");
    table.value[*e] = {p.at("A").at(0).get<double>(), p.at("A").at(1).get<double>()};
    table.last_jump[*e] = p.at("tbar").get<double>();
    seen[*e] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error("snapshot is missing potentials for some directed edges");
  }
  return table;
}

}  // namespace jumpsim
