#include "jumpsim/jump_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace jumpsim {

namespace {

// Uniform on (0, 1].
double uniform_open0(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

std::string describe(const JumpEvent& ev) {
  std::ostringstream os;
  os << "jump " << ev.from << "->" << ev.to << " at t=" << ev.at << " (dt=" << ev.waiting_time
     << ", Lambda=" << ev.rate_total << ")";
  return os.str();
}

}  // namespace

JumpModel::JumpModel(HamiltonianModel h) : h_(std::move(h)), graph_(build_graph(h_)) {
  edge_h_.resize(h_.slices().size());
  for (std::size_t k = 0; k < h_.slices().size(); ++k) {
    const Matrix& m = h_.slices()[k].matrix;
    auto& row = edge_h_[k];
    row.resize(graph_.directed_count());
    for (EdgeIndex e = 0; e < graph_.directed_count(); ++e) row[e] = m(graph_.source(e), graph_.target(e));
  }
}

Rng make_rng(std::uint64_t base_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6a756d70u};
  return Rng(seq);
}

TrajectoryState make_trajectory(const JumpModel& model, NodeId start, const Vector& psi0,
                                double epsilon_psi, Rng rng, double t0) {
  if (start >= model.node_count()) throw Error("start node out of range");
  TrajectoryState s;
  s.node = start;
  s.time = t0;
  s.potentials = init_potentials(model.graph(), model.hamiltonian(), psi0, epsilon_psi, t0);
  s.rng = std::move(rng);
  return s;
}

std::vector<EdgeRate> jump_rates(const TrajectoryState& state, const JumpModel& model,
                                 const EngineConfig& config) {
  std::vector<EdgeRate> out;
  const auto& g = model.graph();
  out.reserve(g.degree(state.node));
  for (EdgeIndex e : g.out_edges(state.node)) {
    const Complex a = state.potentials.value[e];
    double r = raw_rate(a, config.constants);
    if (r < 0.0) {
      if (!config.rate_clamp) {
        std::ostringstream os;
        os << "negative jump rate " << r << " on edge " << g.source(e) << "->" << g.target(e)
           << " with A = " << a << " (hbar2 too large for this regime)";
        throw NegativeRate(os.str());
      }
      r = 0.0;
    }
    out.push_back({e, r});
  }
  return out;
}

JumpEvent sample_next_jump(TrajectoryState& state, std::span<const EdgeRate> rates,
                           const JumpModel& model) {
  double total = 0.0;
  for (const auto& r : rates) total += r.rate;
  if (!(total > 0.0)) {
    std::ostringstream os;
    os << "frozen trajectory: total jump rate is zero at node " << state.node << ", t=" << state.time;
    throw FrozenTrajectory(os.str());
  }
  JumpEvent ev;
  ev.from = state.node;
  ev.rate_total = total;
  ev.waiting_time = -std::log(uniform_open0(state.rng)) / total;
  ev.at = state.time + ev.waiting_time;
  double target = uniform_open0(state.rng) * total;
  std::size_t pick = rates.size() - 1;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    target -= rates[i].rate;
    if (target <= 0.0 && rates[i].rate > 0.0) {
      pick = i;
      break;
    }
  }
  while (rates[pick].rate <= 0.0) --pick;  // rounding left target > 0 after the last edge
  ev.edge = rates[pick].edge;
  ev.to = model.graph().target(ev.edge);
  return ev;
}

void apply_jump(TrajectoryState& state, const JumpEvent& ev, const JumpModel& model,
                const EngineConfig& config) {
  const auto& g = model.graph();
  auto& value = state.potentials.value;
  auto& last = state.potentials.last_jump;
  const EdgeIndex e = ev.edge;
  const EdgeIndex rev = g.reverse(e);
  const double tbar = last[e];

  if (e != rev) {
    Complex phi{0.0, 0.0};
    for (EdgeIndex f : g.out_edges(ev.to)) phi += value[f];
    const Complex arg = Complex{0.0, 1.0} * phi * ((ev.at - tbar) / config.constants.hbar);
    value[e] *= std::exp(-arg);
    value[rev] *= std::exp(arg);
  }
  if (config.time_dependent_rule) {
    const Complex h_then = model.edge_h(rev, tbar);
    if (h_then == Complex{0.0, 0.0}) {
      throw Error("time-dependent rule divides by a zero Hamiltonian entry on " + describe(ev) +
                  "; configure a baseline floor");
    }
    value[rev] *= model.edge_h(rev, ev.at) / h_then;
  }
  if (!finite(value[e]) || !finite(value[rev])) {
    std::ostringstream os;
    os << "non-finite potential after " << describe(ev) << ": A(n->m) = " << value[e]
       << ", A(m->n) = " << value[rev] << ", tbar = " << tbar;
    throw NonFinitePotential(os.str());
  }
  if (config.track_recurrence) {
    auto& rec = state.recurrence;
    if (rec.visited.size() != value.size()) {
      rec.visited.assign(value.size(), 0);
      rec.repeats.assign(value.size(), 0);
      rec.gap_sum.assign(value.size(), 0.0);
    }
    if (rec.visited[e]) {
      ++rec.repeats[e];
      rec.gap_sum[e] += ev.at - tbar;
    }
    rec.visited[e] = 1;
  }
  last[e] = ev.at;
  state.node = ev.to;
  state.time = ev.at;
  ++state.events;
}

EvolveResult evolve_trajectory(TrajectoryState& state, const JumpModel& model, double t_end,
                               const EngineConfig& config, const EventSink& sink) {
  EvolveResult result;
  if (t_end < state.time) throw Error("evolve_trajectory: t_end precedes the current time");
  if (config.max_events < 1) throw Error("max_events must be >= 1");
  const auto& g = model.graph();
  std::vector<EdgeRate> rates;
  rates.reserve(16);
  while (true) {
    rates.clear();
    for (EdgeIndex e : g.out_edges(state.node)) {
      double r = raw_rate(state.potentials.value[e], config.constants);
      if (r < 0.0) {
        if (!config.rate_clamp) {
          rates = jump_rates(state, model, config);  // throws with the diagnostic
        }
        r = 0.0;
      }
      rates.push_back({e, r});
    }
    // A draw that overshoots t_end is discarded; exact since rates are constant between jumps.
    JumpEvent ev = sample_next_jump(state, rates, model);
    if (ev.at > t_end) break;
    if (state.events >= config.max_events) {
      std::ostringstream os;
      os << "max_events (" << config.max_events << ") exhausted at t=" << state.time << " before t_end="
         << t_end << "; hbar2 is too small for this horizon";
      state.time = std::min(state.time, t_end);
      throw TruncationError(os.str(), std::move(result.log));
    }
    apply_jump(state, ev, model, config);
    ++result.events;
    if (config.record_events) result.log.push_back(ev);
    if (sink) sink(ev, state);
  }
  state.time = t_end;
  return result;
}

nlohmann::json event_to_json(const JumpEvent& ev) {
  return {{"from", ev.from}, {"to", ev.to}, {"t", ev.at}, {"dt", ev.waiting_time}, {"Lambda", ev.rate_total}};
}

std::vector<std::vector<double>> recurrence_intervals(const StateGraph& graph,
                                                      std::span<const JumpEvent> log) {
  std::vector<std::vector<double>> gaps(graph.directed_count());
  std::vector<double> last(graph.directed_count(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& ev : log) {
    auto e = graph.find(ev.from, ev.to);
    if (!e) throw Error("event log references an edge missing from the graph");
    if (!std::isnan(last[*e])) gaps[*e].push_back(ev.at - last[*e]);
    last[*e] = ev.at;
  }
  return gaps;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

}  // namespace

double recurrence_time(const std::vector<std::vector<double>>& intervals) {
  std::vector<double> means;
  for (const auto& g : intervals) {
    if (g.empty()) continue;
    double s = 0.0;
    for (double x : g) s += x;
    means.push_back(s / static_cast<double>(g.size()));
  }
  return median(std::move(means));
}

double recurrence_time(const RecurrenceTally& tally) {
  std::vector<double> means;
  for (std::size_t e = 0; e < tally.repeats.size(); ++e) {
    if (tally.repeats[e] > 0) means.push_back(tally.gap_sum[e] / static_cast<double>(tally.repeats[e]));
  }
  return median(std::move(means));
}

}  // namespace jumpsim
