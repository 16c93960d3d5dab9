#include "jumpsim/quantum_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "jumpsim/detail/dopri5.hpp"

namespace jumpsim {

namespace {

// Boundaries of the slices intersecting (t0, t1), as an ordered list t0 < b1 < ... < t1.
std::vector<double> segment_points(const HamiltonianModel& h, double t0, double t1) {
  std::vector<double> pts{t0};
  for (const auto& s : h.slices()) {
    if (s.t_start > t0 && s.t_start < t1) pts.push_back(s.t_start);
  }
  pts.push_back(t1);
  return pts;
}

void require_ascending(std::span<const double> times, double t0) {
  double prev = t0;
  for (double t : times) {
    if (t < prev) throw Error("requested times must be ascending and not precede the start time");
    prev = t;
  }
}

}  // namespace

Propagator::Propagator(HamiltonianModel h, double hbar) : h_(std::move(h)), hbar_(hbar) {
  eig_.reserve(h_.slices().size());
  for (const auto& s : h_.slices()) {
    require_hermitian(s.matrix);
    eig_.emplace_back(s.matrix);
    if (eig_.back().info() != Eigen::Success) throw Error("eigendecomposition failed");
  }
}

Vector Propagator::step(std::size_t slice, const Vector& psi, double dt) const {
  const auto& es = eig_[slice];
  Vector c = es.eigenvectors().adjoint() * psi;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    c[k] *= std::exp(Complex{0.0, -es.eigenvalues()[k] * dt / hbar_});
  }
  return es.eigenvectors() * c;
}

WaveFunction Propagator::evolve(const WaveFunction& psi, double t_end) const {
  if (t_end < psi.time) throw Error("schrodinger_evolve: t_end precedes psi.time");
  if (psi.amplitudes.size() != h_.dimension()) throw Error("state dimension does not match H");
  WaveFunction out = psi;
  const auto pts = segment_points(h_, psi.time, t_end);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double dt = pts[i + 1] - pts[i];
    if (dt > 0.0) out.amplitudes = step(h_.slice_index(pts[i]), out.amplitudes, dt);
  }
  out.time = t_end;
  return out;
}

std::vector<WaveFunction> Propagator::path(const WaveFunction& psi, std::span<const double> times) const {
  require_ascending(times, psi.time);
  std::vector<WaveFunction> out;
  out.reserve(times.size());
  WaveFunction cur = psi;
  for (double t : times) {
    cur = evolve(cur, t);
    out.push_back(cur);
  }
  return out;
}

WaveFunction schrodinger_evolve(const HamiltonianModel& h, const WaveFunction& psi, double t_end) {
  return Propagator(h).evolve(psi, t_end);
}

PotentialTable potentials_from_psi(const StateGraph& graph, const HamiltonianModel& h,
                                   const WaveFunction& psi, double epsilon_psi) {
  const Vector reg = regularize_amplitudes(psi.amplitudes, epsilon_psi);
  const Matrix& hm = h.at(psi.time);
  PotentialTable table;
  table.value.resize(graph.directed_count());
  table.last_jump.assign(graph.directed_count(), 0.0);
  for (EdgeIndex e = 0; e < graph.directed_count(); ++e) {
    const NodeId n = graph.source(e);
    const NodeId m = graph.target(e);
    const Complex a = hm(n, m) * reg[m] / reg[n];
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      std::ostringstream os;
      os << "non-finite potential on edge " << n << "->" << m;
      throw Error(os.str());
    }
    table.value[e] = a;
  }
  return table;
}

std::vector<PotentialTable> potential_ode_path(const StateGraph& graph, const HamiltonianModel& h,
                                               const PotentialTable& a0, double t0,
                                               std::span<const double> times,
                                               const PotentialOdeOptions& options) {
  require_ascending(times, t0);
  const std::size_t n_nodes = graph.node_count();
  const std::size_t n_edges = graph.directed_count();
  if (a0.value.size() != n_edges) throw Error("potential table does not match the graph");

  Vector y(static_cast<Eigen::Index>(n_edges));
  for (std::size_t e = 0; e < n_edges; ++e) y[e] = a0.value[e];

  Vector phi(static_cast<Eigen::Index>(n_nodes));
  auto rhs = [&](double, const Vector& a) {
    phi.setZero();
    for (EdgeIndex e = 0; e < n_edges; ++e) phi[graph.source(e)] += a[e];
    Vector d(a.size());
    const Complex minus_i_over_hbar{0.0, -1.0 / options.hbar};
    for (EdgeIndex e = 0; e < n_edges; ++e) {
      d[e] = minus_i_over_hbar * a[e] * (phi[graph.target(e)] - phi[graph.source(e)]);
    }
    return d;
  };
  auto guard = [&](double t, const Vector& a) {
    for (EdgeIndex e = 0; e < n_edges; ++e) {
      const double mag = std::abs(a[e]);
      if (!(mag <= options.overflow_guard)) {
        std::ostringstream os;
        os << "potential ODE blow-up on edge " << graph.source(e) << "->" << graph.target(e) << " at t=" << t
           << " (|A| = " << mag << "); psi passes through zero";
        throw Error(os.str());
      }
    }
  };

  detail::Dopri5Options opt;
  opt.rtol = options.rtol;
  opt.atol = options.atol;

  std::vector<PotentialTable> out;
  out.reserve(times.size());
  double t = t0;
  double h_step = 0.0;
  for (double target : times) {
    const auto pts = segment_points(h, t, target);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      if (i > 0) {
        // Crossing a slice boundary at pts[i].
        const Matrix& before = h.at(pts[i - 1]);
        const Matrix& after = h.at(pts[i]);
        for (EdgeIndex e = 0; e < n_edges; ++e) {
          const Complex hb = before(graph.source(e), graph.target(e));
          if (hb == Complex{0.0, 0.0}) throw Error("slice boundary ratio divides by a zero Hamiltonian entry");
          y[e] *= after(graph.source(e), graph.target(e)) / hb;
        }
      }
      h_step = detail::dopri5_integrate(rhs, y, pts[i], pts[i + 1], opt, guard, h_step);
    }
    t = target;
    PotentialTable table;
    table.value.assign(y.data(), y.data() + y.size());
    table.last_jump.assign(n_edges, 0.0);
    out.push_back(std::move(table));
  }
  return out;
}

PotentialTable potential_ode_evolve(const StateGraph& graph, const HamiltonianModel& h,
                                    const PotentialTable& a0, double t0, double t_end,
                                    const PotentialOdeOptions& options) {
  const double times[] = {t_end};
  return std::move(potential_ode_path(graph, h, a0, t0, times, options).front());
}

std::vector<DensityVector> master_equation_path(const StateGraph& graph, const Propagator& prop,
                                                const WaveFunction& psi0, const DensityVector& rho0,
                                                std::span<const double> times,
                                                const MasterEquationOptions& options) {
  require_ascending(times, psi0.time);
  const auto& h = prop.hamiltonian();
  const std::size_t n_edges = graph.directed_count();
  if (rho0.rho.size() != static_cast<Eigen::Index>(graph.node_count())) {
    throw Error("density dimension does not match the graph");
  }
  auto rates_at = [&](double t) {
    const WaveFunction psi = prop.evolve(psi0, t);
    const PotentialTable a = potentials_from_psi(graph, h, psi, options.epsilon_psi);
    std::vector<double> r(n_edges);
    for (EdgeIndex e = 0; e < n_edges; ++e) {
      double v = raw_rate(a.value[e], options.constants);
      if (v < 0.0) {
        if (!options.rate_clamp) throw Error("negative transition rate in the master equation");
        v = 0.0;
      }
      r[e] = v;
    }
    return r;
  };
  auto rhs = [&](double t, const Eigen::VectorXd& rho) {
    const auto r = rates_at(t);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(rho.size());
    for (EdgeIndex e = 0; e < n_edges; ++e) {
      if (graph.is_loop(e)) continue;
      const double flow = r[e] * rho[graph.source(e)];
      d[graph.source(e)] -= flow;
      d[graph.target(e)] += flow;
    }
    return d;
  };
  auto guard = [&](double t, const Eigen::VectorXd& rho) {
    for (Eigen::Index n = 0; n < rho.size(); ++n) {
      if (rho[n] < -options.negativity_tolerance) {
        std::ostringstream os;
        os << "master equation produced negative density rho_" << n << " = " << rho[n] << " at t=" << t;
        throw Error(os.str());
      }
    }
  };
  detail::Dopri5Options opt;
  opt.rtol = options.rtol;
  opt.atol = options.atol;

  std::vector<DensityVector> out;
  Eigen::VectorXd rho = rho0.rho;
  double t = psi0.time;
  double h_step = 0.0;
  for (double target : times) {
    const auto pts = segment_points(h, t, target);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      h_step = detail::dopri5_integrate(rhs, rho, pts[i], pts[i + 1], opt, guard, h_step);
    }
    t = target;
    out.push_back({rho});
  }
  return out;
}

DensityVector master_equation_evolve(const StateGraph& graph, const Propagator& prop,
                                     const WaveFunction& psi0, const DensityVector& rho0, double t_end,
                                     const MasterEquationOptions& options) {
  const double times[] = {t_end};
  return std::move(master_equation_path(graph, prop, psi0, rho0, times, options).front());
}

Complex accumulated_phase(const std::function<Complex(double)>& path, double t0, double t1,
                          double tolerance) {
  if (t1 == t0) return {0.0, 0.0};
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(path, t0, t1, 25, tolerance);
}

PotentialTable potentials_closed_form(const StateGraph& graph, const Propagator& prop,
                                      const WaveFunction& psi0, double epsilon_psi, double t,
                                      double hbar) {
  const auto& h = prop.hamiltonian();
  const std::size_t n_nodes = graph.node_count();
  PotentialTable a = potentials_from_psi(graph, h, psi0, epsilon_psi);

  // S_n = integral of sum_p A_np over [t0, t], per slice segment.
  Vector s = Vector::Zero(static_cast<Eigen::Index>(n_nodes));
  const auto pts = segment_points(h, psi0.time, t);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    for (NodeId n = 0; n < n_nodes; ++n) {
      auto node_sum = [&](double tau) {
        // Interior quadrature nodes never sit on a slice boundary.
        const WaveFunction psi = prop.evolve(psi0, tau);
        const Vector reg = regularize_amplitudes(psi.amplitudes, epsilon_psi);
        const Matrix& hm = h.at(tau);
        Complex acc{0.0, 0.0};
        for (EdgeIndex e : graph.out_edges(n)) acc += hm(n, graph.target(e)) * reg[graph.target(e)];
        return acc / reg[n];
      };
      s[n] += accumulated_phase(node_sum, pts[i], pts[i + 1]);
    }
  }
  const Matrix& h_start = h.at(psi0.time);
  const Matrix& h_now = h.at(t);
  const Complex i_over_hbar{0.0, 1.0 / hbar};
  for (EdgeIndex e = 0; e < graph.directed_count(); ++e) {
    const NodeId n = graph.source(e);
    const NodeId m = graph.target(e);
    a.value[e] *= std::exp(-i_over_hbar * s[m]) / std::exp(-i_over_hbar * s[n]);
    if (h.time_dependent()) a.value[e] *= h_now(n, m) / h_start(n, m);
  }
  return a;
}

Eigen::VectorXd born_probabilities(const Vector& amplitudes) { return amplitudes.cwiseAbs2(); }

nlohmann::json wavefunction_to_json(const WaveFunction& psi) {
  nlohmann::json amps = nlohmann::json::array();
  for (Eigen::Index n = 0; n < psi.amplitudes.size(); ++n) {
    amps.push_back({psi.amplitudes[n].real(), psi.amplitudes[n].imag()});
  }
  return {{"schema", "jumpsim.wavefunction.v1"}, {"time", psi.time}, {"amplitudes", amps}};
}

nlohmann::json density_to_json(const DensityVector& rho, double time) {
  return {{"schema", "jumpsim.density.v1"},
          {"time", time},
          {"rho", std::vector<double>(rho.rho.data(), rho.rho.data() + rho.rho.size())}};
}

void write_timeseries_csv(std::ostream& os, const std::string& kind, std::span<const double> times,
                          std::span<const Eigen::VectorXd> rows, const std::string& component_prefix) {
  if (times.size() != rows.size()) throw Error("time series rows and times differ in length");
  os << "# jumpsim-csv v1 kind=" << kind << "\n";
  os << "t";
  const Eigen::Index width = rows.empty() ? 0 : rows.front().size();
  for (Eigen::Index n = 0; n < width; ++n) os << "," << component_prefix << n;
  os << "\n";
  os.precision(17);
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << times[i];
    for (Eigen::Index n = 0; n < width; ++n) os << "," << rows[i][n];
    os << "\n";
  }
}

}  // namespace jumpsim
