#include "jumpsim/models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace jumpsim::models {

namespace {

constexpr double kPi = std::numbers::pi;

Matrix zeros(std::size_t d) { return Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)); }

void require_qubit(const QubitRegister& reg, int q) {
  if (q < 1 || q > reg.n_qubits) throw Error("qubit index " + std::to_string(q) + " out of range");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw Error(std::string(what) + " must be > 0");
}

}  // namespace

HamiltonianModel two_level(double g) {
  require_positive(g, "coupling g");
  Matrix h = zeros(2);
  h(0, 1) = h(1, 0) = g;
  return HamiltonianModel(h);
}

HamiltonianModel ring(int n, double g) {
  if (n < 2) throw Error("ring needs n >= 2");
  require_positive(g, "coupling g");
  Matrix h = zeros(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int next = (k + 1) % n;
    h(k, next) = h(next, k) = g;
  }
  return HamiltonianModel(h);
}

HamiltonianModel complete_graph(int n, double g) {
  if (n < 2) throw Error("complete_graph needs n >= 2");
  require_positive(g, "coupling g");
  Matrix h = Matrix::Constant(n, n, Complex{g, 0.0});
  h.diagonal().setZero();
  return HamiltonianModel(h);
}

HamiltonianModel random_hermitian(int n, std::uint64_t seed, double scale, bool zero_diagonal) {
  if (n < 1) throw Error("random_hermitian needs n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale / std::sqrt(2.0));
  Matrix h = zeros(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    h(r, r) = zero_diagonal ? 0.0 : std::sqrt(2.0) * normal(rng);
    for (int c = r + 1; c < n; ++c) {
      const double re = normal(rng);
      const double im = normal(rng);
      h(r, c) = {re, im};
      h(c, r) = {re, -im};
    }
  }
  return HamiltonianModel(h);
}

Vector random_state(int n, std::uint64_t seed, double min_magnitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(min_magnitude, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  Vector psi(n);
  for (int k = 0; k < n; ++k) psi[k] = std::polar(mag(rng), phase(rng));
  return psi / psi.norm();
}

Vector uniform_state(int n) { return Vector::Constant(n, Complex{1.0 / std::sqrt(double(n)), 0.0}); }

Vector basis_state(int n, int index) {
  if (index < 0 || index >= n) throw Error("basis index out of range");
  Vector psi = Vector::Zero(n);
  psi[index] = 1.0;
  return psi;
}

std::string QubitRegister::bitstring(NodeId node) const {
  std::string s;
  for (int q = 1; q <= n_qubits; ++q) s.push_back(bit(node, q) ? '1' : '0');
  return s;
}

double GateSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& g : gates) t += g.duration;
  return t;
}

double GateSchedule::start_of(std::size_t k) const {
  double t = 0.0;
  for (std::size_t i = 0; i < k; ++i) t += gates[i].duration;
  return t;
}

HamiltonianModel schedule_hamiltonian(const GateSchedule& schedule, const Matrix& h_static,
                                      double baseline_floor) {
  std::vector<HamiltonianSlice> slices;
  double t = 0.0;
  for (const auto& g : schedule.gates) {
    require_positive(g.duration, "gate duration");
    if (g.generator.rows() != h_static.rows()) throw Error("gate '" + g.name + "' has the wrong dimension");
    slices.push_back({t, h_static + g.generator});
    t += g.duration;
  }
  slices.push_back({t, h_static});
  return HamiltonianModel(std::move(slices), baseline_floor);
}

Gate rotate_y_half(const QubitRegister& reg, int qubit, double tau) {
  require_qubit(reg, qubit);
  require_positive(tau, "tau");
  const std::size_t d = reg.dimension();
  const double a = kPi / (4.0 * tau);
  const double c = 1.0 / std::sqrt(2.0);
  Gate g{"ry_half", {qubit}, tau, zeros(d), zeros(d)};
  for (NodeId n0 = 0; n0 < d; ++n0) {
    if (reg.bit(n0, qubit) != 0) continue;
    const NodeId n1 = reg.flip(n0, qubit);
    g.generator(n0, n1) = Complex{0.0, -a};
    g.generator(n1, n0) = Complex{0.0, a};
    g.unitary(n0, n0) = c;
    g.unitary(n1, n1) = c;
    g.unitary(n0, n1) = -c;
    g.unitary(n1, n0) = c;
  }
  return g;
}

Gate fan_out_cnot(const QubitRegister& reg, int control, std::span<const int> targets, double tau) {
  require_qubit(reg, control);
  require_positive(tau, "tau");
  if (targets.empty()) throw Error("CNOT needs at least one target");
  const std::size_t d = reg.dimension();
  const double a = kPi / (2.0 * tau);
  Gate g{"cnot", {control}, tau, zeros(d), Matrix::Identity(d, d)};
  std::set<int> seen;
  for (int t : targets) {
    require_qubit(reg, t);
    if (t == control || !seen.insert(t).second) throw Error("invalid CNOT target list");
    g.targets.push_back(t);
    Matrix perm = zeros(d);
    for (NodeId n = 0; n < d; ++n) {
      if (reg.bit(n, control) == 0) {
        perm(n, n) = 1.0;
        continue;
      }
      const NodeId f = reg.flip(n, t);
      perm(f, n) = 1.0;
      g.generator(n, n) += -a;
      g.generator(n, f) += a;
    }
    g.unitary = perm * g.unitary;
  }
  if (targets.size() > 1) g.name = "cnot_fan_out";
  return g;
}

Gate controlled_not(const QubitRegister& reg, int control, int target, double tau) {
  const int t[] = {target};
  return fan_out_cnot(reg, control, t, tau);
}

CatStateCircuit cat_state_circuit(int n_qubits, double tau_gate, double baseline_floor, bool parallel_cnots) {
  if (n_qubits < 2) throw Error("cat_state_circuit needs n_qubits >= 2");
  require_positive(baseline_floor, "baseline_floor");
  CatStateCircuit c{QubitRegister{n_qubits}, {}, {}, {}};
  c.schedule.gates.push_back(rotate_y_half(c.reg, 1, tau_gate));
  if (parallel_cnots) {
    std::vector<int> targets;
    for (int q = 2; q <= n_qubits; ++q) targets.push_back(q);
    c.schedule.gates.push_back(fan_out_cnot(c.reg, 1, targets, tau_gate));
  } else {
    for (int q = 2; q <= n_qubits; ++q) c.schedule.gates.push_back(controlled_not(c.reg, 1, q, tau_gate));
  }
  for (const auto& g : c.schedule.gates) {
    if (!(g.unitary.adjoint() * g.unitary).isIdentity(1e-12)) throw Error("gate '" + g.name + "' is not unitary");
  }
  c.hamiltonian = schedule_hamiltonian(c.schedule, zeros(c.reg.dimension()), baseline_floor);
  c.psi0 = basis_state(static_cast<int>(c.reg.dimension()), 0);
  return c;
}

std::size_t ApparatusModel::dimension() const {
  return static_cast<std::size_t>(system_dim) * static_cast<std::size_t>(pointer_states) << d_env;
}

NodeId ApparatusModel::node(int s, int p, std::uint32_t env) const {
  return static_cast<NodeId>((static_cast<std::size_t>(s * pointer_states + p) << d_env) | env);
}

int ApparatusModel::system_of(NodeId node) const { return static_cast<int>(node >> d_env) / pointer_states; }
int ApparatusModel::pointer_of(NodeId node) const { return static_cast<int>(node >> d_env) % pointer_states; }
std::uint32_t ApparatusModel::env_of(NodeId node) const { return node & ((std::uint32_t{1} << d_env) - 1); }

double ApparatusModel::first_cascade_end() const {
  if (d_env == 0) return pointer_pulse_end();
  return schedule.start_of(1) + schedule.gates[1].duration;
}

Vector ApparatusModel::initial_state(const Vector& psi_sys) const {
  if (psi_sys.size() != system_dim) throw Error("system state has the wrong dimension");
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(dimension()));
  for (int s = 0; s < system_dim; ++s) psi[node(s, 0, 0)] = psi_sys[s];
  return psi;
}

ApparatusModel measurement_apparatus(const Matrix& h_sys, const Matrix& basis, int d_env, double omega_int,
                                     double baseline_floor) {
  const int ds = static_cast<int>(h_sys.rows());
  if (ds < 2) throw Error("measured system needs dimension >= 2");
  if (basis.rows() != ds || basis.cols() != ds) throw Error("measured basis must be a square matrix of system size");
  if (d_env < 0) throw Error("d_env must be >= 0");
  require_positive(omega_int, "omega_int");
  require_hermitian(h_sys, kHermitianTolerance, " (system)");
  const Matrix gram = basis.adjoint() * basis;
  if (!gram.isIdentity(1e-9)) {
    std::ostringstream os;
    os << "measured basis is not orthonormal; Gram matrix:\n" << gram;
    throw Error(os.str());
  }

  ApparatusModel app;
  app.system_dim = ds;
  app.pointer_states = ds;
  app.d_env = d_env;
  app.omega_int = omega_int;
  app.basis = basis;
  const double tau = 1.0 / omega_int;
  const std::size_t dim = app.dimension();
  const std::uint32_t env_count = std::uint32_t{1} << d_env;
  const int np = app.pointer_states;

  // Pointer pulse, active only on the e = 0 roots.
  {
    Gate g{"pointer_couple", {0}, tau, zeros(dim), Matrix::Identity(dim, dim)};
    const double a = kPi / (2.0 * tau);
    for (int m = 1; m < np; ++m) {
      const Vector phi = basis.col(m);
      for (int s = 0; s < ds; ++s) {
        for (int s2 = 0; s2 < ds; ++s2) {
          const Complex proj = phi[s] * std::conj(phi[s2]);
          if (proj == Complex{0.0, 0.0}) continue;
          // a * P_phi_m (x) (X_0m - I_0m) on the pointer.
          g.generator(app.node(s, 0, 0), app.node(s2, 0, 0)) -= a * proj;
          g.generator(app.node(s, m, 0), app.node(s2, m, 0)) -= a * proj;
          g.generator(app.node(s, 0, 0), app.node(s2, m, 0)) += a * proj;
          g.generator(app.node(s, m, 0), app.node(s2, 0, 0)) += a * proj;
        }
      }
    }
    // Unitary: sum_m P_phi_m (x) Swap(0, m) on the roots, identity elsewhere.
    for (int s = 0; s < ds; ++s) {
      for (int p = 0; p < np; ++p) g.unitary(app.node(s, p, 0), app.node(s, p, 0)) = 0.0;
    }
    for (int m = 0; m < np; ++m) {
      const Vector phi = basis.col(m);
      for (int s = 0; s < ds; ++s) {
        for (int s2 = 0; s2 < ds; ++s2) {
          const Complex proj = phi[s] * std::conj(phi[s2]);
          for (int p = 0; p < np; ++p) {
            const int swapped = p == 0 ? m : (p == m ? 0 : p);
            g.unitary(app.node(s, swapped, 0), app.node(s2, p, 0)) += proj;
          }
        }
      }
    }
    app.schedule.gates.push_back(std::move(g));
  }

  // Cascade: environment qubit j rotated by R_y(theta_p) conditioned on the pointer.
  for (int j = 1; j <= d_env; ++j) {
    Gate g{"env_copy", {j}, tau, zeros(dim), zeros(dim)};
    const std::uint32_t mask = std::uint32_t{1} << (d_env - j);
    for (int s = 0; s < ds; ++s) {
      for (int p = 0; p < np; ++p) {
        const double theta = kPi / 2.0 - kPi * p / (np - 1);
        const double a = theta / (2.0 * tau);
        const double c = std::cos(theta / 2.0);
        const double sn = std::sin(theta / 2.0);
        for (std::uint32_t e0 = 0; e0 < env_count; ++e0) {
          if (e0 & mask) continue;
          const NodeId n0 = app.node(s, p, e0);
          const NodeId n1 = app.node(s, p, e0 | mask);
          g.generator(n0, n1) = Complex{0.0, -a};
          g.generator(n1, n0) = Complex{0.0, a};
          g.unitary(n0, n0) = c;
          g.unitary(n1, n1) = c;
          g.unitary(n0, n1) = -sn;
          g.unitary(n1, n0) = sn;
        }
      }
    }
    app.schedule.gates.push_back(std::move(g));
  }

  // H_sys acts on the system index, identically for every pointer/environment configuration.
  Matrix h_static = zeros(dim);
  for (int s = 0; s < ds; ++s) {
    for (int s2 = 0; s2 < ds; ++s2) {
      if (h_sys(s, s2) == Complex{0.0, 0.0}) continue;
      for (int p = 0; p < np; ++p) {
        for (std::uint32_t e = 0; e < env_count; ++e) h_static(app.node(s, p, e), app.node(s2, p, e)) = h_sys(s, s2);
      }
    }
  }
  app.hamiltonian = schedule_hamiltonian(app.schedule, h_static, baseline_floor);
  return app;
}

SpinEstimate total_spin(const QubitRegister& reg, std::span<const NodeId> terminal_nodes) {
  if (terminal_nodes.empty()) throw Error("total_spin needs a non-empty ensemble");
  const auto n = static_cast<double>(terminal_nodes.size());
  SpinEstimate est;
  est.samples = terminal_nodes.size();
  est.sigma_z.assign(reg.n_qubits, 0.0);
  est.sigma_z_se.assign(reg.n_qubits, 0.0);
  double sum = 0.0, sum_sq = 0.0;
  for (NodeId node : terminal_nodes) {
    double m = 0.0;
    for (int q = 1; q <= reg.n_qubits; ++q) {
      const double s = reg.bit(node, q) ? -1.0 : 1.0;
      est.sigma_z[q - 1] += s;
      m += s;
    }
    sum += m;
    sum_sq += m * m;
  }
  for (int q = 0; q < reg.n_qubits; ++q) {
    est.sigma_z[q] /= n;
    est.sigma_z_se[q] = std::sqrt(std::max(0.0, 1.0 - est.sigma_z[q] * est.sigma_z[q]) / n);
  }
  est.m = sum / n;
  const double var = terminal_nodes.size() > 1 ? (sum_sq - n * est.m * est.m) / (n - 1.0) : 0.0;
  est.m_se = std::sqrt(std::max(0.0, var) / n);
  return est;
}

SpinEstimate total_spin(std::span<const std::uint64_t> up, std::span<const std::uint64_t> down) {
  if (up.size() != down.size() || up.empty()) throw Error("spin tallies must be non-empty and aligned");
  SpinEstimate est;
  est.samples = up[0] + down[0];
  if (est.samples == 0) throw Error("total_spin needs a non-empty ensemble");
  double var = 0.0;
  for (std::size_t q = 0; q < up.size(); ++q) {
    const double n = static_cast<double>(up[q] + down[q]);
    if (up[q] + down[q] != est.samples) throw Error("spin tallies disagree on the ensemble size");
    const double s = (static_cast<double>(up[q]) - static_cast<double>(down[q])) / n;
    est.sigma_z.push_back(s);
    est.sigma_z_se.push_back(std::sqrt(std::max(0.0, 1.0 - s * s) / n));
    est.m += s;
    var += est.sigma_z_se.back() * est.sigma_z_se.back();
  }
  est.m_se = std::sqrt(var);
  return est;
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error("unknown field '" + key + "' in " + where);
  }
}

Complex complex_from_json(const nlohmann::json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) return {v.at(0).get<double>(), v.at(1).get<double>()};
  throw Error("complex numbers are written as a number or [re, im]");
}

}  // namespace

ModelSpec model_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"topology", "n", "g", "seed", "scale", "zero_diagonal", "matrix", "psi0", "psi0_seed"}, "model");
  ModelSpec spec;
  const std::string topo = j.at("topology").get<std::string>();
  spec.name = topo;
  const double g = j.value("g", 1.0);
  const int n = j.value("n", 2);
  if (topo == "two_level") {
    spec.hamiltonian = two_level(g);
  } else if (topo == "ring") {
    spec.hamiltonian = ring(n, g);
  } else if (topo == "complete_graph") {
    spec.hamiltonian = complete_graph(n, g);
  } else if (topo == "random") {
    spec.hamiltonian = random_hermitian(n, j.value("seed", std::uint64_t{1}), j.value("scale", 1.0),
                                        j.value("zero_diagonal", false));
  } else if (topo == "matrix") {
    const auto& rows = j.at("matrix");
    const auto d = static_cast<Eigen::Index>(rows.size());
    Matrix h(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      if (rows.at(r).size() != rows.size()) throw Error("model matrix must be square");
      for (Eigen::Index c = 0; c < d; ++c) h(r, c) = complex_from_json(rows.at(r).at(c));
    }
    spec.hamiltonian = HamiltonianModel(h);
  } else {
    throw Error("unknown model topology '" + topo + "'");
  }
  const int dim = spec.hamiltonian.dimension();
  const auto psi = j.value("psi0", nlohmann::json("uniform"));
  if (psi.is_string()) {
    const auto s = psi.get<std::string>();
    if (s == "uniform") {
      spec.psi0 = uniform_state(dim);
    } else if (s == "random") {
      spec.psi0 = random_state(dim, j.value("psi0_seed", std::uint64_t{7}));
    } else if (s.rfind("basis:", 0) == 0) {
      spec.psi0 = basis_state(dim, std::stoi(s.substr(6)));
    } else {
      throw Error("unknown psi0 '" + s + "'");
    }
  } else {
    if (psi.size() != static_cast<std::size_t>(dim)) throw Error("psi0 has the wrong dimension");
    spec.psi0.resize(dim);
    for (int k = 0; k < dim; ++k) spec.psi0[k] = complex_from_json(psi.at(k));
    spec.psi0 /= spec.psi0.norm();
  }
  return spec;
}

}  // namespace jumpsim::models
