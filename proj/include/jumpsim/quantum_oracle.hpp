#ifndef JUMPSIM_QUANTUM_ORACLE_HPP
#define JUMPSIM_QUANTUM_ORACLE_HPP

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "jumpsim/hamiltonian.hpp"
#include "jumpsim/jump_engine.hpp"
#include "jumpsim/state_graph.hpp"

// Exact reference dynamics used as ground truth for the jump process.
namespace jumpsim {

struct WaveFunction {
  Vector amplitudes;
  double time = 0.0;
};

struct DensityVector {
  Eigen::VectorXd rho;
};

/// Per-slice eigendecompositions of H, cached for repeated evolution.
class Propagator {
 public:
  explicit Propagator(HamiltonianModel h, double hbar = 1.0);

  WaveFunction evolve(const WaveFunction& psi, double t_end) const;
  // psi sampled at each of `times` (ascending, all >= psi.time).
  std::vector<WaveFunction> path(const WaveFunction& psi, std::span<const double> times) const;

  const HamiltonianModel& hamiltonian() const { return h_; }

 private:
  Vector step(std::size_t slice, const Vector& psi, double dt) const;

  HamiltonianModel h_;
  double hbar_;
  std::vector<Eigen::SelfAdjointEigenSolver<Matrix>> eig_;
};

WaveFunction schrodinger_evolve(const HamiltonianModel& h, const WaveFunction& psi, double t_end);

/// A_nm = H_nm(t) psi'_m / psi'_n at t = psi.time, psi' regularized; tbar fields zeroed.
PotentialTable potentials_from_psi(const StateGraph& graph, const HamiltonianModel& h,
                                   const WaveFunction& psi, double epsilon_psi);

struct PotentialOdeOptions {
  double rtol = 1e-9;
  double atol = 1e-13;
  double overflow_guard = 1e12;
  double hbar = 1.0;
};

/**
 * Integrates i hbar dA_nm/dt = A_nm sum_p (A_mp - A_np) from t0 to each of
 * `times`. At Hamiltonian slice boundaries every A_nm is rescaled by
 * H_nm(new)/H_nm(old). Throws Error naming the edge if some |A| exceeds
 * the overflow guard (a zero crossing of psi).
 */
std::vector<PotentialTable> potential_ode_path(const StateGraph& graph, const HamiltonianModel& h,
                                               const PotentialTable& a0, double t0,
                                               std::span<const double> times,
                                               const PotentialOdeOptions& options = {});

PotentialTable potential_ode_evolve(const StateGraph& graph, const HamiltonianModel& h,
                                    const PotentialTable& a0, double t0, double t_end,
                                    const PotentialOdeOptions& options = {});

struct MasterEquationOptions {
  PhysicalConstants constants;
  bool rate_clamp = true;
  double epsilon_psi = 1e-12;
  double rtol = 1e-10;
  double atol = 1e-13;
  double negativity_tolerance = 1e-9;
};

/**
 * Integrates d rho_n/dt = sum_m (T_mn rho_m - T_nm rho_n) with T built from
 * the jump-rate law on potentials identified from the exact psi(t).
 */
std::vector<DensityVector> master_equation_path(const StateGraph& graph, const Propagator& prop,
                                                const WaveFunction& psi0, const DensityVector& rho0,
                                                std::span<const double> times,
                                                const MasterEquationOptions& options = {});

DensityVector master_equation_evolve(const StateGraph& graph, const Propagator& prop,
                                     const WaveFunction& psi0, const DensityVector& rho0, double t_end,
                                     const MasterEquationOptions& options = {});

/// Integral of a complex path over [t0, t1] by adaptive Gauss-Kronrod quadrature.
Complex accumulated_phase(const std::function<Complex(double)>& path, double t0, double t1,
                          double tolerance = 1e-13);

/**
 * Closed-form potentials at t: A_nm(t0) exp(-i S_m/hbar) / exp(-i S_n/hbar)
 * with S_n the integral of sum_p A_np along the exact path, times the
 * Hamiltonian ratio H_nm(t)/H_nm(t0) for time-dependent models.
 */
PotentialTable potentials_closed_form(const StateGraph& graph, const Propagator& prop,
                                      const WaveFunction& psi0, double epsilon_psi, double t,
                                      double hbar = 1.0);

Eigen::VectorXd born_probabilities(const Vector& amplitudes);

nlohmann::json wavefunction_to_json(const WaveFunction& psi);
nlohmann::json density_to_json(const DensityVector& rho, double time);

// Columns: t, then one per component.
void write_timeseries_csv(std::ostream& os, const std::string& kind, std::span<const double> times,
                          std::span<const Eigen::VectorXd> rows, const std::string& component_prefix);

}  // namespace jumpsim

#endif  // JUMPSIM_QUANTUM_ORACLE_HPP
