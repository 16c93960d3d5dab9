#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "jumpsim/models.hpp"
#include "jumpsim/quantum_oracle.hpp"
#include "oracles.hpp"

using namespace jumpsim;

namespace {

double max_rel(const PotentialTable& a, const PotentialTable& b) {
  double worst = 0.0;
  for (std::size_t e = 0; e < a.value.size(); ++e)
    worst = std::max(worst, std::abs(a.value[e] - b.value[e]) / std::abs(b.value[e]));
  return worst;
}

Vector rabi_start(double theta) {
  Vector psi(2);
  psi << std::cos(theta), Complex{0.0, -std::sin(theta)};
  return psi;
}

}  // namespace

TEST_SUITE("quantum-oracle") {

TEST_CASE("Rabi oscillation") {
  const double g = 0.9;
  const auto h = models::two_level(g);
  const WaveFunction psi0{models::basis_state(2, 0), 0.0};
  for (double t : {0.3, 1.1, 2.7}) {
    const auto psi = schrodinger_evolve(h, psi0, t);
    CHECK(std::abs(psi.amplitudes[0] - std::cos(g * t)) < 1e-13);
    CHECK(std::abs(psi.amplitudes[1] - Complex{0.0, -std::sin(g * t)}) < 1e-13);
    CHECK(psi.time == t);
  }
  const auto half = schrodinger_evolve(h, psi0, std::numbers::pi / (2 * g));
  CHECK(std::norm(half.amplitudes[1]) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("evolution to the current time is the identity") {
  const auto h = models::random_hermitian(4, 3);
  const WaveFunction psi{models::random_state(4, 3), 1.5};
  const auto out = schrodinger_evolve(h, psi, 1.5);
  CHECK((out.amplitudes - psi.amplitudes).norm() == 0.0);
  CHECK_THROWS_AS(schrodinger_evolve(h, psi, 1.0), Error);
}

TEST_CASE("agrees with an independent Runge-Kutta-Fehlberg integrator") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto h = models::random_hermitian(5, seed);
    const Vector psi0 = models::random_state(5, seed + 10);
    const auto exact = schrodinger_evolve(h, {psi0, 0.0}, 1.0);
    const Vector ref = testing::rkf78_evolve(h.slices()[0].matrix, psi0, 1.0);
    CHECK((exact.amplitudes - ref).norm() < 1e-8);
  }
}

TEST_CASE("unitarity across slices") {
  const auto cat = models::cat_state_circuit(3, 1.0, 1e-3);
  const Propagator prop(cat.hamiltonian);
  std::vector<double> times;
  for (int k = 1; k <= 40; ++k) times.push_back(0.1 * k);
  for (const auto& psi : prop.path({cat.psi0, 0.0}, times)) CHECK(std::abs(psi.amplitudes.norm() - 1.0) < 1e-9);
}

TEST_CASE("potentials from psi") {
  const double g = 0.7;
  const auto h = models::two_level(g);
  const auto graph = build_graph(h);
  Vector eq(2);
  eq << 1.0, 1.0;
  eq /= std::sqrt(2.0);
  auto a = potentials_from_psi(graph, h, {eq, 0.4}, 1e-6);
  CHECK(std::abs(a.value[*graph.find(0, 1)] - g) < 1e-15);
  CHECK(std::abs(a.value[*graph.find(1, 0)] - g) < 1e-15);
  for (double tb : a.last_jump) CHECK(tb == 0.0);

  const double t = 0.6;
  const auto psi = schrodinger_evolve(h, {models::basis_state(2, 0), 0.0}, t);
  a = potentials_from_psi(graph, h, psi, 1e-6);
  const Complex exact{0.0, -g * std::tan(g * t)};
  CHECK(std::abs(a.value[*graph.find(0, 1)] - exact) < 1e-13 * std::abs(exact));

  const auto hr = models::random_hermitian(4, 12);
  const auto gr = build_graph(hr);
  const Vector pr = testing::zero_free_state(4, 12);
  const auto ar = potentials_from_psi(gr, hr, {pr, 0.0}, 1e-6);
  for (EdgeIndex e = 0; e < gr.directed_count(); ++e) {
    const NodeId n = gr.source(e), m = gr.target(e);
    const Complex lhs = std::conj(ar.value[e]) * std::norm(pr[n]);
    CHECK(std::abs(lhs - ar.value[gr.reverse(e)] * std::norm(pr[m])) < 1e-13);
  }
}

TEST_CASE("potential ODE keeps a stationary symmetric table constant") {
  const auto h = models::two_level(1.0);
  const auto graph = build_graph(h);
  Vector eq(2);
  eq << 1.0, 1.0;
  eq /= std::sqrt(2.0);
  const auto a0 = potentials_from_psi(graph, h, {eq, 0.0}, 1e-6);
  const auto a = potential_ode_evolve(graph, h, a0, 0.0, 5.0);
  for (std::size_t e = 0; e < a.value.size(); ++e) CHECK(std::abs(a.value[e] - a0.value[e]) < 1e-12);
}

TEST_CASE("potential ODE reproduces -i g tan(g t)") {
  const double g = 1.0, theta = std::numbers::pi / 8;
  const auto h = models::two_level(g);
  const auto graph = build_graph(h);
  const double t0 = theta / g;
  const auto a0 = potentials_from_psi(graph, h, {rabi_start(theta), t0}, 1e-6);
  std::vector<double> times;
  for (int k = 1; k <= 20; ++k) times.push_back(t0 + k * (1.4 - t0) / 20);
  const auto path = potential_ode_path(graph, h, a0, t0, times);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Complex exact{0.0, -g * std::tan(g * times[k])};
    worst = std::max(worst, std::abs(path[k].value[*graph.find(0, 1)] - exact) / std::abs(exact));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("potential ODE stops at a zero crossing of psi") {
  const auto h = models::two_level(1.0);
  const auto graph = build_graph(h);
  const auto a0 = potentials_from_psi(graph, h, {rabi_start(0.3), 0.3}, 1e-6);
  CHECK_THROWS_AS(potential_ode_evolve(graph, h, a0, 0.3, 2.0), Error);
}

TEST_CASE("Schrodinger identification and potential ODE agree on 4-node models") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto h = models::random_hermitian(4, seed, 1.0);
    const auto graph = build_graph(h);
    const WaveFunction psi0{testing::zero_free_state(4, unsigned(seed)), 0.0};
    const double t = 0.8;
    const auto direct = potentials_from_psi(graph, h, schrodinger_evolve(h, psi0, t), 1e-9);
    const auto ode = potential_ode_evolve(graph, h, potentials_from_psi(graph, h, psi0, 1e-9), 0.0, t);
    CHECK(max_rel(ode, direct) < 1e-6);
  }
}

TEST_CASE("master equation is equivariant") {
  for (std::uint64_t seed = 4; seed <= 6; ++seed) {
    const auto h = models::random_hermitian(3, seed, 1.0);
    const auto graph = build_graph(h);
    const Propagator prop(h);
    const WaveFunction psi0{testing::zero_free_state(3, unsigned(seed)), 0.0};
    std::vector<double> times{0.25, 0.5, 1.0};
    MasterEquationOptions opt;
    opt.constants.hbar2 = 1e-2;
    const auto rho = master_equation_path(graph, prop, psi0, {psi0.amplitudes.cwiseAbs2()}, times, opt);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto psi = prop.evolve(psi0, times[k]);
      CHECK((rho[k].rho - psi.amplitudes.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(std::abs(rho[k].rho.sum() - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("uniform density stays uniform on a symmetric model") {
  const auto h = models::ring(4, 1.0);
  const auto graph = build_graph(h);
  const Propagator prop(h);
  const WaveFunction psi0{models::uniform_state(4), 0.0};
  const DensityVector rho0{Eigen::VectorXd::Constant(4, 0.25)};
  const auto rho = master_equation_evolve(graph, prop, psi0, rho0, 3.0);
  CHECK((rho.rho.array() - 0.25).abs().maxCoeff() < 1e-9);
}

TEST_CASE("total probability is conserved from a non-equivariant start") {
  const auto h = models::random_hermitian(4, 9, 1.0);
  const auto graph = build_graph(h);
  const Propagator prop(h);
  const WaveFunction psi0{testing::zero_free_state(4, 9), 0.0};
  Eigen::VectorXd r0(4);
  r0 << 0.7, 0.1, 0.1, 0.1;
  MasterEquationOptions opt;
  opt.constants.hbar2 = 1e-2;
  const auto rho = master_equation_evolve(graph, prop, psi0, {r0}, 1.0, opt);
  CHECK(std::abs(rho.rho.sum() - 1.0) < 1e-9);
  CHECK(rho.rho.minCoeff() >= 0.0);
}

TEST_CASE("accumulated phase of simple paths") {
  const Complex c{0.3, -1.2};
  CHECK(std::abs(accumulated_phase([&](double) { return c; }, 0.0, 2.5) - c * 2.5) < 1e-13);
  auto path = [](double t) { return Complex{std::cos(t), t * t}; };
  const Complex fwd = accumulated_phase(path, 0.0, 1.7);
  CHECK(std::abs(fwd - Complex{std::sin(1.7), std::pow(1.7, 3) / 3}) < 1e-12);
  // the negated, reversed path cancels the forward integral
  const Complex back = accumulated_phase([&](double s) { return -path(1.7 - s); }, 0.0, 1.7);
  CHECK(std::abs(fwd + back) < 1e-12);
}

TEST_CASE("closed-form potentials match the identification") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto h = models::random_hermitian(3, seed + 20, 1.0);
    const auto graph = build_graph(h);
    const Propagator prop(h);
    const WaveFunction psi0{testing::zero_free_state(3, unsigned(seed + 20)), 0.0};
    const double t = 0.7;
    const auto closed = potentials_closed_form(graph, prop, psi0, 1e-9, t);
    const auto direct = potentials_from_psi(graph, h, prop.evolve(psi0, t), 1e-9);
    CHECK(max_rel(closed, direct) < 1e-6);
  }
}

TEST_CASE("time-dependent extension: boundary ratios keep the routes in step") {
  Matrix h0 = models::random_hermitian(3, 41, 1.0).slices()[0].matrix;
  Matrix h1 = models::random_hermitian(3, 42, 1.0).slices()[0].matrix;
  const HamiltonianModel h({{0.0, h0}, {0.4, h1}}, 0.0);
  const auto graph = build_graph(h);
  const Propagator prop(h);
  const WaveFunction psi0{testing::zero_free_state(3, 41), 0.0};
  const double t = 0.7;
  const auto direct = potentials_from_psi(graph, h, prop.evolve(psi0, t), 1e-9);
  const auto ode = potential_ode_evolve(graph, h, potentials_from_psi(graph, h, psi0, 1e-9), 0.0, t);
  CHECK(max_rel(ode, direct) < 1e-6);
  const auto closed = potentials_closed_form(graph, prop, psi0, 1e-9, t);
  CHECK(max_rel(closed, direct) < 1e-6);
}

TEST_CASE("serialization of wavefunctions, densities and time series") {
  WaveFunction psi{models::random_state(3, 2), 0.5};
  const auto j = wavefunction_to_json(psi);
  CHECK(j["schema"] == "jumpsim.wavefunction.v1");
  CHECK(j["amplitudes"].size() == 3);
  CHECK(j["amplitudes"][1][1].get<double>() == psi.amplitudes[1].imag());
  const auto d = density_to_json({psi.amplitudes.cwiseAbs2()}, 0.5);
  CHECK(d["rho"].size() == 3);

  std::vector<double> times{0.0, 0.5};
  std::vector<Eigen::VectorXd> rows{Eigen::VectorXd::Constant(2, 0.5), Eigen::VectorXd::Constant(2, 0.25)};
  std::ostringstream os;
  write_timeseries_csv(os, "born", times, rows, "p");
  CHECK(os.str() == "# jumpsim-csv v1 kind=born\nt,p0,p1\n0,0.5,0.5\n0.5,0.25,0.25\n");
}

}  // TEST_SUITE
