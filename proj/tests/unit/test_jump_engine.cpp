#include <doctest.h>

#include <cmath>
#include <numbers>

#include "jumpsim/jump_engine.hpp"
#include "jumpsim/models.hpp"
#include "oracles.hpp"

using namespace jumpsim;

namespace {

EngineConfig config_with(double hbar2) {
  EngineConfig c;
  c.constants.hbar2 = hbar2;
  return c;
}

Vector equal_pair() {
  Vector psi(2);
  psi << 1.0, 1.0;
  return psi / std::sqrt(2.0);
}

// Path graph 0 - 1 - 2.
HamiltonianModel path3() {
  Matrix h = Matrix::Zero(3, 3);
  h(0, 1) = h(1, 0) = 1.0;
  h(1, 2) = h(2, 1) = 0.7;
  return HamiltonianModel(h);
}

JumpEvent event_on(const JumpModel& model, NodeId from, NodeId to, double at, double now) {
  JumpEvent ev;
  ev.from = from;
  ev.to = to;
  ev.at = at;
  ev.waiting_time = at - now;
  ev.edge = *model.graph().find(from, to);
  return ev;
}

}  // namespace

TEST_SUITE("jump-engine") {

TEST_CASE("rate law examples") {
  PhysicalConstants c;
  c.hbar2 = 1e-3;
  CHECK(raw_rate({0.4, 0.0}, c) == doctest::Approx(400.0).epsilon(1e-14));
  CHECK(raw_rate({0.0, 0.4}, c) == doctest::Approx(999.0 * 0.4).epsilon(1e-14));
  c.hbar2 = std::numeric_limits<double>::infinity();
  CHECK(raw_rate({0.0, -0.4}, c) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("strict mode reports negative rates and clamping zeroes them") {
  const JumpModel model(models::two_level(1.0));
  Vector psi(2);
  psi << 1.0, Complex{0.0, 1.0};
  psi /= std::sqrt(2.0);
  auto st = make_trajectory(model, 0, psi, 1e-6, make_rng(1, 0));
  CHECK(st.potentials.value[*model.graph().find(0, 1)] == Complex{0.0, 1.0});
  auto cfg = config_with(10.0);
  cfg.rate_clamp = false;
  CHECK_THROWS_AS(jump_rates(st, model, cfg), NegativeRate);
  cfg.rate_clamp = true;
  const auto rates = jump_rates(st, model, cfg);
  REQUIRE(rates.size() == 1);
  CHECK(rates[0].rate == 0.0);
  CHECK_THROWS_AS(sample_next_jump(st, rates, model), FrozenTrajectory);
}

TEST_CASE("single edge: destination certain, mean wait 1/r") {
  const JumpModel model(models::two_level(1.0));
  auto st = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(3, 0));
  const double r = 2.5;
  const std::vector<EdgeRate> rates{{*model.graph().find(0, 1), r}};
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto ev = sample_next_jump(st, rates, model);
    CHECK_FALSE(ev.to != 1);
    CHECK_FALSE(!(ev.waiting_time > 0.0));
    sum += ev.waiting_time;
  }
  const double mean = sum / n, sigma = 1.0 / r / std::sqrt(double(n));
  CHECK(std::abs(mean - 1.0 / r) < 3.0 * sigma);
}

TEST_CASE("two edges with rates r and 3r split 1:3") {
  const JumpModel model(path3());
  auto st = make_trajectory(model, 1, models::uniform_state(3), 1e-6, make_rng(4, 0));
  const std::vector<EdgeRate> rates{{*model.graph().find(1, 0), 1.0}, {*model.graph().find(1, 2), 3.0}};
  const int n = 100000;
  int to0 = 0;
  for (int i = 0; i < n; ++i) to0 += sample_next_jump(st, rates, model).to == 0;
  const double p = 0.25, sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(double(to0) / n - p) < 3.0 * sigma);
}

TEST_CASE("sampling is deterministic for a fixed seed and state") {
  const JumpModel model(models::complete_graph(4, 1.0));
  const auto st = make_trajectory(model, 2, models::random_state(4, 5), 1e-6, make_rng(9, 3));
  const auto cfg = config_with(1e-3);
  auto a = st, b = st;
  const auto ra = jump_rates(a, model, cfg);
  const auto ea = sample_next_jump(a, ra, model);
  const auto eb = sample_next_jump(b, jump_rates(b, model, cfg), model);
  CHECK(ea.to == eb.to);
  CHECK(ea.at == eb.at);
  CHECK(ea.rate_total == eb.rate_total);
}

TEST_CASE("loop jumps leave every potential bitwise unchanged") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const JumpModel model(models::random_hermitian(4, seed, 1.0));
    auto st = make_trajectory(model, 2, testing::zero_free_state(4, unsigned(seed)), 1e-6, make_rng(seed, 0));
    const auto before = st.potentials.value;
    const auto ev = event_on(model, 2, 2, 0.37, 0.0);
    for (bool td : {false, true}) {
      auto s = st;
      auto cfg = config_with(1e-3);
      cfg.time_dependent_rule = td;
      apply_jump(s, ev, model, cfg);
      CHECK(s.potentials.value == before);
      CHECK(s.node == 2);
      CHECK(s.potentials.last_jump[ev.edge] == 0.37);
    }
  }
}

TEST_CASE("first jump on a two-node model") {
  const double g = 1.0;
  const JumpModel model(models::two_level(g));
  Vector psi(2);
  psi << 0.6, Complex{0.0, 0.8};
  auto st = make_trajectory(model, 0, psi, 1e-6, make_rng(1, 0));
  const auto e01 = *model.graph().find(0, 1), e10 = *model.graph().find(1, 0);
  const Complex a01 = st.potentials.value[e01], a10 = st.potentials.value[e10];
  const double t1 = 0.21;
  apply_jump(st, event_on(model, 0, 1, t1, 0.0), model, config_with(1e-3));
  const Complex i{0.0, 1.0};
  CHECK(std::abs(st.potentials.value[e01] - a01 * std::exp(-i * a10 * t1)) < 1e-15);
  CHECK(std::abs(st.potentials.value[e10] - a10 * std::exp(i * a10 * t1)) < 1e-15);
  CHECK(st.potentials.last_jump[e01] == t1);
  CHECK(st.potentials.last_jump[e10] == 0.0);
  CHECK(st.node == 1);
  CHECK(st.time == t1);
}

TEST_CASE("exponent uses pre-update values including the traversed edge") {
  // Jump 0->1 on a triangle with a loop at 1: Phi is the sum over 1->0, 1->1, 1->2.
  Matrix h = models::complete_graph(3, 1.0).slices()[0].matrix;
  h(1, 1) = 0.4;
  const JumpModel model{HamiltonianModel(h)};
  auto st = make_trajectory(model, 0, testing::zero_free_state(3, 2), 1e-6, make_rng(1, 0));
  const auto& g = model.graph();
  Complex phi{0.0, 0.0};
  for (EdgeIndex f : g.out_edges(1)) phi += st.potentials.value[f];
  const auto e = *g.find(0, 1), r = *g.find(1, 0);
  const Complex a = st.potentials.value[e], b = st.potentials.value[r];
  apply_jump(st, event_on(model, 0, 1, 0.5, 0.0), model, config_with(1e-3));
  const Complex i{0.0, 1.0};
  CHECK(std::abs(st.potentials.value[e] - a * std::exp(-i * phi * 0.5)) < 1e-14);
  CHECK(std::abs(st.potentials.value[r] - b * std::exp(i * phi * 0.5)) < 1e-14);
}

TEST_CASE("pairwise products are conserved along a trajectory") {
  // seed 11: |psi_n(t)|^2 stays above 0.07 on [0, 10]
  const JumpModel model(models::random_hermitian(4, 11, 1.0));
  auto st = make_trajectory(model, 0, testing::zero_free_state(4, 11), 1e-6, make_rng(21, 0));
  const auto& g = model.graph();
  std::vector<Complex> p0(g.directed_count());
  for (EdgeIndex e = 0; e < g.directed_count(); ++e) p0[e] = st.potentials.value[e] * st.potentials.value[g.reverse(e)];
  double worst = 0.0;
  const auto res = evolve_trajectory(st, model, 5.0, config_with(1e-3), [&](const JumpEvent&, const TrajectoryState& s) {
    for (EdgeIndex e = 0; e < g.directed_count(); ++e) {
      const Complex p = s.potentials.value[e] * s.potentials.value[g.reverse(e)];
      worst = std::max(worst, std::abs(p - p0[e]) / std::abs(p0[e]));
    }
  });
  CHECK(res.events > 1000);
  CHECK(worst < 1e-10);
}

TEST_CASE("evolving to the current time is a no-op") {
  const JumpModel model(models::two_level(1.0));
  auto st = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(1, 0), 2.0);
  const auto before = st.potentials.value;
  const auto res = evolve_trajectory(st, model, 2.0, config_with(1e-3));
  CHECK(res.events == 0);
  CHECK(st.time == 2.0);
  CHECK(st.node == 0);
  CHECK(st.potentials.value == before);
  CHECK_THROWS_AS(evolve_trajectory(st, model, 1.0, config_with(1e-3)), Error);
}

TEST_CASE("event count matches a calibration run and the rate estimate") {
  const JumpModel model(models::two_level(1.0));
  const auto cfg = config_with(1e-3);
  auto calib = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(100, 0));
  const double expected = double(evolve_trajectory(calib, model, 10.0, cfg).events);
  // sum |A| / hbar2 over the single out-edge, times the horizon
  CHECK(expected == doctest::Approx(1.0 / 1e-3 * 10.0).epsilon(0.2));
  for (std::uint64_t k = 1; k <= 3; ++k) {
    auto st = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(200, k));
    const double n = double(evolve_trajectory(st, model, 10.0, cfg).events);
    CHECK(std::abs(n - expected) < 0.2 * expected);
  }
}

TEST_CASE("time-averaged occupancy of a stationary superposition") {
  const JumpModel model(models::two_level(1.0));
  auto st = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(5, 0));
  double in0 = 0.0, last = 0.0;
  NodeId node = 0;
  evolve_trajectory(st, model, 10.0, config_with(1e-4), [&](const JumpEvent& ev, const TrajectoryState&) {
    if (node == 0) in0 += ev.at - last;
    last = ev.at;
    node = ev.to;
  });
  if (node == 0) in0 += 10.0 - last;
  CHECK(std::abs(in0 / 10.0 - 0.5) < 0.05 * 0.5);
}

TEST_CASE("truncation carries the partial log") {
  const JumpModel model(models::two_level(1.0));
  auto st = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(1, 0));
  auto cfg = config_with(1e-3);
  cfg.max_events = 10;
  cfg.record_events = true;
  try {
    evolve_trajectory(st, model, 10.0, cfg);
    FAIL("expected truncation");
  } catch (const TruncationError& e) {
    CHECK(e.partial_log().size() == 10);
    CHECK(st.events == 10);
  }
  cfg.max_events = 0;
  CHECK_THROWS_AS(evolve_trajectory(st, model, 10.0, cfg), Error);
}

TEST_CASE("identical seeds give identical event logs") {
  const JumpModel model(models::random_hermitian(4, 11, 1.0));
  const Vector psi = testing::zero_free_state(4, 11);
  auto cfg = config_with(1e-3);
  cfg.record_events = true;
  auto a = make_trajectory(model, 1, psi, 1e-6, make_rng(77, 4));
  auto b = make_trajectory(model, 1, psi, 1e-6, make_rng(77, 4));
  const auto la = evolve_trajectory(a, model, 3.0, cfg).log;
  const auto lb = evolve_trajectory(b, model, 3.0, cfg).log;
  REQUIRE(la.size() == lb.size());
  bool same = true;
  for (std::size_t i = 0; i < la.size(); ++i)
    same = same && la[i].from == lb[i].from && la[i].to == lb[i].to && la[i].at == lb[i].at;
  CHECK(same);
  CHECK(a.potentials.value == b.potentials.value);
  auto c = make_trajectory(model, 1, psi, 1e-6, make_rng(78, 4));
  CHECK(evolve_trajectory(c, model, 3.0, cfg).log.size() != la.size());
}

TEST_CASE("event JSON record") {
  JumpEvent ev{3, 4, 1.5, 0.25, 12.0, 0};
  const auto j = event_to_json(ev);
  CHECK(j["from"] == 3);
  CHECK(j["to"] == 4);
  CHECK(j["t"] == 1.5);
  CHECK(j["dt"] == 0.25);
  CHECK(j["Lambda"] == 12.0);
}

TEST_CASE("recurrence intervals of a hand-written log") {
  const JumpModel model(models::two_level(1.0));
  std::vector<JumpEvent> log{{0, 1, 1.0}, {1, 0, 2.0}, {0, 1, 3.0}, {1, 0, 5.0}, {0, 1, 7.0}};
  const auto gaps = recurrence_intervals(model.graph(), log);
  CHECK(gaps[*model.graph().find(0, 1)] == std::vector<double>{2.0, 4.0});
  CHECK(gaps[*model.graph().find(1, 0)] == std::vector<double>{3.0});
  // medians of means 3 and 3
  CHECK(recurrence_time(gaps) == 3.0);
  CHECK(std::isnan(recurrence_time(std::vector<std::vector<double>>(2))));
}

TEST_CASE("online recurrence tally matches the event log") {
  const JumpModel model(models::complete_graph(4, 1.0));
  auto cfg = config_with(1e-3);
  cfg.record_events = true;
  cfg.track_recurrence = true;
  auto st = make_trajectory(model, 0, models::uniform_state(4), 1e-6, make_rng(2, 0));
  const auto log = evolve_trajectory(st, model, 1.0, cfg).log;
  CHECK(recurrence_time(st.recurrence) == doctest::Approx(recurrence_time(recurrence_intervals(model.graph(), log))));
}

TEST_CASE("recurrence time is proportional to hbar2 on K4") {
  const JumpModel model(models::complete_graph(4, 1.0));
  auto measure = [&](double hbar2) {
    auto cfg = config_with(hbar2);
    cfg.track_recurrence = true;
    double sum = 0.0;
    for (std::uint64_t k = 0; k < 8; ++k) {
      auto st = make_trajectory(model, NodeId(k % 4), models::uniform_state(4), 1e-6, make_rng(31, k));
      evolve_trajectory(st, model, 2.0, cfg);
      sum += recurrence_time(st.recurrence);
    }
    return sum / 8.0;
  };
  const double ratio = measure(2e-3) / measure(1e-3);
  CHECK(std::abs(ratio - 2.0) < 0.2 * 2.0);
}

TEST_CASE("post-jump potentials depend on the jump history") {
  const JumpModel model(path3());
  const Vector psi = testing::zero_free_state(3, 4);
  const auto cfg = config_with(1e-3);
  auto a = make_trajectory(model, 1, psi, 1e-6, make_rng(1, 0));
  auto b = a;
  apply_jump(a, event_on(model, 1, 0, 0.5, 0.0), model, cfg);
  apply_jump(a, event_on(model, 0, 1, 1.0, 0.5), model, cfg);
  apply_jump(b, event_on(model, 1, 2, 0.5, 0.0), model, cfg);
  apply_jump(b, event_on(model, 2, 1, 1.0, 0.5), model, cfg);
  REQUIRE(a.node == b.node);
  REQUIRE(a.time == b.time);
  CHECK(a.potentials.last_jump != b.potentials.last_jump);
  apply_jump(a, event_on(model, 1, 0, 2.0, 1.0), model, cfg);
  apply_jump(b, event_on(model, 1, 0, 2.0, 1.0), model, cfg);
  const auto e = *model.graph().find(1, 0);
  CHECK(std::abs(a.potentials.value[e] - b.potentials.value[e]) > 1e-3);
}

TEST_CASE("time-dependent rule rescales the reverse potential by the H ratio") {
  Matrix h0 = Matrix::Zero(2, 2), h1 = Matrix::Zero(2, 2);
  h0(0, 1) = h0(1, 0) = 0.5;
  h1(0, 1) = h1(1, 0) = 2.0;
  const JumpModel model(HamiltonianModel({{0.0, h0}, {1.0, h1}}, 0.0));
  auto st = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(1, 0));
  const auto e01 = *model.graph().find(0, 1), e10 = *model.graph().find(1, 0);
  const Complex a01 = st.potentials.value[e01], a10 = st.potentials.value[e10];
  auto cfg = config_with(1e-3);
  cfg.time_dependent_rule = true;
  apply_jump(st, event_on(model, 0, 1, 1.5, 0.0), model, cfg);
  const Complex i{0.0, 1.0};
  CHECK(std::abs(st.potentials.value[e01] - a01 * std::exp(-i * a10 * 1.5)) < 1e-14);
  CHECK(std::abs(st.potentials.value[e10] - a10 * std::exp(i * a10 * 1.5) * 4.0) < 1e-13);
}

TEST_CASE("zero Hamiltonian entry in the ratio is an error") {
  Matrix h0 = Matrix::Zero(2, 2), h1 = Matrix::Zero(2, 2);
  h1(0, 1) = h1(1, 0) = 1.0;
  const JumpModel model(HamiltonianModel({{0.0, h0}, {1.0, h1}}, 0.0));
  auto st = make_trajectory(model, 0, equal_pair(), 1e-6, make_rng(1, 0));
  auto cfg = config_with(1e-3);
  cfg.time_dependent_rule = true;
  CHECK_THROWS_AS(apply_jump(st, event_on(model, 0, 1, 1.5, 0.0), model, cfg), Error);
}

TEST_CASE("potentials approach the Schrodinger identification as hbar2 shrinks") {
  const double g = 1.0, theta = std::numbers::pi / 8;
  const JumpModel model(models::two_level(g));
  Vector psi(2);
  psi << std::cos(theta), Complex{0.0, -std::sin(theta)};
  const double t0 = theta / g, t1 = 1.2;
  const auto e01 = *model.graph().find(0, 1);
  std::vector<double> errs;
  for (double hbar2 : {1e-2, 1e-3, 1e-4}) {
    auto st = make_trajectory(model, 0, psi, 1e-6, make_rng(1, 0), t0);
    double worst = 0.0;
    for (int k = 1; k <= 200; ++k) {
      const double t = t0 + k * (t1 - t0) / 200;
      evolve_trajectory(st, model, t, config_with(hbar2));
      const Complex exact{0.0, -g * std::tan(g * t)};
      worst = std::max(worst, std::abs(st.potentials.value[e01] - exact) / std::abs(exact));
    }
    errs.push_back(worst);
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
}

}  // TEST_SUITE
