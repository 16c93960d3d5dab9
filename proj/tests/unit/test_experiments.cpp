#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "jumpsim/experiments.hpp"

using namespace jumpsim;
namespace ex = jumpsim::experiments;
using nlohmann::json;

TEST_SUITE("cli") {

TEST_CASE("defaults resolve for every kind") {
  for (const auto& k : ex::kinds()) {
    const json c = ex::resolve_config(k, json(), {});
    CHECK(c.at("kind") == k);
    CHECK(c.at("schema") == ex::kConfigSchema);
  }
  CHECK_THROWS_AS(ex::default_config("nope"), ex::SchemaError);
}

TEST_CASE("unknown keys, wrong types and bad ranges are rejected") {
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json{{"trajectorys", 10}}, {}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json{{"trajectories", "ten"}}, {}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json{{"trajectories", 2.5}}, {}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json{{"hbar2", -1.0}}, {}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json{{"kind", "measurement"}}, {}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json::array(), {}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json(), {"model.psi0=[1,0,0]"}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("cat-state", json(), {"model.n=3"}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("recurrence-scaling", json(), {"sizes=[4,8]"}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("measurement", json(), {"basis=\"sideways\""}), ex::SchemaError);
  CHECK_THROWS_AS(ex::resolve_config("ensemble", json(), {"no_equals_sign"}), ex::SchemaError);
}

TEST_CASE("file, then overrides, with integers accepted for floats") {
  const json c = ex::resolve_config("ensemble", json{{"hbar2", 1}, {"trajectories", 50}},
                                    {"trajectories=60", "model.g=2.5"});
  CHECK(c.at("hbar2").get<double>() == 1.0);
  CHECK(c.at("trajectories") == 60);
  CHECK(c.at("model").at("g") == 2.5);
  CHECK(c.at("model").at("topology") == "two_level");
}

TEST_CASE("a new topology replaces the whole model") {
  const json c = ex::resolve_config("ensemble", json(), {R"(model={"topology":"ring","n":5})"});
  CHECK(c.at("model") == json{{"topology", "ring"}, {"n", 5}});
}

TEST_CASE("config hash is stable and sensitive") {
  const json a = ex::resolve_config("ensemble", json(), {});
  CHECK(ex::config_hash(a) == ex::config_hash(ex::resolve_config("ensemble", json(), {})));
  CHECK(ex::config_hash(a).size() == 16);
  CHECK(ex::config_hash(a) != ex::config_hash(ex::resolve_config("ensemble", json(), {"seed=2"})));
}

TEST_CASE("event estimate scales with trajectories over hbar2") {
  const auto a = ex::describe("ensemble", ex::resolve_config("ensemble", json(), {"hbar2=1e-3"}));
  const auto b = ex::describe("ensemble", ex::resolve_config("ensemble", json(), {"hbar2=1e-4", "trajectories=20000"}));
  // two_level from (cos pi/6, sin pi/6): rate out of 0 is tan(pi/6)/hbar2, out of 1 is cot(pi/6)/hbar2
  const double per_traj = (0.75 * std::tan(std::numbers::pi / 6) + 0.25 / std::tan(std::numbers::pi / 6)) / 1e-3;
  CHECK(a.estimated_events == doctest::Approx(per_traj * 2.0 * 10000).epsilon(1e-9));
  CHECK(b.estimated_events == doctest::Approx(20.0 * a.estimated_events).epsilon(1e-9));
  CHECK(a.cells == 1);
  CHECK(ex::describe("cat-state", ex::resolve_config("cat-state", json(), {})).cells == 7);
}

TEST_CASE("run writes its artifacts and a manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "jumpsim_unit_run";
  std::filesystem::remove_all(dir);
  const json cfg = ex::resolve_config("oracle-check", json(), {"samples=11"});
  const auto r = ex::run("oracle-check", cfg, dir, {"jumpsim", "run"});
  CHECK(r.check_passed);
  CHECK(std::filesystem::exists(dir / "born.csv"));
  std::ifstream is(dir / "manifest.json");
  const json m = json::parse(is);
  CHECK(m.at("config_hash") == ex::config_hash(cfg));
  CHECK(m.at("outputs") == json{"born.csv"});
  std::filesystem::remove_all(dir);
}

TEST_CASE("a 3 x 4 grid plans 12 cells") {
  const json c = ex::resolve_config("recurrence-scaling", json(), {"sizes=[4,6,8]", "hbar2_ladder=[1e-5,2e-5,4e-5,8e-5]"});
  CHECK(ex::describe("recurrence-scaling", c).cells == 12);
}

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("event estimate is calibrated against a real run") {
  const auto dir = std::filesystem::temp_directory_path() / "jumpsim_unit_calibration";
  std::filesystem::remove_all(dir);
  const json c = ex::resolve_config("trajectory", json(), {"hbar2=1e-3", "t_end=10"});
  const double predicted = ex::describe("trajectory", c).estimated_events;
  ex::run("trajectory", c, dir, {});
  const double actual = double(std::count(std::istreambuf_iterator<char>(std::ifstream(dir / "events.jsonl").rdbuf()),
                                          std::istreambuf_iterator<char>(), '\n'));
  CHECK(actual > 0.5 * predicted);
  CHECK(actual < 2.0 * predicted);
  std::filesystem::remove_all(dir);
}

TEST_CASE("same config and seed give byte-identical artifacts") {
  const auto base = std::filesystem::temp_directory_path() / "jumpsim_unit_repro";
  std::filesystem::remove_all(base);
  const json c = ex::resolve_config("ensemble", json(), {"trajectories=300", "hbar2=1e-3", "workers=1"});
  ex::run("ensemble", c, base / "a", {});
  const json c2 = ex::resolve_config("ensemble", json(), {"trajectories=300", "hbar2=1e-3", "workers=3"});
  ex::run("ensemble", c2, base / "b", {});
  CHECK(slurp(base / "a" / "occupancy.csv") == slurp(base / "b" / "occupancy.csv"));
  CHECK(slurp(base / "a" / "histogram.json") == slurp(base / "b" / "histogram.json"));
  std::filesystem::remove_all(base);
}

}  // TEST_SUITE
