#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jumpsim/ensemble.hpp"
#include "jumpsim/experiments.hpp"

namespace ex = jumpsim::experiments;
using nlohmann::json;

namespace {

struct Options {
  std::string kind;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  bool check = false;
  int workers = -1;
  long long seed = -1;
  std::string model;
  double hbar2 = 0.0;
  long long trajectories = 0;
};

json load_config(const std::string& path) {
  if (path.empty()) return json();
  std::ifstream is(path);
  if (!is) throw ex::IoError("cannot read config " + path);
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw ex::SchemaError("config " + path + " is not valid JSON");
  return j;
}

// Shorthand flags become overrides applied after --override, so they win.
std::vector<std::string> all_overrides(const Options& o) {
  std::vector<std::string> out = o.overrides;
  if (o.workers >= 0) out.push_back("workers=" + std::to_string(o.workers));
  if (o.seed >= 0) out.push_back("seed=" + std::to_string(o.seed));
  if (o.hbar2 > 0.0) out.push_back("hbar2=" + json(o.hbar2).dump());
  if (o.trajectories > 0) out.push_back("trajectories=" + std::to_string(o.trajectories));
  if (!o.model.empty()) out.push_back("model=" + json{{"topology", o.model}}.dump());
  return out;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("kind", o.kind, "experiment kind")->required()->check(CLI::IsMember(ex::kinds()));
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--override", o.overrides, "key=value (dotted keys allowed), repeatable");
  cmd->add_option("--workers", o.workers, "OpenMP workers (0: default)");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--model", o.model, "model topology, e.g. two_level or ring");
  cmd->add_option("--hbar2", o.hbar2, "jump-rate constant hbar2");
  cmd->add_option("--trajectories", o.trajectories, "ensemble size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jump-process simulator for non-linear quantum trajectories"};
  app.require_subcommand(1);
  Options o;
  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_common(run, o);
  run->add_option("--out-dir", o.out_dir, "output directory");
  run->add_flag("--check", o.check, "exit 1 if the experiment's own check fails");
  auto* describe = app.add_subcommand("describe", "print the resolved config and cost estimate; writes nothing");
  add_common(describe, o);
  auto* list = app.add_subcommand("kinds", "list experiment kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ex::kOk : ex::kUsageError;
  }

  if (list->parsed()) {
    for (const auto& k : ex::kinds()) std::cout << k << "\n";
    return ex::kOk;
  }

  json cfg;
  try {
    cfg = ex::resolve_config(o.kind, load_config(o.config_path), all_overrides(o));
  } catch (const ex::IoError& e) {
    std::cerr << "jumpsim: " << e.what() << "\n";
    return ex::kIoError;
  } catch (const std::exception& e) {
    std::cerr << "jumpsim: invalid config: " << e.what() << "\n";
    return ex::kUsageError;
  }

  if (describe->parsed()) {
    try {
      std::cout << cfg.dump(2) << "\n";
      for (const auto& line : ex::describe(o.kind, cfg).lines) std::cout << line << "\n";
      return ex::kOk;
    } catch (const std::exception& e) {
      std::cerr << "jumpsim: " << e.what() << "\n";
      return ex::kUsageError;
    }
  }

  try {
    const std::vector<std::string> cmdline(argv, argv + argc);
    const auto r = ex::run(o.kind, cfg, o.out_dir, cmdline);
    std::cout << o.kind << ": " << r.summary << "\n";
    for (const auto& f : r.files) std::cout << "  wrote " << o.out_dir << "/" << f << "\n";
    if (o.check && !r.check_passed) {
      std::cerr << "jumpsim: check failed\n";
      return ex::kCheckFailed;
    }
    return ex::kOk;
  } catch (const ex::IoError& e) {
    std::cerr << "jumpsim: " << e.what() << "\n";
    return ex::kIoError;
  } catch (const jumpsim::EnsembleFailure& e) {
    std::cerr << "jumpsim: ensemble failed: " << e.what() << "\n";
    return ex::kEngineError;
  } catch (const std::exception& e) {
    std::cerr << "jumpsim: " << e.what() << "\n";
    return ex::kEngineError;
  }
}
