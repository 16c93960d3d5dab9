// Serial reference vs OpenMP ensemble on the same workload; also checks the outputs agree.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "jumpsim/ensemble.hpp"
#include "jumpsim/models.hpp"

using namespace jumpsim;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble throughput, serial vs OpenMP"};
  std::size_t trajectories = 2000;
  int nodes = 8, reps = 3;
  double hbar2 = 1e-3, t_end = 1.0;
  app.add_option("--trajectories", trajectories);
  app.add_option("--nodes", nodes, "complete graph size");
  app.add_option("--hbar2", hbar2);
  app.add_option("--t-end", t_end);
  app.add_option("--reps", reps, "best of this many runs");
  CLI11_PARSE(app, argc, argv);

  const JumpModel model(models::complete_graph(nodes, 1.0));
  const Vector psi0 = models::uniform_state(nodes);
  EnsembleConfig cfg;
  cfg.n_trajectories = trajectories;
  cfg.seed = 5;
  cfg.t_end = t_end;
  cfg.snapshot_times = {t_end / 2, t_end};
  cfg.engine.constants.hbar2 = hbar2;

  EnsembleResult serial;
  const double ts = best_of(reps, [&] { serial = run_ensemble_serial(model, psi0, cfg); });
  std::printf("K%d, %zu trajectories, hbar2=%g, t_end=%g, %llu events per run, %d OpenMP threads available\n", nodes,
              trajectories, hbar2, t_end, static_cast<unsigned long long>(serial.total_events), omp_get_max_threads());
  std::printf("%-10s %10s %14s %8s %s\n", "variant", "seconds", "events/s", "speedup", "matches serial");
  std::printf("%-10s %10.3f %14.3e %8.2f %s\n", "serial", ts, serial.total_events / ts, 1.0, "-");

  const std::string ref = ensemble_to_json(serial).dump();
  bool all_match = true;
  std::vector<int> workers{1, 2, 4};
  if (omp_get_max_threads() > 4) workers.push_back(omp_get_max_threads());
  for (int w : workers) {
    cfg.workers = w;
    EnsembleResult par;
    const double tp = best_of(reps, [&] { par = run_ensemble(model, psi0, cfg); });
    const bool same = ensemble_to_json(par).dump() == ref;
    all_match = all_match && same;
    std::printf("omp x%-5d %10.3f %14.3e %8.2f %s\n", w, tp, par.total_events / tp, ts / tp, same ? "yes" : "NO");
  }
  return all_match ? 0 : 1;
}
