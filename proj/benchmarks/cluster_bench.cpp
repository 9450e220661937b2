// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include <benchmark/benchmark.h>

#include <string>

#include "clussim/cluster.hpp"
#include "clussim/runner.hpp"

namespace {

std::string boot_scenario(int nodes) {
  std::string text = "resource qdisk type=physdisk group=core quorum=1\n"
                     "group core\n";
  for (int i = 1; i <= nodes; ++i) text += "node " + std::to_string(i) + "\n";
  for (int i = 1; i <= nodes; ++i)
    text += "at " + std::to_string(i * 10) + " start " + std::to_string(i) +
            "\n";
  return text;
}

// Raw kernel throughput: a cluster exchanging heartbeats with no scenario
// traffic on top.
void BM_KernelEvents(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    std::vector<clussim::ParseIssue> issues;
    clussim::Scenario sc =
        clussim::parse_scenario(boot_scenario(static_cast<int>(state.range(0))),
                                issues);
    clussim::Cluster cluster(sc);
    for (const clussim::ScenarioAction& a : sc.actions)
      cluster.schedule_action(a, [&cluster](clussim::Tick,
                                            const clussim::ScenarioAction& act) {
        cluster.op_start(static_cast<clussim::NodeId>(std::stoi(act.args[0])));
      });
    state.ResumeTiming();
    cluster.run_until(200000);
    state.counters["events"] = static_cast<double>(cluster.kernel().dispatched());
  }
}
BENCHMARK(BM_KernelEvents)->Arg(3)->Arg(8)->Unit(benchmark::kMillisecond);

// Full boot to quiescence, the common setup cost of every test.
void BM_BootToQuiescence(benchmark::State& state) {
  for (auto _ : state) {
    clussim::RunOptions opt;
    clussim::RunReport rep = clussim::run_scenario_text(
        boot_scenario(static_cast<int>(state.range(0))), opt);
    benchmark::DoNotOptimize(rep.result.dispatched);
  }
}
BENCHMARK(BM_BootToQuiescence)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

// Crash of one member plus the regroup and failover that follow.
void BM_CrashRegroup(benchmark::State& state) {
  std::string text = boot_scenario(3) + "at 5000 crash 3\n";
  for (auto _ : state) {
    clussim::RunOptions opt;
    clussim::RunReport rep = clussim::run_scenario_text(text, opt);
    benchmark::DoNotOptimize(rep.result.dispatched);
  }
}
BENCHMARK(BM_CrashRegroup)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
