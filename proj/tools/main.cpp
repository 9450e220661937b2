// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "clussim/cluster.hpp"
#include "clussim/eventlog.hpp"
#include "clussim/runner.hpp"
#include "clussim/scenario.hpp"

namespace {

struct CommonOpts {
  std::string path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t until = 0;
  bool until_set = false;

  clussim::RunOptions run_options() const {
    clussim::RunOptions opt;
    if (seed_set) opt.seed = seed;
    if (until_set) opt.until = until;
    return opt;
  }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("scenario", o.path, "Scenario file")->required();
  cmd->add_option("--seed", o.seed, "Override the scenario seed")
      ->each([&](const std::string&) { o.seed_set = true; });
  cmd->add_option("--until", o.until,
                  "Run to a fixed tick instead of quiescence")
      ->each([&](const std::string&) { o.until_set = true; });
}

int load_or_die(const CommonOpts& o, std::string& text) {
  text = clussim::read_file(o.path);
  if (text.empty()) {
    std::cerr << "cannot read scenario '" << o.path << "'\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clussim: deterministic cluster service simulator"};
  app.require_subcommand(1);

  CommonOpts run_o, sweep_o, dumpdb_o, dumplog_o;
  std::string trace_path;
  bool quiet = false;
  std::string axis, range;
  int dump_node = 0;

  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  add_common(run, run_o);
  run->add_option("--trace", trace_path, "Write the run trace ('-': stdout)");
  run->add_flag("--quiet", quiet, "Only print failures");

  CLI::App* sweep = app.add_subcommand("sweep", "Run a scenario template "
                                                "across an axis of values");
  add_common(sweep, sweep_o);
  sweep->add_option("--axis", axis, "Axis name (${name} in the template)")
      ->required();
  sweep->add_option("--range", range, "Values: a..b[:step] or v1,v2,v3")
      ->required();

  CLI::App* dumpdb = app.add_subcommand("dumpdb", "Run, then print a node's "
                                                  "database replica");
  add_common(dumpdb, dumpdb_o);
  dumpdb->add_option("--node", dump_node, "Replica to print (0: any member)");

  CLI::App* dumplog =
      app.add_subcommand("dumplog", "Run, then print the merged event log");
  add_common(dumplog, dumplog_o);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    std::string text;
    if (int rc = load_or_die(run_o, text)) return rc;
    clussim::RunOptions opt = run_o.run_options();
    opt.keep_trace = !trace_path.empty();
    clussim::RunReport rep = clussim::run_scenario_text(text, opt);
    if (!quiet || rep.exit_code() != 0) std::cout << rep.format();
    if (!trace_path.empty() && rep.parse_ok) {
      if (trace_path == "-") {
        std::cout << rep.trace_text;
      } else {
        std::ofstream out(trace_path, std::ios::binary);
        out << rep.trace_text;
      }
    }
    return rep.exit_code();
  }

  if (sweep->parsed()) {
    std::string text;
    if (int rc = load_or_die(sweep_o, text)) return rc;
    clussim::SweepResult res =
        clussim::run_sweep(text, axis, range, sweep_o.run_options());
    std::cout << res.format();
    return res.exit_code();
  }

  if (dumpdb->parsed()) {
    std::string text;
    if (int rc = load_or_die(dumpdb_o, text)) return rc;
    std::unique_ptr<clussim::Cluster> cluster;
    clussim::RunReport rep =
        clussim::run_scenario_text(text, dumpdb_o.run_options(), &cluster);
    if (!rep.parse_ok) {
      std::cout << rep.format();
      return 2;
    }
    const clussim::Node* n = nullptr;
    if (dump_node != 0)
      n = &cluster->node(dump_node);
    else if (clussim::Node* m = cluster->any_member())
      n = m;
    if (!n) {
      std::cerr << "no online member to dump\n";
      return 1;
    }
    std::cout << "# node " << n->id() << " version " << n->db().version()
              << "\n"
              << n->db().serialize();
    return 0;
  }

  if (dumplog->parsed()) {
    std::string text;
    if (int rc = load_or_die(dumplog_o, text)) return rc;
    std::unique_ptr<clussim::Cluster> cluster;
    clussim::RunReport rep =
        clussim::run_scenario_text(text, dumplog_o.run_options(), &cluster);
    if (!rep.parse_ok) {
      std::cout << rep.format();
      return 2;
    }
    clussim::Node* m = cluster->any_member();
    if (!m) {
      std::cerr << "no online member to dump\n";
      return 1;
    }
    for (const clussim::EventRecord& r : m->events().merged())
      std::cout << clussim::format_event(r) << "\n";
    return 0;
  }

  return 0;
}
