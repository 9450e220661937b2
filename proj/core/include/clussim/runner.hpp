// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clussim/cluster.hpp"
#include "clussim/scenario.hpp"

namespace clussim {

struct AssertOutcome {
  Tick at = 0;
  bool pass = false;
  std::string text;    // the assertion as written
  std::string detail;  // what was actually observed
};

struct RunReport {
  bool parse_ok = true;
  std::vector<ParseIssue> issues;
  RunResult result;
  std::vector<AssertOutcome> asserts;
  std::vector<std::string> summary;  // final per-node state lines
  std::string trace_text;

  bool passed() const;
  // 0 all assertions pass, 1 assertion failure, 2 parse error, 3 livelock
  int exit_code() const;
  std::string format(bool with_summary = true) const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<Tick> until;
  bool keep_trace = false;
};

// Runs a parsed scenario against a fresh cluster. The cluster is exposed
// so callers (tests, dump subcommands) can inspect final state.
RunReport run_scenario(const Scenario& sc, const RunOptions& opt,
                       std::unique_ptr<Cluster>* out_cluster = nullptr);
RunReport run_scenario_text(const std::string& text, const RunOptions& opt,
                            std::unique_ptr<Cluster>* out_cluster = nullptr);

// Evaluates one "expect ..." assertion against the live cluster.
AssertOutcome evaluate_assertion(Cluster& c, Tick at,
                                 const std::vector<std::string>& args,
                                 const std::string& raw);

// Axis sweep: substitutes ${name} in the template for each value of the
// range ("a..b[:step]" or "v1,v2,v3") and runs each instantiation.
struct SweepResult {
  std::vector<std::pair<std::string, RunReport>> runs;
  int exit_code() const;
  std::string format() const;
};
SweepResult run_sweep(const std::string& template_text,
                      const std::string& axis_name,
                      const std::string& range_expr, const RunOptions& opt);
std::vector<std::string> expand_range(const std::string& range_expr);

}  // namespace clussim
