// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "clussim/config.hpp"
#include "clussim/kernel.hpp"
#include "clussim/specs.hpp"
#include "clussim/types.hpp"

namespace clussim {

// One timed action from a scenario file ("at <t> <verb> <args...>"), or a
// declaration processed before the run starts.
struct ScenarioAction {
  Tick at = 0;
  std::string verb;
  std::vector<std::string> args;
  std::string raw;
  int line = 0;
};

struct Scenario {
  std::uint64_t seed = 1;
  ClusterConfig config;
  ClusterSpec spec;
  std::map<std::pair<NodeId, NodeId>, LinkState> links;
  std::vector<ScenarioAction> actions;
};

struct ParseIssue {
  int line = 0;
  std::string message;
};

// Line-oriented scenario text. '#' starts a comment. Declarations:
//   node <id>
//   link <a> <b> [delay=<n>] [ifaces=<k>] [drop=<p>]
//   config <name> <value>
//   resource <rid> type=<t> group=<g> [deps=<r1,r2>] [hosts=<i1,i2>]
//            [restarts=<n>/<w>] [escalate=<0|1>] [poll=<n>] [delay=<n>]
//            [quorum=<0|1>]
//   group <gid> [preferred=<i1,i2>] [failback=<0|1>] [min_uptime=<n>]
//               [blackout=<a>-<b>[;<a>-<b>...]]
//   vserver <name> group=<g> [ip=<addr>]
// Timed actions:
//   at <t> start|crash|revive|leave|evict|pause|resume <id>
//   at <t> partition <ids>|<ids>[|<ids>...]        at <t> heal
//   at <t> dropnext <a> <b> [count=<n>] [iface=<k>]
//   at <t> delaylink <a> <b> extra=<n>
//   at <t> quorumdown | quorumup
//   at <t> drift <id> <delta>
//   at <t> update <id> <key> <value>
//   at <t> logevent <id> <text...>
//   at <t> movegroup <gid> to <id|auto>
//   at <t> online <rid> | offline <rid>
//   at <t> failres <rid> [on <id>] | fixres <rid>
//   at <t> probe <vname> <service>
//   at <t> expect <assertion...>
Scenario parse_scenario(const std::string& text,
                        std::vector<ParseIssue>& issues);

std::string read_file(const std::string& path);

}  // namespace clussim
