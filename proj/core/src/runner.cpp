// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/runner.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "clussim/vserver.hpp"

namespace clussim {

namespace {

std::int64_t want_i64(const std::string& s) {
  std::size_t used = 0;
  std::int64_t v = std::stoll(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

NodeId want_node(const std::string& s) {
  return static_cast<NodeId>(want_i64(s));
}

std::string join_args(const std::vector<std::string>& args,
                      std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < args.size(); ++i) {
    if (i > from) out += ' ';
    out += args[i];
  }
  return out;
}

NodeSet parse_ids(const std::string& csv) {
  NodeSet out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(static_cast<NodeId>(want_i64(cur)));
      cur.clear();
    }
  };
  for (char c : csv) {
    if (c == ',')
      flush();
    else
      cur += c;
  }
  flush();
  return out;
}

void exec_verb(Cluster& c, const ScenarioAction& a) {
  const auto& v = a.verb;
  const auto& args = a.args;
  auto want = [&](std::size_t n) {
    if (args.size() < n)
      throw std::invalid_argument(v + " wants " + std::to_string(n) +
                                  " arguments");
  };
  if (v == "start") {
    want(1);
    c.op_start(want_node(args[0]));
  } else if (v == "crash") {
    want(1);
    c.op_crash(want_node(args[0]));
  } else if (v == "revive") {
    want(1);
    c.op_revive(want_node(args[0]));
  } else if (v == "leave") {
    want(1);
    c.op_leave(want_node(args[0]));
  } else if (v == "evict") {
    want(1);
    c.op_evict(want_node(args[0]));
  } else if (v == "pause") {
    want(1);
    c.op_pause(want_node(args[0]));
  } else if (v == "resume") {
    want(1);
    c.op_resume(want_node(args[0]));
  } else if (v == "partition") {
    want(1);
    std::vector<NodeSet> groups;
    std::string cur;
    for (char ch : args[0] + std::string("|")) {
      if (ch == '|') {
        if (!cur.empty()) groups.push_back(parse_ids(cur));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    c.op_partition(groups);
  } else if (v == "heal") {
    c.op_heal();
  } else if (v == "dropnext") {
    want(2);
    int count = 1, iface = -1;
    for (std::size_t i = 2; i < args.size(); ++i) {
      auto eq = args[i].find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("bad dropnext option '" + args[i] + "'");
      auto key = args[i].substr(0, eq);
      auto val = static_cast<int>(want_i64(args[i].substr(eq + 1)));
      if (key == "count")
        count = val;
      else if (key == "iface")
        iface = val;
      else
        throw std::invalid_argument("bad dropnext option '" + key + "'");
    }
    c.op_dropnext(want_node(args[0]), want_node(args[1]), iface, count);
  } else if (v == "delaylink") {
    want(3);
    auto eq = args[2].find('=');
    if (eq == std::string::npos || args[2].substr(0, eq) != "extra")
      throw std::invalid_argument("delaylink wants extra=<n>");
    c.op_delaylink(want_node(args[0]), want_node(args[1]),
                   static_cast<Tick>(want_i64(args[2].substr(eq + 1))));
  } else if (v == "quorumdown") {
    c.op_quorum_available(false);
  } else if (v == "quorumup") {
    c.op_quorum_available(true);
  } else if (v == "drift") {
    want(2);
    c.op_drift(want_node(args[0]), want_i64(args[1]));
  } else if (v == "update") {
    want(3);
    c.op_update(want_node(args[0]), args[1], join_args(args, 2));
  } else if (v == "logevent") {
    want(2);
    c.op_logevent(want_node(args[0]), join_args(args, 1));
  } else if (v == "movegroup") {
    if (args.size() != 2 && args.size() != 3)
      throw std::invalid_argument("movegroup wants '<gid> [to] <id|auto|0>'");
    if (args.size() == 3 && args[1] != "to")
      throw std::invalid_argument("movegroup wants '<gid> to <id|auto>'");
    const std::string& t = args.back();
    NodeId target = (t == "auto" || t == "0") ? 0 : want_node(t);
    c.op_movegroup(args[0], target);
  } else if (v == "online") {
    want(1);
    c.op_online(args[0]);
  } else if (v == "offline") {
    want(1);
    c.op_offline(args[0]);
  } else if (v == "failres") {
    want(1);
    NodeId at = 0;
    if (args.size() >= 3 && args[1] == "on") at = want_node(args[2]);
    c.op_failres(args[0], at);
  } else if (v == "fixres") {
    want(1);
    c.op_fixres(args[0]);
  } else if (v == "probe") {
    want(2);
    c.op_probe(args[0], args[1]);
  } else {
    throw std::invalid_argument("unknown verb '" + v + "'");
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

const char* status_name(RunResult::Status s) {
  switch (s) {
    case RunResult::Status::ReachedLimit: return "limit";
    case RunResult::Status::Quiescent: return "quiescent";
    case RunResult::Status::Livelock: return "livelock";
  }
  return "?";
}

}  // namespace

AssertOutcome evaluate_assertion(Cluster& c, Tick at,
                                 const std::vector<std::string>& args,
                                 const std::string& raw) {
  AssertOutcome out;
  out.at = at;
  out.text = raw;
  try {
    if (args.empty()) {
      out.detail = "empty assertion";
      return out;
    }
    const std::string& what = args[0];

    if (what == "views-equal") {
      NodeSet members = c.live_members();
      std::string seen;
      bool equal = true;
      const MembershipView* first = nullptr;
      for (NodeId n : members) {
        const MembershipView& v = c.node(n).view();
        if (!first)
          first = &v;
        else if (!(*first == v))
          equal = false;
        seen += " n" + std::to_string(n) + "=[" + v.summary() + "]";
      }
      out.pass = equal;
      out.detail = "members=" + join_ids(members) + seen;
      return out;
    }

    if (what == "view") {
      NodeSet members = c.live_members();
      bool all = !members.empty();
      std::string seen;
      for (NodeId n : members) {
        const MembershipView& v = c.node(n).view();
        bool ok = true;
        for (std::size_t i = 1; i < args.size(); ++i) {
          auto eq = args[i].find('=');
          if (eq == std::string::npos)
            throw std::invalid_argument("view wants key=value terms");
          auto key = args[i].substr(0, eq);
          auto val = args[i].substr(eq + 1);
          if (key == "epoch")
            ok = ok && v.epoch == static_cast<Epoch>(want_i64(val));
          else if (key == "active")
            ok = ok && v.active_set == parse_ids(val);
          else if (key == "locker")
            ok = ok && v.locker == want_node(val);
          else if (key == "tb")
            ok = ok && v.tie_breaker == want_node(val);
          else if (key == "qowner")
            ok = ok && v.quorum_owner == want_node(val);
          else
            throw std::invalid_argument("unknown view term '" + key + "'");
        }
        if (!ok) {
          all = false;
          seen += " n" + std::to_string(n) + "=[" + v.summary() + "]";
        }
      }
      out.pass = all;
      out.detail = all ? "members=" + join_ids(members)
                       : "mismatch at" + seen;
      return out;
    }

    if (what == "phase") {
      if (args.size() != 3)
        throw std::invalid_argument("phase wants <node> <phase>");
      NodeId n = want_node(args[1]);
      const char* actual = to_string(c.node(n).phase());
      out.pass = args[2] == actual;
      out.detail = "actual=" + std::string(actual);
      return out;
    }

    if (what == "halted") {
      if (args.size() != 3)
        throw std::invalid_argument("halted wants <node> <reason>");
      NodeId n = want_node(args[1]);
      const auto& reason = c.node(n).membership().halt_reason();
      out.pass =
          c.node(n).phase() == NodePhase::Offline && reason == args[2];
      out.detail = "phase=" + std::string(to_string(c.node(n).phase())) +
                   " reason=" + (reason.empty() ? "<none>" : reason);
      return out;
    }

    if (what == "owner") {
      if (args.size() != 3)
        throw std::invalid_argument("owner wants <group> <node>");
      NodeId actual = c.group_owner(args[1]);
      out.pass = actual == want_node(args[2]);
      out.detail = "actual=" + std::to_string(actual);
      return out;
    }

    if (what == "resource") {
      if (args.size() != 3)
        throw std::invalid_argument("resource wants <rid> <state>");
      auto it = c.spec().resources.find(args[1]);
      if (it == c.spec().resources.end())
        throw std::invalid_argument("unknown resource '" + args[1] + "'");
      NodeId owner = c.group_owner(it->second.group);
      std::string actual =
          owner ? to_string(c.node(owner).resmgr().state_of(args[1]))
                : "offline";
      out.pass = actual == args[2];
      out.detail = "actual=" + actual + " owner=" + std::to_string(owner);
      return out;
    }

    if (what == "db") {
      if (args.size() < 3)
        throw std::invalid_argument("db wants <node|any> <key> [value]");
      const DbReplica* db = nullptr;
      if (args[1] == "any") {
        Node* m = c.any_member();
        if (!m) {
          out.detail = "no online member";
          return out;
        }
        db = &m->db();
      } else {
        db = &c.node(want_node(args[1])).db();
      }
      auto actual = db->get(args[2]);
      std::string expected = join_args(args, 3);
      out.pass = expected.empty() ? !actual.has_value()
                                  : (actual && *actual == expected);
      out.detail = "actual=" + (actual ? *actual : "<absent>");
      return out;
    }

    if (what == "db-equal") {
      NodeSet members = c.live_members();
      bool equal = true;
      std::string seen;
      std::uint64_t first = 0;
      bool have = false;
      for (NodeId n : members) {
        std::uint64_t d = c.node(n).db().digest();
        if (!have) {
          first = d;
          have = true;
        } else if (d != first) {
          equal = false;
        }
        seen += " n" + std::to_string(n) + "=" + hex64(d);
      }
      out.pass = equal;
      out.detail = "members=" + join_ids(members) + seen;
      return out;
    }

    if (what == "event") {
      if (args.size() < 2)
        throw std::invalid_argument("event wants a substring");
      Node* m = c.any_member();
      if (!m) {
        out.detail = "no online member";
        return out;
      }
      std::string needle = join_args(args, 1);
      for (const EventRecord& r : m->events().merged()) {
        if (r.body.find(needle) != std::string::npos) {
          out.pass = true;
          out.detail = "found: " + format_event(r);
          return out;
        }
      }
      out.detail = "no record contains '" + needle + "'";
      return out;
    }

    if (what == "skew") {
      if (args.size() != 2) throw std::invalid_argument("skew wants a bound");
      std::int64_t actual = c.max_pairwise_skew();
      out.pass = actual <= want_i64(args[1]);
      out.detail = "actual=" + std::to_string(actual);
      return out;
    }

    if (what == "resolve") {
      if (args.size() != 3)
        throw std::invalid_argument("resolve wants <vname> <none|node-id>");
      Node* m = c.any_member();
      ResolveResult r;
      if (m) r = resolve_vserver(c.spec(), m->db(), m->view(), args[1]);
      if (args[2] == "none") {
        out.pass = !r.available;
      } else {
        out.pass = r.available && r.host == want_node(args[2]);
      }
      out.detail = r.available ? "host=" + std::to_string(r.host) : "none";
      return out;
    }

    out.detail = "unknown assertion '" + what + "'";
    return out;
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("assertion error: ") + e.what();
    return out;
  }
}

bool RunReport::passed() const {
  if (!parse_ok) return false;
  if (result.status == RunResult::Status::Livelock) return false;
  for (const auto& a : asserts)
    if (!a.pass) return false;
  return true;
}

int RunReport::exit_code() const {
  if (!parse_ok) return 2;
  if (result.status == RunResult::Status::Livelock) return 3;
  for (const auto& a : asserts)
    if (!a.pass) return 1;
  return 0;
}

std::string RunReport::format(bool with_summary) const {
  std::ostringstream out;
  for (const auto& i : issues)
    out << "parse: line " << i.line << ": " << i.message << "\n";
  if (!parse_ok) return out.str();
  out << "run: status=" << status_name(result.status)
      << " t=" << result.end_time << " events=" << result.dispatched << "\n";
  for (const auto& a : asserts) {
    out << "t=" << a.at << (a.pass ? " PASS " : " FAIL ") << a.text;
    if (!a.pass) out << " :: " << a.detail;
    out << "\n";
  }
  if (with_summary)
    for (const auto& s : summary) out << s << "\n";
  return out.str();
}

RunReport run_scenario(const Scenario& sc, const RunOptions& opt,
                       std::unique_ptr<Cluster>* out_cluster) {
  Scenario run = sc;
  if (opt.seed) run.seed = *opt.seed;
  RunReport rep;
  auto cluster = std::make_unique<Cluster>(run);
  Cluster* c = cluster.get();
  RunReport* r = &rep;
  for (const ScenarioAction& a : run.actions) {
    c->schedule_action(a, [c, r](Tick t, const ScenarioAction& act) {
      if (act.verb == "expect") {
        AssertOutcome o = evaluate_assertion(*c, t, act.args, act.raw);
        c->kernel().trace().emit(
            t, 0, "ASSERT",
            std::string(o.pass ? "pass" : "fail") + " line=" +
                std::to_string(act.line) + " detail=" + o.detail);
        r->asserts.push_back(std::move(o));
        return;
      }
      try {
        exec_verb(*c, act);
      } catch (const std::exception& e) {
        r->asserts.push_back(
            {t, false, act.raw, std::string("action error: ") + e.what()});
      }
    });
  }
  rep.result = opt.until ? c->run_until(*opt.until) : c->run_to_quiescence();

  for (NodeId n : c->spec().defined_nodes) {
    const Node& node = c->node(n);
    std::ostringstream line;
    line << "node=" << n << " phase=" << to_string(node.phase());
    if (node.is_member()) line << " view=[" << node.view().summary() << "]";
    line << " dbver=" << node.db().version()
         << " dbdigest=" << hex64(node.db().digest());
    rep.summary.push_back(line.str());
  }
  for (const auto& [gid, gs] : c->spec().groups) {
    std::ostringstream line;
    line << "group=" << gid << " owner=" << c->group_owner(gid);
    rep.summary.push_back(line.str());
  }
  if (opt.keep_trace) rep.trace_text = c->kernel().trace().joined();
  if (out_cluster) *out_cluster = std::move(cluster);
  return rep;
}

RunReport run_scenario_text(const std::string& text, const RunOptions& opt,
                            std::unique_ptr<Cluster>* out_cluster) {
  std::vector<ParseIssue> issues;
  Scenario sc = parse_scenario(text, issues);
  if (!issues.empty()) {
    RunReport rep;
    rep.parse_ok = false;
    rep.issues = std::move(issues);
    return rep;
  }
  return run_scenario(sc, opt, out_cluster);
}

std::vector<std::string> expand_range(const std::string& range_expr) {
  std::vector<std::string> out;
  auto dots = range_expr.find("..");
  if (dots != std::string::npos) {
    std::int64_t step = 1;
    std::string rest = range_expr.substr(dots + 2);
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
      step = want_i64(rest.substr(colon + 1));
      rest.resize(colon);
    }
    std::int64_t a = want_i64(range_expr.substr(0, dots));
    std::int64_t b = want_i64(rest);
    if (step <= 0) throw std::invalid_argument("range step must be positive");
    for (std::int64_t v = a; v <= b; v += step)
      out.push_back(std::to_string(v));
    return out;
  }
  std::string cur;
  for (char ch : range_expr + std::string(",")) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

int SweepResult::exit_code() const {
  int worst = 0;
  for (const auto& [label, rep] : runs) worst = std::max(worst, rep.exit_code());
  return worst;
}

std::string SweepResult::format() const {
  std::ostringstream out;
  for (const auto& [label, rep] : runs) {
    int pass = 0;
    for (const auto& a : rep.asserts) pass += a.pass ? 1 : 0;
    out << "[" << label << "] exit=" << rep.exit_code() << " asserts=" << pass
        << "/" << rep.asserts.size() << "\n";
    for (const auto& a : rep.asserts)
      if (!a.pass) out << "  t=" << a.at << " FAIL " << a.text << " :: "
                       << a.detail << "\n";
    for (const auto& i : rep.issues)
      out << "  parse: line " << i.line << ": " << i.message << "\n";
  }
  return out.str();
}

SweepResult run_sweep(const std::string& template_text,
                      const std::string& axis_name,
                      const std::string& range_expr, const RunOptions& opt) {
  SweepResult sweep;
  std::string pattern = "${" + axis_name + "}";
  for (const std::string& value : expand_range(range_expr)) {
    std::string text = template_text;
    for (auto pos = text.find(pattern); pos != std::string::npos;
         pos = text.find(pattern, pos))
      text.replace(pos, pattern.size(), value);
    sweep.runs.emplace_back(axis_name + "=" + value,
                            run_scenario_text(text, opt));
  }
  return sweep;
}

}  // namespace clussim
