// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace clussim {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool to_i64(const std::string& s, std::int64_t& out) {
  try {
    std::size_t used = 0;
    out = std::stoll(s, &used);
    return used == s.size();
  } catch (...) {
    return false;
  }
}

bool to_f64(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (...) {
    return false;
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Parses trailing key=value tokens; anything without '=' is an error.
bool parse_kvs(const std::vector<std::string>& tokens, std::size_t first,
               std::map<std::string, std::string>& out, std::string& err) {
  for (std::size_t i = first; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos || eq == 0) {
      err = "expected key=value, got '" + tokens[i] + "'";
      return false;
    }
    out[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  return true;
}

bool parse_id_list(const std::string& csv, NodeSet& out) {
  for (const std::string& part : split(csv, ',')) {
    std::int64_t v;
    if (part.empty() || !to_i64(part, v)) return false;
    out.push_back(static_cast<NodeId>(v));
  }
  return true;
}

const std::set<std::string>& known_verbs() {
  static const std::set<std::string> v = {
      "start",   "crash",     "revive",    "leave",    "evict",
      "pause",   "resume",    "partition", "heal",     "dropnext",
      "delaylink", "quorumdown", "quorumup", "drift",  "update",
      "logevent", "movegroup", "online",    "offline", "failres",
      "fixres",  "probe",     "expect"};
  return v;
}

}  // namespace

Scenario parse_scenario(const std::string& text,
                        std::vector<ParseIssue>& issues) {
  Scenario sc;
  std::istringstream in(text);
  std::string raw_line;
  int lineno = 0;
  auto issue = [&](int line, std::string msg) {
    issues.push_back({line, std::move(msg)});
  };
  while (std::getline(in, raw_line)) {
    ++lineno;
    std::string line = raw_line;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::vector<std::string> t = tokenize(line);
    if (t.empty()) continue;

    if (t[0] == "node") {
      std::int64_t id;
      if (t.size() != 2 || !to_i64(t[1], id) || id <= 0) {
        issue(lineno, "node wants one positive id");
        continue;
      }
      insert_sorted(sc.spec.defined_nodes, static_cast<NodeId>(id));
      continue;
    }

    if (t[0] == "link") {
      std::int64_t a, b;
      if (t.size() < 3 || !to_i64(t[1], a) || !to_i64(t[2], b)) {
        issue(lineno, "link wants two node ids");
        continue;
      }
      std::map<std::string, std::string> kv;
      std::string err;
      if (!parse_kvs(t, 3, kv, err)) {
        issue(lineno, err);
        continue;
      }
      LinkState ls;
      std::int64_t n;
      double f;
      bool ok = true;
      for (const auto& [k, v] : kv) {
        if (k == "delay" && to_i64(v, n) && n >= 0)
          ls.delay = static_cast<Tick>(n);
        else if (k == "ifaces" && to_i64(v, n) && n >= 1)
          ls.ifaces = static_cast<int>(n);
        else if (k == "drop" && to_f64(v, f) && f >= 0 && f <= 1)
          ls.drop_p = f;
        else {
          issue(lineno, "bad link option '" + k + "=" + v + "'");
          ok = false;
        }
      }
      if (ok)
        sc.links[{static_cast<NodeId>(a), static_cast<NodeId>(b)}] = ls;
      continue;
    }

    if (t[0] == "config") {
      std::int64_t v;
      if (t.size() != 3 || !to_i64(t[2], v)) {
        issue(lineno, "config wants a name and an integer value");
        continue;
      }
      if (t[1] == "seed") {
        sc.seed = static_cast<std::uint64_t>(v);
        continue;
      }
      if (!sc.config.set_field(t[1], v))
        issue(lineno, "unknown config field '" + t[1] + "'");
      continue;
    }

    if (t[0] == "resource") {
      if (t.size() < 2) {
        issue(lineno, "resource wants an id");
        continue;
      }
      ResourceSpec r;
      r.rid = t[1];
      std::map<std::string, std::string> kv;
      std::string err;
      if (!parse_kvs(t, 2, kv, err)) {
        issue(lineno, err);
        continue;
      }
      bool ok = true;
      std::int64_t n;
      for (const auto& [k, v] : kv) {
        if (k == "type") {
          auto ty = resource_type_from(v);
          if (!ty) {
            issue(lineno, "unknown resource type '" + v + "'");
            ok = false;
          } else {
            r.type = *ty;
          }
        } else if (k == "group") {
          r.group = v;
        } else if (k == "deps") {
          for (const auto& d : split(v, ','))
            if (!d.empty()) r.depends_on.push_back(d);
        } else if (k == "hosts") {
          if (!parse_id_list(v, r.possible_hosts)) {
            issue(lineno, "bad hosts list '" + v + "'");
            ok = false;
          }
        } else if (k == "restarts") {
          auto parts = split(v, '/');
          std::int64_t w;
          if (parts.size() != 2 || !to_i64(parts[0], n) ||
              !to_i64(parts[1], w) || n < 0 || w < 0) {
            issue(lineno, "restarts wants <max>/<window>");
            ok = false;
          } else {
            r.restart.max_restarts = static_cast<int>(n);
            r.restart.window = static_cast<Tick>(w);
          }
        } else if (k == "escalate" && to_i64(v, n)) {
          r.restart.then_escalate = n != 0;
        } else if (k == "poll" && to_i64(v, n) && n >= 0) {
          r.poll_period = static_cast<Tick>(n);
        } else if (k == "delay" && to_i64(v, n) && n >= 0) {
          r.online_delay = static_cast<Tick>(n);
        } else if (k == "quorum" && to_i64(v, n)) {
          r.is_quorum = n != 0;
        } else {
          issue(lineno, "bad resource option '" + k + "=" + v + "'");
          ok = false;
        }
      }
      if (r.group.empty()) {
        issue(lineno, "resource '" + r.rid + "' needs group=");
        ok = false;
      }
      if (ok) sc.spec.resources[r.rid] = std::move(r);
      continue;
    }

    if (t[0] == "group") {
      if (t.size() < 2) {
        issue(lineno, "group wants an id");
        continue;
      }
      GroupSpec g;
      g.gid = t[1];
      std::map<std::string, std::string> kv;
      std::string err;
      if (!parse_kvs(t, 2, kv, err)) {
        issue(lineno, err);
        continue;
      }
      bool ok = true;
      std::int64_t n;
      for (const auto& [k, v] : kv) {
        if (k == "preferred") {
          if (!parse_id_list(v, g.preferred_owners)) {
            issue(lineno, "bad preferred list '" + v + "'");
            ok = false;
          }
        } else if (k == "failback" && to_i64(v, n)) {
          g.failback.enabled = n != 0;
        } else if (k == "min_uptime" && to_i64(v, n) && n >= 0) {
          g.failback.min_uptime = static_cast<Tick>(n);
        } else if (k == "blackout") {
          for (const auto& span : split(v, ';')) {
            auto ends = split(span, '-');
            std::int64_t a2, b2;
            if (ends.size() != 2 || !to_i64(ends[0], a2) ||
                !to_i64(ends[1], b2) || a2 < 0 || b2 < a2) {
              issue(lineno, "bad blackout span '" + span + "'");
              ok = false;
            } else {
              g.failback.blackouts.emplace_back(static_cast<Tick>(a2),
                                                static_cast<Tick>(b2));
            }
          }
        } else {
          issue(lineno, "bad group option '" + k + "=" + v + "'");
          ok = false;
        }
      }
      if (ok) sc.spec.groups[g.gid] = std::move(g);
      continue;
    }

    if (t[0] == "vserver") {
      if (t.size() < 2) {
        issue(lineno, "vserver wants a name");
        continue;
      }
      VServerSpec vs;
      vs.name = t[1];
      std::map<std::string, std::string> kv;
      std::string err;
      if (!parse_kvs(t, 2, kv, err)) {
        issue(lineno, err);
        continue;
      }
      for (const auto& [k, v] : kv) {
        if (k == "group")
          vs.group = v;
        else if (k == "ip")
          vs.ip = v;
        else
          issue(lineno, "bad vserver option '" + k + "=" + v + "'");
      }
      if (vs.group.empty()) {
        issue(lineno, "vserver '" + vs.name + "' needs group=");
        continue;
      }
      sc.spec.vservers[vs.name] = std::move(vs);
      continue;
    }

    if (t[0] == "at") {
      std::int64_t at;
      if (t.size() < 3 || !to_i64(t[1], at) || at < 0) {
        issue(lineno, "at wants a tick and a verb");
        continue;
      }
      if (!known_verbs().count(t[2])) {
        issue(lineno, "unknown verb '" + t[2] + "'");
        continue;
      }
      ScenarioAction a;
      a.at = static_cast<Tick>(at);
      a.verb = t[2];
      a.args.assign(t.begin() + 3, t.end());
      a.raw = raw_line;
      a.line = lineno;
      sc.actions.push_back(std::move(a));
      continue;
    }

    issue(lineno, "unknown directive '" + t[0] + "'");
  }

  ensure_vserver_resources(sc.spec);
  for (const std::string& problem : validate_spec(sc.spec))
    issue(0, problem);
  return sc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace clussim
