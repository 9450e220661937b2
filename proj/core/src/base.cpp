// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include <algorithm>
#include <sstream>

#include "clussim/config.hpp"
#include "clussim/trace.hpp"
#include "clussim/types.hpp"
#include "clussim/view.hpp"

namespace clussim {

bool contains(const NodeSet& s, NodeId n) {
  return std::binary_search(s.begin(), s.end(), n);
}

void insert_sorted(NodeSet& s, NodeId n) {
  auto it = std::lower_bound(s.begin(), s.end(), n);
  if (it == s.end() || *it != n) s.insert(it, n);
}

void erase_value(NodeSet& s, NodeId n) {
  auto it = std::lower_bound(s.begin(), s.end(), n);
  if (it != s.end() && *it == n) s.erase(it);
}

NodeSet intersect(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

NodeSet subtract(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

std::string join_ids(const NodeSet& s, char sep) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out.push_back(sep);
    out += std::to_string(s[i]);
  }
  return out;
}

void Trace::emit(Tick t, NodeId node, std::string_view kind,
                 std::string detail) {
  std::string line = "t=" + std::to_string(t) +
                     " node=" + std::to_string(node) + " kind=";
  line.append(kind);
  line += " detail=";
  line += detail;
  lines_.push_back(std::move(line));
}

std::vector<std::string> Trace::with_kind(std::string_view kind) const {
  std::string needle = " kind=";
  needle.append(kind);
  needle += " ";
  std::vector<std::string> out;
  for (const auto& l : lines_)
    if (l.find(needle) != std::string::npos) out.push_back(l);
  return out;
}

std::string Trace::joined() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

std::string trace_field(const std::string& line, std::string_view key) {
  std::string needle(key);
  needle += "=";
  // match at start or after a space so "gseq=" never matches "xgseq="
  std::size_t pos = 0;
  while (true) {
    pos = line.find(needle, pos);
    if (pos == std::string::npos) return "";
    if (pos == 0 || line[pos - 1] == ' ') break;
    ++pos;
  }
  std::size_t start = pos + needle.size();
  std::size_t end = line.find(' ', start);
  return line.substr(start, end == std::string::npos ? end : end - start);
}

bool ClusterConfig::set_field(const std::string& name, std::int64_t value) {
  if (name == "base_delay") base_delay = static_cast<Tick>(value);
  else if (name == "heartbeat_period") heartbeat_period = static_cast<Tick>(value);
  else if (name == "rpc_timeout") rpc_timeout = static_cast<Tick>(value);
  else if (name == "member_search_wait") member_search_wait = static_cast<Tick>(value);
  else if (name == "form_retry_limit") form_retry_limit = static_cast<int>(value);
  else if (name == "join_grace") join_grace = static_cast<Tick>(value);
  else if (name == "leave_grace") leave_grace = static_cast<Tick>(value);
  else if (name == "regroup_status_period") regroup_status_period = static_cast<Tick>(value);
  else if (name == "regroup_stage1_wait") regroup_stage1_wait = static_cast<Tick>(value);
  else if (name == "regroup_stage_timeout") regroup_stage_timeout = static_cast<Tick>(value);
  else if (name == "regroup_restart_limit") regroup_restart_limit = static_cast<int>(value);
  else if (name == "defense_period") defense_period = static_cast<Tick>(value);
  else if (name == "challenge_wait") challenge_wait = static_cast<Tick>(value);
  else if (name == "arbitration_retry") arbitration_retry = static_cast<Tick>(value);
  else if (name == "checkpoint_interval") checkpoint_interval = static_cast<int>(value);
  else if (name == "monitor_poll_period") monitor_poll_period = static_cast<Tick>(value);
  else if (name == "resource_online_delay") resource_online_delay = static_cast<Tick>(value);
  else if (name == "resource_offline_delay") resource_offline_delay = static_cast<Tick>(value);
  else if (name == "time_sync_period") time_sync_period = static_cast<Tick>(value);
  else if (name == "skew_bound") skew_bound = value;
  else if (name == "event_ceiling") event_ceiling = static_cast<std::uint64_t>(value);
  else if (name == "quiescence_window") quiescence_window = static_cast<Tick>(value);
  else return false;
  return true;
}

const char* to_string(NodePhase p) {
  switch (p) {
    case NodePhase::Offline: return "offline";
    case NodePhase::Initializing: return "initializing";
    case NodePhase::MemberSearch: return "member-search";
    case NodePhase::Joining: return "joining";
    case NodePhase::QuorumDiskSearch: return "quorum-disk-search";
    case NodePhase::Forming: return "forming";
    case NodePhase::Online: return "online";
    case NodePhase::Paused: return "paused";
    case NodePhase::Exiting: return "exiting";
    case NodePhase::RundownComplete: return "rundown-complete";
  }
  return "?";
}

std::string MembershipView::summary() const {
  std::string s = "epoch=" + std::to_string(epoch) +
                  " active=" + join_ids(active_set) +
                  " tb=" + std::to_string(tie_breaker) +
                  " locker=" + std::to_string(locker) +
                  " qowner=" + std::to_string(quorum_owner);
  return s;
}

bool survives(const NodeSet& original, const NodeSet& candidate,
              NodeId tie_breaker, NodeId prev_quorum_owner) {
  const std::size_t n = original.size();
  const std::size_t c = candidate.size();
  if (2 * c > n) return true;  // rule 1: strict majority
  if (2 * c == n && c >= 2 && contains(candidate, tie_breaker))
    return true;  // rule 2: exact half holding the tie breaker
  if (n == 2 && c == 1 && candidate[0] == prev_quorum_owner)
    return true;  // rule 3: survivor of a pair owned the quorum device
  return false;
}

}  // namespace clussim
