// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <map>
#include <optional>
#include <set>

#include "clussim/kernel.hpp"
#include "clussim/specs.hpp"
#include "clussim/types.hpp"

namespace clussim {

class Node;
class DbReplica;
struct MembershipView;

// Host choice for a group: the first entry of the preferred owner list
// that is active, unpaused and able to host every member; if none, the
// lowest eligible node id. `exclude` removes the pushing owner. Pure, so
// every survivor computes the same answer from the same replica.
std::optional<NodeId> select_host(const ClusterSpec& spec,
                                  const GroupSpec& group,
                                  const NodeSet& actives,
                                  const std::set<NodeId>& paused,
                                  NodeId exclude = 0);

std::set<NodeId> paused_nodes(const DbReplica& db, const NodeSet& actives);

// Per-node failover manager: places unowned groups, pushes groups away on
// escalation or operator request, pulls groups of dead nodes after a view
// change, and schedules failback to rejoined preferred owners.
class FailoverEngine {
 public:
  explicit FailoverEngine(Node* node) : node_(node) {}

  // Claim every group that currently has no living owner and whose chosen
  // host is this node. Runs on form, on join completion and after every
  // departure install (the pull path: every survivor runs it on the same
  // replica state and picks the same owners).
  void placement_pass(const char* why);

  // Operator move (target 0 picks a host, excluding the current owner) and
  // restart-policy escalation.
  bool operator_move(const GroupId& g, NodeId target);
  void escalate_push(const GroupId& g);

  // Membership hooks. departed is the node a leave or evict removed, 0 for
  // a regroup install (prune against the new view instead).
  void on_departure_install(NodeId departed);
  void on_peer_joined(NodeId who, Tick now);
  void on_take_group(NodeId from, std::uint64_t req, const TakeGroup& m);
  void on_timer(const TimerTag& tag, Tick now);

  NodeId db_owner(const GroupId& g) const;
  // Owner as the cluster sees it: the recorded owner if it is an active
  // member, otherwise nobody.
  NodeId effective_owner(const GroupId& g) const;
  const std::map<GroupId, NodeId>& last_assignment() const {
    return last_assignment_;
  }
  void reset();

 private:
  void acquire_group(const GroupId& g);
  void group_now_online(const GroupId& g);
  void push_group(const GroupId& g, NodeId target, const char* why);
  void retry_failed_push(const GroupId& g, NodeId failed);
  void write_owner(const GroupId& g, NodeId owner);
  Tick first_eligible(const FailbackPolicy& fb, Tick uptime_start) const;

  Node* node_;
  std::map<GroupId, NodeId> last_assignment_;  // chosen host per pass
  std::map<NodeId, Tick> online_since_;        // full-membership times
  std::set<GroupId> acquiring_;
};

}  // namespace clussim
