// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <string>

#include "clussim/types.hpp"

namespace clussim {

// Lifecycle of the cluster service on one node.
enum class NodePhase {
  Offline,
  Initializing,
  MemberSearch,
  Joining,
  QuorumDiskSearch,
  Forming,
  Online,
  Paused,
  Exiting,
  RundownComplete,
};

const char* to_string(NodePhase p);

// The membership view every active node agrees on. original_set is the
// active set as of the last stable install; it is what partition survival
// is judged against when the next regroup runs.
struct MembershipView {
  Epoch epoch = 0;
  NodeSet original_set;
  NodeSet active_set;
  NodeId tie_breaker = 0;
  NodeId locker = 0;
  // Last known quorum device owner. Kept sticky across installs until an
  // arbitration winner replaces it: survival rule 3 is judged against the
  // owner in the previous group, which may already be dead.
  NodeId quorum_owner = 0;

  bool operator==(const MembershipView&) const = default;
  std::string summary() const;
};

// Decides whether a candidate membership may survive a regroup that split
// `original`. Exactly the published rules:
//   1. the candidate holds more than half of the original members, or
//   2. it holds exactly half, has at least two members, and contains the
//      tie breaker chosen when the original membership was installed, or
//   3. the original had exactly two members, the candidate is one node,
//      and that node owned the quorum device in the previous membership.
bool survives(const NodeSet& original, const NodeSet& candidate,
              NodeId tie_breaker, NodeId prev_quorum_owner);

}  // namespace clussim
