// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clussim/types.hpp"

namespace clussim {

class Node;

// One cluster-wide event. (at, origin, local_seq) is the merge key; the
// pair (origin, local_seq) identifies a record for deduplication.
struct EventRecord {
  NodeId origin = 0;
  std::uint64_t local_seq = 0;
  Tick at = 0;
  std::string body;

  bool operator==(const EventRecord&) const = default;
};

std::string format_event(const EventRecord& r);

// Replicated event log. Local records are appended and broadcast once as
// plain datagrams; replication resilience comes from every replica keeping
// what it saw, not from retransmission.
class EventLogEngine {
 public:
  explicit EventLogEngine(Node* node) : node_(node) {}

  void log_local(const std::string& body);
  void on_record(const EventRecord& r);

  // All records known here, sorted by (at, origin, local_seq).
  std::vector<EventRecord> merged() const;
  void reset();

 private:
  bool accept(const EventRecord& r);

  Node* node_;
  std::uint64_t next_local_seq_ = 1;
  std::vector<EventRecord> records_;
  std::set<std::pair<NodeId, std::uint64_t>> seen_;
};

}  // namespace clussim
