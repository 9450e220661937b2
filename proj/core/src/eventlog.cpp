// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/eventlog.hpp"

#include <algorithm>

#include "clussim/node.hpp"

namespace clussim {

std::string format_event(const EventRecord& r) {
  return "at=" + std::to_string(r.at) + " origin=" + std::to_string(r.origin) +
         " seq=" + std::to_string(r.local_seq) + " " + r.body;
}

void EventLogEngine::log_local(const std::string& body) {
  EventRecord r;
  r.origin = node_->id();
  r.local_seq = next_local_seq_++;
  r.at = node_->timesync().adjusted_now();
  r.body = body;
  accept(r);
  node_->trace("EVENT", "origin=" + std::to_string(r.origin) +
                            " seq=" + std::to_string(r.local_seq) + " " + body);
  for (NodeId peer : node_->view().active_set) {
    if (peer == node_->id()) continue;
    node_->send_datagram(peer, EventRecordMsg{r});
  }
}

void EventLogEngine::on_record(const EventRecord& r) { accept(r); }

bool EventLogEngine::accept(const EventRecord& r) {
  if (!seen_.insert({r.origin, r.local_seq}).second) return false;
  records_.push_back(r);
  return true;
}

std::vector<EventRecord> EventLogEngine::merged() const {
  std::vector<EventRecord> out = records_;
  std::sort(out.begin(), out.end(), [](const EventRecord& a,
                                       const EventRecord& b) {
    if (a.at != b.at) return a.at < b.at;
    if (a.origin != b.origin) return a.origin < b.origin;
    return a.local_seq < b.local_seq;
  });
  return out;
}

void EventLogEngine::reset() {
  next_local_seq_ = 1;
  records_.clear();
  seen_.clear();
}

}  // namespace clussim
