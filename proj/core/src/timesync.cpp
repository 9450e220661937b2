// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/timesync.hpp"

#include "clussim/node.hpp"

namespace clussim {

bool TimeSync::i_am_source() const {
  const NodeSet& active = node_->view().active_set;
  return !active.empty() && active.front() == node_->id();
}

void TimeSync::start() {
  if (timer_.valid()) return;
  timer_ = node_->timer(node_->cfg().time_sync_period,
                        {TimerKind::TimeSync, 0, {}}, /*background=*/true);
}

void TimeSync::stop() { node_->cancel(timer_); }

void TimeSync::on_timer(const TimerTag& tag, Tick) {
  if (tag.kind != TimerKind::TimeSync) return;
  timer_ = node_->timer(node_->cfg().time_sync_period,
                        {TimerKind::TimeSync, 0, {}}, /*background=*/true);
  if (!i_am_source()) return;
  for (NodeId peer : node_->view().active_set) {
    if (peer == node_->id()) continue;
    node_->send_datagram(peer, TimeSyncMsg{offset_}, /*background=*/true);
  }
}

void TimeSync::on_sync(NodeId from, const TimeSyncMsg& m) {
  const NodeSet& active = node_->view().active_set;
  if (active.empty() || active.front() != from) return;  // not the source
  offset_ = m.source_offset;
}

Tick TimeSync::adjusted_now() {
  std::int64_t t = static_cast<std::int64_t>(node_->now()) + offset_;
  if (t < 0) t = 0;
  Tick v = static_cast<Tick>(t);
  if (v < last_reported_) v = last_reported_;  // monotone clamp
  last_reported_ = v;
  return v;
}

void TimeSync::reset() {
  offset_ = 0;
  last_reported_ = 0;
  timer_ = EventHandle{};
}

}  // namespace clussim
