// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/netmon.hpp"

#include "clussim/membership.hpp"
#include "clussim/node.hpp"

namespace clussim {

void NetMonitor::start() {
  if (running_) return;
  running_ = true;
  sync_view();
  hb_timer_ = node_->timer(node_->cfg().heartbeat_period,
                           {TimerKind::Heartbeat, 0, {}}, /*background=*/true);
  check_timer_ =
      node_->timer(node_->cfg().suspicion_check_period(),
                   {TimerKind::SuspicionCheck, 0, {}}, /*background=*/true);
}

void NetMonitor::stop() {
  running_ = false;
  node_->cancel(hb_timer_);
  node_->cancel(check_timer_);
  peers_.clear();
  clean_exit_until_.clear();
  first_hb_watch_.clear();
}

void NetMonitor::sync_view() {
  if (!running_) return;
  Tick now = node_->now();
  Tick window = node_->cfg().alive_window();
  const NodeSet& active = node_->view().active_set;
  for (NodeId peer : active) {
    if (peer == node_->id() || peers_.count(peer)) continue;
    PeerState st;
    st.alive_deadline = now + window;
    int n = node_->kernel().ifaces(node_->id(), peer);
    for (int i = 0; i < n; ++i) st.iface_deadline[i] = now + window;
    peers_.emplace(peer, std::move(st));
  }
  for (auto it = peers_.begin(); it != peers_.end();) {
    if (contains(active, it->first)) {
      ++it;
    } else {
      clean_exit_until_.erase(it->first);
      it = peers_.erase(it);
    }
  }
}

void NetMonitor::mark_clean_exit(NodeId peer) {
  clean_exit_until_[peer] = node_->now() + node_->cfg().leave_grace;
}

void NetMonitor::on_heartbeat(NodeId from, int iface, const HeartbeatMsg& m,
                              Tick now) {
  auto w = first_hb_watch_.find(from);
  if (w != first_hb_watch_.end()) {
    auto fn = std::move(w->second);
    first_hb_watch_.erase(w);
    fn();
  }
  if (!running_) return;
  auto it = peers_.find(from);
  if (it == peers_.end()) {
    ++unknown_senders_;
    return;
  }
  PeerState& st = it->second;
  if (m.hb_seq > st.last_hb_seq) st.last_hb_seq = m.hb_seq;
  st.last_receipt = now;
  Tick window = node_->cfg().alive_window();
  st.alive_deadline = now + window;
  st.node_suspected = false;
  st.iface_deadline[iface] = now + window;
  st.iface_suspected[iface] = false;
}

void NetMonitor::on_timer(const TimerTag& tag, Tick now) {
  if (!running_) return;
  if (tag.kind == TimerKind::Heartbeat) {
    hb_timer_ =
        node_->timer(node_->cfg().heartbeat_period, {TimerKind::Heartbeat, 0, {}},
                     /*background=*/true);
    tick_heartbeats(now);
  } else if (tag.kind == TimerKind::SuspicionCheck) {
    check_timer_ = node_->timer(node_->cfg().suspicion_check_period(),
                                {TimerKind::SuspicionCheck, 0, {}},
                                /*background=*/true);
    check_suspicions(now);
  }
}

void NetMonitor::tick_heartbeats(Tick) {
  ++hb_seq_;
  for (const auto& [peer, st] : peers_) {
    int n = node_->kernel().ifaces(node_->id(), peer);
    for (int i = 0; i < n; ++i)
      node_->send_datagram(peer, HeartbeatMsg{hb_seq_}, /*background=*/true, i);
  }
}

void NetMonitor::check_suspicions(Tick now) {
  for (auto& [peer, st] : peers_) {
    auto ce = clean_exit_until_.find(peer);
    if (ce != clean_exit_until_.end()) {
      if (now <= ce->second) continue;
      clean_exit_until_.erase(ce);  // view never caught up; treat as silent
    }
    if (now > st.alive_deadline) {
      if (!st.node_suspected) {
        st.node_suspected = true;
        node_->trace("SUSPECT",
                     "node=" + std::to_string(peer) + " why=node-silent");
        node_->membership().on_suspicion(peer);
      }
      continue;
    }
    // The node answers on some path; a single silent interface is a path
    // fault, reported but not membership-relevant.
    for (auto& [iface, deadline] : st.iface_deadline) {
      if (now > deadline && !st.iface_suspected[iface]) {
        st.iface_suspected[iface] = true;
        node_->trace("SUSPECT", "node=" + std::to_string(peer) +
                                    " iface=" + std::to_string(iface) +
                                    " why=iface-silent");
      }
    }
  }
}

void NetMonitor::watch_first_heartbeat(NodeId peer, std::function<void()> fn) {
  first_hb_watch_[peer] = std::move(fn);
}

NodeSet NetMonitor::reachable_row(Tick now) const {
  NodeSet row;
  insert_sorted(row, node_->id());
  for (const auto& [peer, st] : peers_)
    if (now <= st.alive_deadline) insert_sorted(row, peer);
  return row;
}

bool NetMonitor::is_reachable(NodeId peer, Tick now) const {
  if (peer == node_->id()) return true;
  auto it = peers_.find(peer);
  return it != peers_.end() && now <= it->second.alive_deadline;
}

const NetMonitor::PeerState* NetMonitor::peer(NodeId id) const {
  auto it = peers_.find(id);
  return it == peers_.end() ? nullptr : &it->second;
}

}  // namespace clussim
