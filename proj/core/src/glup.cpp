// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/glup.hpp"

#include <stdexcept>

#include "clussim/membership.hpp"
#include "clussim/node.hpp"

namespace clussim {

NodeSet update_order(const NodeSet& actives, NodeId locker) {
  NodeSet order;
  order.reserve(actives.size());
  for (NodeId n : actives)
    if (n >= locker) order.push_back(n);
  for (NodeId n : actives)
    if (n < locker) order.push_back(n);
  return order;
}

bool GlupEngine::i_am_locker() const {
  return current_locker() == node_->id();
}

NodeId GlupEngine::current_locker() const {
  return node_->membership().effective_locker();
}

std::vector<Gseq> GlupEngine::installed_gseqs() const {
  std::vector<Gseq> out;
  out.reserve(installed_log_.size());
  for (const auto& [g, p] : installed_log_) out.push_back(g);
  return out;
}

bool GlupEngine::idle() const {
  return local_queue_.empty() && !prop_ && !busy_ && queue_.empty() &&
         !lock_request_pending_ && !replay_pending_;
}

void GlupEngine::begin_update(GlupPayload payload, CompletionFn done) {
  Outgoing o;
  o.request_id = next_request_id_++;
  o.payload = std::move(payload);
  o.done = std::move(done);
  local_queue_.push_back(std::move(o));
  pump_local();
}

void GlupEngine::pump_local() {
  if (quiesced_ || local_queue_.empty()) return;
  if (lock_request_pending_ || replay_pending_) return;
  if (local_queue_.front().granted) return;  // propagation in progress
  send_lock_request();
}

void GlupEngine::send_lock_request() {
  Outgoing& front = local_queue_.front();
  lock_request_pending_ = true;
  if (i_am_locker()) {
    // Same dedupe as on_lock_request: a view install applied mid-grant
    // re-enters here while our own request is already being serviced.
    if (busy_ && busy_->sender == node_->id() &&
        busy_->request_id == front.request_id)
      return;
    for (const auto& q : queue_)
      if (q.sender == node_->id() && q.request_id == front.request_id) return;
    auto g = granted_.find(node_->id());
    if (g != granted_.end() && g->second.first == front.request_id) {
      on_lock_grant(LockGrant{front.request_id, g->second.second});
      return;
    }
    QueueItem item;
    item.sender = node_->id();
    item.request_id = front.request_id;
    item.payload = front.payload;
    queue_.push_back(std::move(item));
    locker_pump();
    return;
  }
  lock_rpc_ = node_->rpc_call(
      current_locker(), LockRequest{front.request_id, front.payload},
      [this](NodeId, const Envelope&) { lock_rpc_ = 0; },
      [this] {
        // Locker silent: either it is gone (a regroup is coming) or the
        // request was lost. Retrying is idempotent on the locker.
        lock_rpc_ = 0;
        lock_request_pending_ = false;
        if (!quiesced_ && node_->is_member()) pump_local();
      });
}

void GlupEngine::on_lock_request(NodeId from, std::uint64_t req,
                                 const LockRequest& m) {
  if (!i_am_locker()) return;  // stale addressing; sender will retry
  node_->respond(from, req, LockAccepted{m.request_id});
  auto g = granted_.find(from);
  if (g != granted_.end() && g->second.first == m.request_id) {
    // Duplicate of an already granted request: re-send the grant.
    node_->send_datagram(from, LockGrant{m.request_id, g->second.second});
    return;
  }
  if (busy_ && busy_->sender == from && busy_->request_id == m.request_id)
    return;
  for (const auto& q : queue_)
    if (q.sender == from && q.request_id == m.request_id) return;
  QueueItem item;
  item.sender = from;
  item.request_id = m.request_id;
  item.payload = m.payload;
  queue_.push_back(std::move(item));
  locker_pump();
}

void GlupEngine::locker_pump() {
  if (quiesced_ || busy_ || queue_.empty()) return;
  QueueItem item = std::move(queue_.front());
  queue_.pop_front();
  locker_grant(std::move(item));
}

void GlupEngine::locker_grant(QueueItem item) {
  Gseq gseq = item.is_replay ? item.replay_gseq : last_installed_ + 1;
  Busy b;
  b.gseq = gseq;
  b.sender = item.sender;
  b.request_id = item.request_id;
  b.payload = item.payload;
  b.locker_driven = item.is_replay;
  busy_ = std::move(b);
  granted_[item.sender] = {item.request_id, gseq};
  node_->trace("GLUP", "action=grant gseq=" + std::to_string(gseq) +
                           " sender=" + std::to_string(item.sender));
  // The locker installs at grant time; that is what makes it the node
  // guaranteed to hold every update any survivor holds.
  install_here(gseq, busy_->payload);
  if (item.is_replay) {
    NodeId sender = item.sender;
    std::uint64_t rid = item.request_id;
    start_propagation(gseq, busy_->payload, [this, sender, rid, gseq] {
      node_->trace("GLUP", "action=replay gseq=" + std::to_string(gseq) +
                               " sender=" + std::to_string(sender));
      if (sender != node_->id())
        node_->send_datagram(sender, ReplayDone{rid, gseq});
      busy_.reset();
      locker_pump();
    });
    return;
  }
  if (item.sender == node_->id()) {
    on_lock_grant(LockGrant{item.request_id, gseq});
    return;
  }
  node_->send_datagram(item.sender, LockGrant{item.request_id, gseq});
}

void GlupEngine::on_lock_grant(const LockGrant& m) {
  if (local_queue_.empty()) return;
  Outgoing& front = local_queue_.front();
  if (front.request_id != m.request_id) return;
  if (front.granted) return;  // duplicate grant
  front.granted = true;
  front.gseq = m.gseq;
  lock_request_pending_ = false;
  if (lock_rpc_) node_->rpc_cancel(lock_rpc_), lock_rpc_ = 0;
  if (quiesced_) return;  // recovery restarts the pass after the view settles
  start_propagation(m.gseq, front.payload, [this] { /* completion */
    Outgoing done = std::move(local_queue_.front());
    local_queue_.pop_front();
    if (current_locker() == node_->id()) {
      on_unlock(node_->id(), 0, GlupUnlock{done.gseq});
    } else {
      send_unlock(done.gseq);
    }
    if (done.done) done.done(true, done.gseq);
    pump_local();
  });
}

void GlupEngine::send_unlock(Gseq gseq) {
  node_->rpc_call(
      current_locker(), GlupUnlock{gseq}, [](NodeId, const Envelope&) {},
      [this, gseq] {
        if (!quiesced_ && node_->is_member()) send_unlock(gseq);
      });
}

void GlupEngine::start_propagation(Gseq gseq, GlupPayload payload,
                                   std::function<void()> done) {
  Propagation p;
  p.gseq = gseq;
  p.payload = std::move(payload);
  p.done = std::move(done);
  // View installs derive the walk from the payload so every sender and
  // every retry computes the same order regardless of local install state.
  // A joiner is not walked (it gets state over the join path); an evicted
  // node is walked so it learns the verdict and shuts itself down.
  const ViewInstall* vi = std::get_if<ViewInstall>(&p.payload);
  if (vi) {
    NodeSet walk = vi->view.active_set;
    if (vi->kind == ViewChangeKind::Join) erase_value(walk, vi->subject);
    if (vi->kind == ViewChangeKind::Evict) insert_sorted(walk, vi->subject);
    p.order = update_order(walk, vi->view.locker);
  } else {
    p.order =
        update_order(node_->view().active_set, current_locker());
  }
  prop_ = std::move(p);
  propagation_step();
}

void GlupEngine::propagation_step() {
  while (prop_) {
    if (prop_->next >= prop_->order.size()) {
      auto done = std::move(prop_->done);
      prop_.reset();
      if (done) done();
      return;
    }
    NodeId target = prop_->order[prop_->next];
    if (target == node_->id()) {
      install_here(prop_->gseq, prop_->payload);
      ++prop_->next;
      continue;
    }
    Gseq gseq = prop_->gseq;
    // Receivers gate on their current epoch. A view install is accepted by
    // nodes still in the epoch it supersedes, so stamp that one; the sender
    // itself may have installed already and moved on.
    Epoch stamp = node_->view().epoch;
    if (const auto* vi = std::get_if<ViewInstall>(&prop_->payload))
      stamp = vi->kind == ViewChangeKind::QuorumOwner ? vi->view.epoch
                                                      : vi->view.epoch - 1;
    prop_->rpc = node_->rpc_call(
        target, InstallUpdate{gseq, stamp, prop_->payload},
        [this, gseq](NodeId, const Envelope&) {
          if (!prop_ || prop_->gseq != gseq) return;
          prop_->rpc = 0;
          ++prop_->next;
          propagation_step();
        },
        [this, gseq] {
          // Target silent. Hold position; either the target answers a
          // retry or a regroup removes it and recovery restarts the pass.
          if (!prop_ || prop_->gseq != gseq) return;
          prop_->rpc = 0;
          if (quiesced_) return;
          propagation_step();
        });
    return;
  }
}

void GlupEngine::install_here(Gseq gseq, const GlupPayload& payload) {
  if (gseq <= last_installed_) return;  // duplicate delivery
  if (gseq != last_installed_ + 1)
    throw std::logic_error("update sequence gap at node " +
                           std::to_string(node_->id()));
  last_installed_ = gseq;
  installed_index_[gseq] = installed_log_.size();
  installed_log_.emplace_back(gseq, payload);
  node_->trace("GLUP", "action=install gseq=" + std::to_string(gseq) + " " +
                           payload_summary(payload));
  node_->apply_update(gseq, payload);
}

void GlupEngine::on_install(NodeId from, std::uint64_t req,
                            const InstallUpdate& m) {
  // Cross-epoch strays and updates during a regroup die silently; the
  // sender's timeout plus recovery handle the rest. A duplicate of an
  // update already held is acknowledged so a retried pass can advance.
  if (quiesced_ || node_->membership().regrouping()) return;
  if (m.gseq <= last_installed_) {
    node_->respond(from, req, Ack{});
    return;
  }
  if (m.epoch != node_->view().epoch) return;
  install_here(m.gseq, m.payload);
  node_->respond(from, req, Ack{});
}

void GlupEngine::on_unlock(NodeId from, std::uint64_t req, const GlupUnlock& m) {
  if (from != node_->id() && req != 0) node_->respond(from, req, Ack{});
  if (busy_ && busy_->gseq == m.gseq) {
    node_->trace("GLUP", "action=unlock gseq=" + std::to_string(m.gseq));
    busy_.reset();
    locker_pump();
  }
}

void GlupEngine::on_replay_request(NodeId from, std::uint64_t req,
                                   const ReplayRequest& m) {
  if (!i_am_locker()) return;
  node_->respond(from, req, LockAccepted{m.request_id});
  auto g = granted_.find(from);
  if (g != granted_.end() && g->second.first == m.request_id) return;
  if (busy_ && busy_->sender == from && busy_->request_id == m.request_id)
    return;
  for (const auto& q : queue_)
    if (q.sender == from && q.request_id == m.request_id) return;
  QueueItem item;
  item.sender = from;
  item.request_id = m.request_id;
  item.payload = m.payload;
  auto idx = installed_index_.find(m.gseq);
  if (idx != installed_index_.end() &&
      payload_summary(installed_log_[idx->second].second) ==
          payload_summary(m.payload)) {
    // The update reached this node before the old locker died, so by the
    // prefix rule it may be anywhere; re-drive it to everyone.
    item.is_replay = true;
    item.replay_gseq = m.gseq;
  }
  // Otherwise no survivor holds it (the holders were a prefix ending at
  // the dead locker); it is safe to issue fresh under a new sequence.
  queue_.push_back(std::move(item));
  locker_pump();
}

void GlupEngine::on_replay_done(const ReplayDone& m) {
  if (!replay_pending_ || local_queue_.empty()) return;
  Outgoing& front = local_queue_.front();
  if (front.request_id != m.request_id) return;
  replay_pending_ = false;
  Outgoing done = std::move(local_queue_.front());
  local_queue_.pop_front();
  if (done.done) done.done(true, m.gseq);
  pump_local();
}

void GlupEngine::on_regroup_started() {
  quiesced_ = true;
  if (prop_ && prop_->rpc) {
    node_->rpc_cancel(prop_->rpc);
    prop_->rpc = 0;
  }
  if (lock_rpc_) {
    node_->rpc_cancel(lock_rpc_);
    lock_rpc_ = 0;
    lock_request_pending_ = false;
  }
}

void GlupEngine::abort_propagation() {
  if (!prop_) return;
  if (prop_->rpc) node_->rpc_cancel(prop_->rpc);
  prop_.reset();
}

void GlupEngine::self_replay_last() {
  if (installed_log_.empty() || prop_) return;
  const auto& [gseq, payload] = installed_log_.back();
  node_->trace("GLUP", "action=replay gseq=" + std::to_string(gseq) +
                           " sender=" + std::to_string(node_->id()));
  start_propagation(gseq, payload, [this] { locker_pump(); });
}

void GlupEngine::on_view_installed(const MembershipView& old_view,
                                   const MembershipView& new_view,
                                   Gseq via_gseq) {
  quiesced_ = false;
  const NodeSet& active = new_view.active_set;
  NodeId self = node_->id();
  bool locker_changed = new_view.locker != old_view.locker;
  bool i_was_locker = old_view.locker == self;
  bool i_am_now_locker = new_view.locker == self;

  // Locker bookkeeping: departed senders get no service.
  if (i_am_now_locker) {
    for (auto it = queue_.begin(); it != queue_.end();) {
      if (contains(active, it->sender))
        ++it;
      else
        it = queue_.erase(it);
    }
    for (auto it = granted_.begin(); it != granted_.end();) {
      if (contains(active, it->first))
        ++it;
      else
        it = granted_.erase(it);
    }
  } else if (i_was_locker) {
    queue_.clear();
    granted_.clear();
    busy_.reset();
  }

  bool own_pass = via_gseq != 0 && prop_ && prop_->gseq == via_gseq;
  if (!own_pass) {
    // Sender-side recovery for an in-flight update of ours.
    if (!local_queue_.empty() && local_queue_.front().granted &&
        !replay_pending_) {
      Outgoing& front = local_queue_.front();
      abort_propagation();
      if (i_am_now_locker || !locker_changed) {
        if (i_am_now_locker && front.gseq > last_installed_) {
          // Our grant died with the old locker; nobody holds it. Reissue
          // to ourselves under a fresh sequence.
          front.granted = false;
          lock_request_pending_ = false;
        } else {
          Gseq g = front.gseq;
          GlupPayload p = front.payload;
          start_propagation(g, std::move(p), [this] {
            Outgoing done = std::move(local_queue_.front());
            local_queue_.pop_front();
            if (current_locker() == node_->id())
              on_unlock(node_->id(), 0, GlupUnlock{done.gseq});
            else
              send_unlock(done.gseq);
            if (done.done) done.done(true, done.gseq);
            pump_local();
          });
        }
      } else {
        replay_pending_ = true;
        send_replay_request();
      }
    } else if (lock_request_pending_ && !replay_pending_) {
      // Re-aim the un-granted request at whoever serializes now.
      if (lock_rpc_) node_->rpc_cancel(lock_rpc_), lock_rpc_ = 0;
      lock_request_pending_ = false;
    }
  }

  if (i_am_now_locker) {
    if (locker_changed) {
      // Whatever was mid-flight ended at or before this node; push the
      // last update back out so every survivor converges.
      self_replay_last();
    }
    if (busy_ && !contains(active, busy_->sender) && busy_->sender != self) {
      // Granted sender died; the locker finishes the walk and unlocks.
      Busy b = *busy_;
      if (!prop_) {
        node_->trace("GLUP",
                     "action=replay gseq=" + std::to_string(b.gseq) +
                         " sender=" + std::to_string(self));
        start_propagation(b.gseq, b.payload, [this] {
          if (busy_) {
            node_->trace("GLUP",
                         "action=unlock gseq=" + std::to_string(busy_->gseq));
            busy_.reset();
          }
          locker_pump();
        });
      }
    }
  }

  pump_local();
  locker_pump();
}

void GlupEngine::send_replay_request() {
  if (local_queue_.empty()) return;
  Outgoing& front = local_queue_.front();
  lock_rpc_ = node_->rpc_call(
      current_locker(),
      ReplayRequest{front.request_id, front.gseq, front.payload},
      [this](NodeId, const Envelope&) { lock_rpc_ = 0; },
      [this] {
        lock_rpc_ = 0;
        if (!quiesced_ && replay_pending_ && node_->is_member())
          send_replay_request();
      });
}

void GlupEngine::adopt(Gseq gseq, const GlupPayload& payload) {
  if (gseq == last_installed_ + 1) install_here(gseq, payload);
}

void GlupEngine::reset_for_form(Gseq version) {
  abort_propagation();
  if (lock_rpc_) node_->rpc_cancel(lock_rpc_), lock_rpc_ = 0;
  last_installed_ = version;
  installed_log_.clear();
  installed_index_.clear();
  local_queue_.clear();
  lock_request_pending_ = false;
  replay_pending_ = false;
  busy_.reset();
  queue_.clear();
  granted_.clear();
  quiesced_ = false;
}

}  // namespace clussim
