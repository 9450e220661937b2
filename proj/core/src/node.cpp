// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/node.hpp"

#include <utility>

#include "clussim/cluster.hpp"

namespace clussim {

Node::Node(NodeId id, Cluster* cluster)
    : id_(id),
      cluster_(cluster),
      netmon_(this),
      glup_(this),
      membership_(this),
      arb_(this),
      resmgr_(this),
      failover_(this),
      events_(this),
      timesync_(this) {}

SimKernel& Node::kernel() { return cluster_->kernel(); }
const ClusterConfig& Node::cfg() const { return cluster_->config(); }
const ClusterSpec& Node::spec() const { return cluster_->spec(); }
Tick Node::now() const { return cluster_->kernel().now(); }

// ------------------------------------------------------------ rpc plumbing

std::uint64_t Node::rpc_call(NodeId to, MessageBody body, ReplyFn on_reply,
                             TimeoutFn on_timeout, Tick timeout,
                             bool background) {
  std::uint64_t id = next_rpc_++;
  Envelope env;
  env.rpc_req = id;
  env.body = std::move(body);
  kernel().send(id_, to, 0, std::move(env), background);
  PendingRpc p;
  p.on_reply = std::move(on_reply);
  p.on_timeout = std::move(on_timeout);
  p.timer = kernel().schedule_timer(
      id_, timeout ? timeout : cfg().rpc_timeout,
      TimerTag{TimerKind::Generic, static_cast<int>(id), "rpc"}, background);
  pending_.emplace(id, std::move(p));
  return id;
}

void Node::rpc_cancel(std::uint64_t id) {
  auto it = pending_.find(id);
  if (it == pending_.end()) return;
  kernel().cancel(it->second.timer);
  pending_.erase(it);
}

void Node::respond(NodeId to, std::uint64_t req, MessageBody body,
                   bool background) {
  Envelope env;
  env.rpc_resp = req;
  env.body = std::move(body);
  kernel().send(id_, to, 0, std::move(env), background);
}

void Node::send_datagram(NodeId to, MessageBody body, bool background,
                         int iface) {
  Envelope env;
  env.body = std::move(body);
  kernel().send(id_, to, iface, std::move(env), background);
}

EventHandle Node::timer(Tick delay, TimerTag tag, bool background) {
  return kernel().schedule_timer(id_, delay, std::move(tag), background);
}

void Node::cancel(EventHandle& h) {
  if (h.valid()) kernel().cancel(h);
}

void Node::trace(std::string_view kind, std::string detail) {
  kernel().trace().emit(now(), id_, kind, std::move(detail));
}

// ---------------------------------------------------------------- dispatch

void Node::on_message(NodeId from, int iface, const Envelope& env, Tick now) {
  if (env.rpc_resp != 0) {
    auto it = pending_.find(env.rpc_resp);
    if (it == pending_.end()) return;  // reply raced its own timeout
    PendingRpc p = std::move(it->second);
    pending_.erase(it);
    kernel().cancel(p.timer);
    if (p.on_reply) p.on_reply(from, env);
    return;
  }
  dispatch_body(from, iface, env, now);
}

void Node::dispatch_body(NodeId from, int iface, const Envelope& env,
                         Tick now) {
  std::uint64_t req = env.rpc_req;
  const MessageBody& b = env.body;
  if (auto* m = std::get_if<HeartbeatMsg>(&b)) {
    netmon_.on_heartbeat(from, iface, *m, now);
  } else if (std::get_if<JoinRequest>(&b)) {
    membership_.on_join_request(from);
  } else if (std::get_if<JoinOffer>(&b)) {
    membership_.on_join_offer(from);
  } else if (auto* m = std::get_if<JoinEngage>(&b)) {
    membership_.on_join_engage(from, req, *m);
  } else if (auto* m = std::get_if<JoinDbInfo>(&b)) {
    membership_.on_join_db_info(from, req, *m);
  } else if (auto* m = std::get_if<JoinMembershipInfo>(&b)) {
    membership_.on_join_membership_info(from, req, *m);
  } else if (auto* m = std::get_if<FullMemberSignal>(&b)) {
    membership_.on_full_member_signal(from, req, *m);
  } else if (auto* m = std::get_if<JoinAck>(&b)) {
    membership_.on_join_ack(from, req, *m);
  } else if (auto* m = std::get_if<JoinReject>(&b)) {
    membership_.on_join_reject(from, *m);
  } else if (std::get_if<ClusterExit>(&b)) {
    membership_.on_cluster_exit(from);
  } else if (auto* m = std::get_if<RegroupStatus>(&b)) {
    membership_.on_regroup_status(from, *m);
  } else if (auto* m = std::get_if<LockRequest>(&b)) {
    glup_.on_lock_request(from, req, *m);
  } else if (auto* m = std::get_if<LockGrant>(&b)) {
    glup_.on_lock_grant(*m);
  } else if (auto* m = std::get_if<InstallUpdate>(&b)) {
    glup_.on_install(from, req, *m);
  } else if (auto* m = std::get_if<GlupUnlock>(&b)) {
    glup_.on_unlock(from, req, *m);
  } else if (auto* m = std::get_if<ReplayRequest>(&b)) {
    glup_.on_replay_request(from, req, *m);
  } else if (auto* m = std::get_if<ReplayDone>(&b)) {
    glup_.on_replay_done(*m);
  } else if (auto* m = std::get_if<TakeGroup>(&b)) {
    failover_.on_take_group(from, req, *m);
  } else if (auto* m = std::get_if<EventRecordMsg>(&b)) {
    events_.on_record(m->record);
  } else if (auto* m = std::get_if<TimeSyncMsg>(&b)) {
    timesync_.on_sync(from, *m);
  }
  // Anything else (device traffic, stray acks) has no datagram meaning here.
}

void Node::on_timer(const TimerTag& tag, Tick now) {
  switch (tag.kind) {
    case TimerKind::Heartbeat:
    case TimerKind::SuspicionCheck:
      netmon_.on_timer(tag, now);
      return;
    case TimerKind::RegroupTick:
    case TimerKind::RegroupStatus:
    case TimerKind::RegroupStageTimeout:
    case TimerKind::MemberSearch:
    case TimerKind::JoinGrace:
    case TimerKind::LeaveGrace:
    case TimerKind::ArbitrationRetry:
      membership_.on_timer(tag, now);
      return;
    case TimerKind::ArbitrationWait:
    case TimerKind::Defense:
      arb_.on_timer(tag, now);
      return;
    case TimerKind::MonitorPoll:
    case TimerKind::ResourceStep:
      resmgr_.on_timer(tag, now);
      return;
    case TimerKind::Failback:
      failover_.on_timer(tag, now);
      return;
    case TimerKind::TimeSync:
      timesync_.on_timer(tag, now);
      return;
    case TimerKind::GlupRecoveryKick:
      return;
    case TimerKind::Generic: {
      // RPC timeout; tag.a carries the request id.
      auto it = pending_.find(static_cast<std::uint64_t>(tag.a));
      if (it == pending_.end()) return;
      PendingRpc p = std::move(it->second);
      pending_.erase(it);
      if (p.on_timeout) p.on_timeout();
      return;
    }
  }
}

// ------------------------------------------------------------- update sink

void Node::apply_update(Gseq gseq, const GlupPayload& payload) {
  if (auto* w = std::get_if<DbWrite>(&payload)) {
    DbLogEntry e{gseq, w->path, w->value};
    db_.apply(e);
    if (arb_.lease_owned()) master_log_write(e);
    return;
  }
  membership_.apply_view_install(gseq, std::get<ViewInstall>(payload));
}

void Node::master_log_write(const DbLogEntry& e) {
  send_datagram(kDeviceId, QLogAppend{e});
}

void Node::master_log_epoch(Epoch e) {
  send_datagram(kDeviceId, QLogEpoch{e});
}

// ---------------------------------------------------------------- operator

void Node::power_on() { membership_.start_node(); }

void Node::hard_reset() {
  pending_.clear();
  netmon_.stop();
  timesync_.reset();
  glup_.reset_for_form(0);
  membership_.reset();
  arb_.reset();
  resmgr_.reset();
  failover_.reset();
  events_.reset();
  db_ = DbReplica{};
  incarnation_ = 0;
}

}  // namespace clussim
