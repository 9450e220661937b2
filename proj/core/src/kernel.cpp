// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/kernel.hpp"

#include <stdexcept>

namespace clussim {

const char* to_string(ViewChangeKind k) {
  switch (k) {
    case ViewChangeKind::Join: return "join";
    case ViewChangeKind::Leave: return "leave";
    case ViewChangeKind::Evict: return "evict";
    case ViewChangeKind::QuorumOwner: return "quorum-owner";
  }
  return "?";
}

std::string payload_summary(const GlupPayload& p) {
  if (const auto* w = std::get_if<DbWrite>(&p))
    return "write " + w->path + "=" + w->value;
  const auto& vi = std::get<ViewInstall>(p);
  return std::string("view ") + to_string(vi.kind) + " subject=" +
         std::to_string(vi.subject) + " " + vi.view.summary();
}

const char* message_kind(const MessageBody& m) {
  static constexpr const char* names[] = {
      "Ack", "Heartbeat", "JoinRequest", "JoinOffer", "JoinEngage",
      "JoinDbInfo", "JoinMembershipInfo", "FullMemberSignal", "JoinAck",
      "JoinReject", "ClusterExit", "RegroupStatus", "LockRequest",
      "LockAccepted", "LockGrant", "InstallUpdate", "GlupUnlock",
      "ReplayRequest", "ReplayDone", "QBreak", "QBreakAck", "QClaim",
      "QClaimReply", "QDefend", "QDefendReply", "QRelease", "QReadMaster",
      "QMasterData", "QNewIncarnation", "QNewIncarnationReply", "QLogAppend",
      "QCheckpoint", "QLogEpoch", "TakeGroup", "EventRecord", "TimeSync"};
  return names[m.index()];
}

const char* to_string(TimerKind k) {
  switch (k) {
    case TimerKind::Heartbeat: return "heartbeat";
    case TimerKind::SuspicionCheck: return "suspicion-check";
    case TimerKind::RegroupTick: return "regroup-tick";
    case TimerKind::RegroupStatus: return "regroup-status";
    case TimerKind::RegroupStageTimeout: return "regroup-stage-timeout";
    case TimerKind::MemberSearch: return "member-search";
    case TimerKind::JoinGrace: return "join-grace";
    case TimerKind::LeaveGrace: return "leave-grace";
    case TimerKind::ArbitrationWait: return "arbitration-wait";
    case TimerKind::ArbitrationRetry: return "arbitration-retry";
    case TimerKind::Defense: return "defense";
    case TimerKind::MonitorPoll: return "monitor-poll";
    case TimerKind::ResourceStep: return "resource-step";
    case TimerKind::Failback: return "failback";
    case TimerKind::TimeSync: return "time-sync";
    case TimerKind::GlupRecoveryKick: return "glup-recovery";
    case TimerKind::Generic: return "generic";
  }
  return "?";
}

SimKernel::SimKernel(std::uint64_t seed, std::uint64_t event_ceiling,
                     Tick quiescence_window)
    : event_ceiling_(event_ceiling),
      quiescence_window_(quiescence_window),
      rng_(seed) {}

void SimKernel::register_target(NodeId id, IEventTarget* t) {
  targets_[id] = t;
}

void SimKernel::add_link(NodeId a, NodeId b, LinkState s) {
  links_[{a, b}] = s;
  links_[{b, a}] = s;
}

const LinkState& SimKernel::link(NodeId from, NodeId to) const {
  static LinkState def;
  auto it = links_.find({from, to});
  if (it != links_.end()) return it->second;
  def.delay = default_delay_;
  def.ifaces = 1;
  def.drop_p = 0;
  def.extra_delay = 0;
  return def;
}

int SimKernel::ifaces(NodeId from, NodeId to) const {
  return link(from, to).ifaces;
}

Tick SimKernel::max_link_delay() const {
  Tick m = default_delay_;
  for (const auto& [k, l] : links_) m = std::max(m, l.delay + l.extra_delay);
  return m;
}

void SimKernel::crash(NodeId n) {
  crashed_.insert(n);
  ++life_[n];  // invalidates every timer the old incarnation armed
  trace_.emit(now_, n, "FAULT", "action=crash");
}

void SimKernel::revive(NodeId n) {
  crashed_.erase(n);
  trace_.emit(now_, n, "FAULT", "action=revive");
}

void SimKernel::partition(const std::vector<NodeSet>& groups) {
  partition_of_.clear();
  std::string d = "action=partition groups=";
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g) d += "|";
    d += join_ids(groups[g]);
    for (NodeId n : groups[g]) {
      if (partition_of_.count(n))
        throw std::invalid_argument("partition groups must be disjoint");
      partition_of_[n] = static_cast<int>(g);
    }
  }
  trace_.emit(now_, 0, "FAULT", d);
}

void SimKernel::heal() {
  partition_of_.clear();
  trace_.emit(now_, 0, "FAULT", "action=heal");
}

bool SimKernel::partitioned(NodeId a, NodeId b) const {
  if (partition_of_.empty()) return false;
  if (a == kDeviceId || b == kDeviceId) return false;  // device bus
  auto ia = partition_of_.find(a);
  auto ib = partition_of_.find(b);
  // nodes absent from every group are unreachable from grouped nodes
  int ga = ia == partition_of_.end() ? -1 : ia->second;
  int gb = ib == partition_of_.end() ? -1 : ib->second;
  return ga != gb;
}

void SimKernel::drop_next(NodeId from, NodeId to, int iface, int count) {
  drop_rules_.push_back({from, to, iface, count});
  trace_.emit(now_, 0, "FAULT",
              "action=dropnext from=" + std::to_string(from) +
                  " to=" + std::to_string(to) +
                  " iface=" + std::to_string(iface) +
                  " count=" + std::to_string(count));
}

void SimKernel::delay_link(NodeId from, NodeId to, Tick extra) {
  links_[{from, to}] = link(from, to);
  links_[{from, to}].extra_delay = extra;
  trace_.emit(now_, 0, "FAULT",
              "action=delaylink from=" + std::to_string(from) +
                  " to=" + std::to_string(to) +
                  " extra=" + std::to_string(extra));
}

EventHandle SimKernel::schedule_timer(NodeId target, Tick delay, TimerTag tag,
                                      bool background) {
  Event e;
  e.due = now_ + delay;
  e.seq = next_seq_++;
  e.type = 1;
  e.target = target;
  e.background = background;
  auto it = life_.find(target);
  e.life = it == life_.end() ? 0 : it->second;
  e.tag = std::move(tag);
  EventHandle h{e.seq, background};
  pending_bg_[e.seq] = background;
  push(std::move(e));
  return h;
}

void SimKernel::cancel(EventHandle& h) {
  if (!h.valid()) return;
  auto it = pending_bg_.find(h.id);
  if (it != pending_bg_.end()) {
    cancelled_.insert(h.id);
    if (!it->second) --nonbg_pending_;
    pending_bg_.erase(it);
  }
  h = EventHandle{};
}

void SimKernel::send(NodeId from, NodeId to, int iface, Envelope env,
                     bool background) {
  if (from == to) throw std::logic_error("self-send is not modeled");
  // Messages crossing a partition vanish silently; scripted drops consume
  // their budget; probabilistic loss draws from the seeded generator.
  if (partitioned(from, to)) return;
  for (auto it = drop_rules_.begin(); it != drop_rules_.end(); ++it) {
    if (it->from != from || it->to != to) continue;
    if (it->iface != -1 && it->iface != iface) continue;
    if (--it->count <= 0) drop_rules_.erase(it);
    trace_.emit(now_, to, "DROP",
                "from=" + std::to_string(from) +
                    " iface=" + std::to_string(iface) +
                    " msg=" + message_kind(env.body));
    return;
  }
  const LinkState& l = link(from, to);
  if (l.drop_p > 0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < l.drop_p) return;
  }
  Event e;
  e.due = now_ + l.delay + l.extra_delay;
  e.seq = next_seq_++;
  e.type = 0;
  e.target = to;
  e.background = background;
  e.from = from;
  e.iface = iface;
  e.env = std::move(env);
  push(std::move(e));
}

void SimKernel::schedule_command(Tick at, std::string label,
                                 std::function<void(Tick)> fn) {
  if (at < now_) throw std::logic_error("command scheduled in the past");
  Event e;
  e.due = at;
  e.seq = next_seq_++;
  e.type = 2;
  e.label = std::move(label);
  e.fn = std::move(fn);
  push(std::move(e));
}

void SimKernel::schedule_assertion(Tick at, std::function<void(Tick)> fn) {
  if (at < now_) throw std::logic_error("assertion scheduled in the past");
  Event e;
  e.due = at;
  e.band = 1;  // evaluates after every same-tick protocol event
  e.seq = next_seq_++;
  e.type = 3;
  e.fn = std::move(fn);
  push(std::move(e));
}

void SimKernel::push(Event e) {
  if (!e.background) ++nonbg_pending_;
  queue_.push(std::move(e));
}

void SimKernel::dispatch(Event& e) {
  ++dispatched_;
  switch (e.type) {
    case 0: {
      if (crashed_.count(e.target)) return;  // dead targets hear nothing
      auto it = targets_.find(e.target);
      if (it == targets_.end()) return;
      std::string d = "from=" + std::to_string(e.from) +
                      " iface=" + std::to_string(e.iface) +
                      " msg=" + message_kind(e.env.body);
      trace_.emit(now_, e.target, "RECV", std::move(d));
      it->second->on_message(e.from, e.iface, e.env, now_);
      break;
    }
    case 1: {
      pending_bg_.erase(e.seq);
      if (crashed_.count(e.target)) return;
      auto lit = life_.find(e.target);
      if (lit != life_.end() && lit->second != e.life) return;
      auto it = targets_.find(e.target);
      if (it == targets_.end()) return;
      trace_.emit(now_, e.target, "TIMER",
                  std::string("tag=") + to_string(e.tag.kind) +
                      (e.tag.s.empty() ? "" : " id=" + e.tag.s));
      it->second->on_timer(e.tag, now_);
      break;
    }
    case 2:
      trace_.emit(now_, 0, "CMD", e.label);
      e.fn(now_);
      break;
    case 3:
      e.fn(now_);
      break;
  }
}

RunResult SimKernel::run(RunLimit limit) {
  RunResult r;
  while (!queue_.empty()) {
    if (dispatched_ >= event_ceiling_) {
      r.status = RunResult::Status::Livelock;
      r.end_time = now_;
      r.dispatched = dispatched_;
      return r;
    }
    const Event& top = queue_.top();
    if (!limit.until_quiescence && top.due > limit.until_tick) break;
    // Quiescence: nothing but background maintenance is pending and the
    // last state-changing event is a full idle window behind us.
    if (limit.until_quiescence && nonbg_pending_ == 0 &&
        top.due >= last_progress_ + quiescence_window_) {
      now_ = std::max(now_, last_progress_ + quiescence_window_);
      r.status = RunResult::Status::Quiescent;
      r.end_time = now_;
      r.dispatched = dispatched_;
      return r;
    }
    Event e = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    if (e.type == 1 && cancelled_.count(e.seq)) {
      cancelled_.erase(e.seq);
      continue;
    }
    now_ = e.due;
    if (!e.background) {
      --nonbg_pending_;
      last_progress_ = now_;
    }
    dispatch(e);
  }
  if (!limit.until_quiescence) now_ = std::max(now_, limit.until_tick);
  r.status = queue_.empty() && limit.until_quiescence
                 ? RunResult::Status::Quiescent
                 : RunResult::Status::ReachedLimit;
  r.end_time = now_;
  r.dispatched = dispatched_;
  return r;
}

}  // namespace clussim
