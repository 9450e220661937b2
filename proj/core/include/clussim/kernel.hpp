// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "clussim/messages.hpp"
#include "clussim/trace.hpp"
#include "clussim/types.hpp"

namespace clussim {

// Tags carried by timer events. The kernel treats them as opaque.
enum class TimerKind {
  Heartbeat,
  SuspicionCheck,
  RegroupTick,
  RegroupStatus,
  RegroupStageTimeout,
  MemberSearch,
  JoinGrace,
  LeaveGrace,
  ArbitrationWait,
  ArbitrationRetry,
  Defense,
  MonitorPoll,
  ResourceStep,
  Failback,
  TimeSync,
  GlupRecoveryKick,
  Generic,
};
const char* to_string(TimerKind k);

struct TimerTag {
  TimerKind kind = TimerKind::Generic;
  int a = 0;
  std::string s;
};

struct EventHandle {
  std::uint64_t id = 0;
  bool background = false;
  bool valid() const { return id != 0; }
};

class IEventTarget {
 public:
  virtual ~IEventTarget() = default;
  virtual void on_message(NodeId from, int iface, const Envelope& env,
                          Tick now) = 0;
  virtual void on_timer(const TimerTag& tag, Tick now) = 0;
};

struct LinkState {
  Tick delay = 0;     // one-way latency, all interfaces
  int ifaces = 1;     // redundant physical paths
  double drop_p = 0;  // random loss probability per message
  Tick extra_delay = 0;
};

struct RunResult {
  enum class Status { ReachedLimit, Quiescent, Livelock };
  Status status = Status::ReachedLimit;
  Tick end_time = 0;
  std::uint64_t dispatched = 0;
};

// Deterministic discrete event kernel. Events dispatch in (due, band, seq)
// order; seq is assigned at scheduling time, so identical runs dispatch in
// identical order. Band 1 is reserved for scenario assertions, which must
// observe the state after every same-tick protocol event.
class SimKernel {
 public:
  SimKernel(std::uint64_t seed, std::uint64_t event_ceiling,
            Tick quiescence_window);

  Tick now() const { return now_; }
  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }
  std::mt19937_64& rng() { return rng_; }

  void register_target(NodeId id, IEventTarget* t);

  // Topology. Links are directional internally; add_link installs both
  // directions. Pairs without an explicit link use the default delay.
  void add_link(NodeId a, NodeId b, LinkState s);
  void set_default_delay(Tick d) { default_delay_ = d; }
  const LinkState& link(NodeId from, NodeId to) const;
  int ifaces(NodeId from, NodeId to) const;
  Tick max_link_delay() const;

  // Fault injection.
  void crash(NodeId n);
  void revive(NodeId n);
  bool is_crashed(NodeId n) const { return crashed_.count(n) > 0; }
  void partition(const std::vector<NodeSet>& groups);
  void heal();
  void drop_next(NodeId from, NodeId to, int iface, int count);
  void delay_link(NodeId from, NodeId to, Tick extra);

  // Scheduling. Delays are relative to now(); the past is unreachable by
  // construction. `background` marks recurring maintenance traffic that
  // does not hold off quiescence.
  EventHandle schedule_timer(NodeId target, Tick delay, TimerTag tag,
                             bool background = false);
  void cancel(EventHandle& h);
  void send(NodeId from, NodeId to, int iface, Envelope env,
            bool background = false);

  // Scripted actions and assertions.
  void schedule_command(Tick at, std::string label,
                        std::function<void(Tick)> fn);
  void schedule_assertion(Tick at, std::function<void(Tick)> fn);

  struct RunLimit {
    bool until_quiescence = true;
    Tick until_tick = 0;
  };
  RunResult run(RunLimit limit);

  std::uint64_t dispatched() const { return dispatched_; }

 private:
  struct Event {
    Tick due = 0;
    int band = 0;
    std::uint64_t seq = 0;
    // 0: message, 1: timer, 2: command, 3: assertion
    int type = 0;
    NodeId target = 0;
    bool background = false;
    int life = 0;  // timers die with the incarnation that armed them
    // message
    NodeId from = 0;
    int iface = 0;
    Envelope env;
    // timer
    TimerTag tag;
    // command / assertion
    std::string label;
    std::function<void(Tick)> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.due != b.due) return a.due > b.due;
      if (a.band != b.band) return a.band > b.band;
      return a.seq > b.seq;
    }
  };

  bool partitioned(NodeId a, NodeId b) const;
  void push(Event e);
  void dispatch(Event& e);

  Tick now_ = 0;
  std::uint64_t next_seq_ = 1;
  std::uint64_t dispatched_ = 0;
  std::uint64_t event_ceiling_;
  Tick quiescence_window_;
  Tick last_progress_ = 0;
  std::uint64_t nonbg_pending_ = 0;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::set<std::uint64_t> cancelled_;
  std::map<std::uint64_t, bool> pending_bg_;  // handle id -> background

  std::map<NodeId, IEventTarget*> targets_;
  std::map<NodeId, int> life_;
  std::map<std::pair<NodeId, NodeId>, LinkState> links_;
  Tick default_delay_ = 2;
  std::set<NodeId> crashed_;
  std::map<NodeId, int> partition_of_;
  struct DropRule {
    NodeId from, to;
    int iface;  // -1: any
    int count;
  };
  std::vector<DropRule> drop_rules_;

  Trace trace_;
  std::mt19937_64 rng_;
};

}  // namespace clussim
