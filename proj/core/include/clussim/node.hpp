// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "clussim/clusterdb.hpp"
#include "clussim/config.hpp"
#include "clussim/eventlog.hpp"
#include "clussim/failover.hpp"
#include "clussim/glup.hpp"
#include "clussim/kernel.hpp"
#include "clussim/membership.hpp"
#include "clussim/messages.hpp"
#include "clussim/netmon.hpp"
#include "clussim/quorum.hpp"
#include "clussim/resmgr.hpp"
#include "clussim/timesync.hpp"
#include "clussim/types.hpp"

namespace clussim {

class Cluster;

// One cluster node: the composition point of every per-node engine plus
// the RPC plumbing they share. RPCs are datagram request/response pairs
// with a timeout; a reply cancels the timeout, a timeout fires exactly
// once. Crash wipes everything; a revived node starts from scratch.
class Node : public IEventTarget {
 public:
  Node(NodeId id, Cluster* cluster);

  void on_message(NodeId from, int iface, const Envelope& env,
                  Tick now) override;
  void on_timer(const TimerTag& tag, Tick now) override;

  NodeId id() const { return id_; }
  Cluster& cluster() { return *cluster_; }
  SimKernel& kernel();
  const ClusterConfig& cfg() const;
  const ClusterSpec& spec() const;
  Tick now() const;

  using ReplyFn = std::function<void(NodeId, const Envelope&)>;
  using TimeoutFn = std::function<void()>;
  std::uint64_t rpc_call(NodeId to, MessageBody body, ReplyFn on_reply,
                         TimeoutFn on_timeout, Tick timeout = 0,
                         bool background = false);
  void rpc_cancel(std::uint64_t id);
  void respond(NodeId to, std::uint64_t req, MessageBody body,
               bool background = false);
  void send_datagram(NodeId to, MessageBody body, bool background = false,
                     int iface = 0);
  EventHandle timer(Tick delay, TimerTag tag, bool background = false);
  void cancel(EventHandle& h);
  void trace(std::string_view kind, std::string detail);

  MembershipEngine& membership() { return membership_; }
  NetMonitor& netmon() { return netmon_; }
  GlupEngine& glup() { return glup_; }
  DbReplica& db() { return db_; }
  const DbReplica& db() const { return db_; }
  Arbitrator& arb() { return arb_; }
  ResourceManager& resmgr() { return resmgr_; }
  FailoverEngine& failover() { return failover_; }
  const FailoverEngine& failover() const { return failover_; }
  EventLogEngine& events() { return events_; }
  TimeSync& timesync() { return timesync_; }

  NodePhase phase() const { return membership_.phase(); }
  const MembershipView& view() const { return membership_.view(); }
  bool is_member() const { return membership_.is_member(); }

  // Applies an update the global update protocol just installed here.
  void apply_update(Gseq gseq, const GlupPayload& payload);

  // Quorum owner duties: mirror installed writes and epochs to the device.
  void master_log_write(const DbLogEntry& e);
  void master_log_epoch(Epoch e);

  void power_on();   // operator: start the cluster service
  void hard_reset(); // crash: drop all state

  std::uint64_t db_incarnation() const { return incarnation_; }
  void set_db_incarnation(std::uint64_t v) { incarnation_ = v; }

 private:
  struct PendingRpc {
    ReplyFn on_reply;
    TimeoutFn on_timeout;
    EventHandle timer;
  };
  void dispatch_body(NodeId from, int iface, const Envelope& env, Tick now);

  NodeId id_;
  Cluster* cluster_;
  std::uint64_t next_rpc_ = 1;
  std::map<std::uint64_t, PendingRpc> pending_;
  std::uint64_t incarnation_ = 0;

  NetMonitor netmon_;
  GlupEngine glup_;
  MembershipEngine membership_;
  DbReplica db_;
  Arbitrator arb_;
  ResourceManager resmgr_;
  FailoverEngine failover_;
  EventLogEngine events_;
  TimeSync timesync_;
};

}  // namespace clussim
