// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <functional>
#include <map>

#include "clussim/kernel.hpp"
#include "clussim/messages.hpp"
#include "clussim/types.hpp"

namespace clussim {

class Node;

// Failure detection by heartbeats. Every active node sends one heartbeat
// per period to every peer over every interface of the link; a peer is
// suspected after two periods of total silence, a single interface after
// two periods of silence on that interface while the peer stays alive.
class NetMonitor {
 public:
  explicit NetMonitor(Node* node) : node_(node) {}

  struct PeerState {
    std::uint64_t last_hb_seq = 0;
    Tick last_receipt = 0;
    Tick alive_deadline = 0;
    bool node_suspected = false;
    std::map<int, Tick> iface_deadline;
    std::map<int, bool> iface_suspected;
  };

  void start();
  void stop();
  // Align tracked peers with the node's current view. New peers get a full
  // alive window of grace; departed peers are dropped, so no suspicion is
  // ever raised about a node outside the view.
  void sync_view();
  // Suppress suspicion of a cleanly departing peer until the view catches
  // up (bounded: silence past the grace window still raises suspicion).
  void mark_clean_exit(NodeId peer);

  void on_heartbeat(NodeId from, int iface, const HeartbeatMsg& m, Tick now);
  void on_timer(const TimerTag& tag, Tick now);
  void tick_heartbeats(Tick now);
  void check_suspicions(Tick now);
  // Sponsor hook: fires a callback on the first heartbeat from `peer`.
  void watch_first_heartbeat(NodeId peer, std::function<void()> fn);

  NodeSet reachable_row(Tick now) const;
  bool is_reachable(NodeId peer, Tick now) const;
  std::uint64_t unknown_sender_count() const { return unknown_senders_; }
  const PeerState* peer(NodeId id) const;
  std::uint64_t rounds_sent() const { return hb_seq_; }

 private:
  Node* node_;
  bool running_ = false;
  EventHandle hb_timer_, check_timer_;
  std::uint64_t hb_seq_ = 0;
  std::map<NodeId, PeerState> peers_;
  std::map<NodeId, Tick> clean_exit_until_;
  std::map<NodeId, std::function<void()>> first_hb_watch_;
  std::uint64_t unknown_senders_ = 0;
};

}  // namespace clussim
