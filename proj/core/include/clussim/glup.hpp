// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "clussim/messages.hpp"
#include "clussim/types.hpp"

namespace clussim {

class Node;

// Installation order for one update: the locker first (it installs when it
// grants the lock), then ids above the locker ascending, then ids below it
// ascending. Because propagation is strictly one node at a time in this
// order, the nodes holding a given update always form a prefix of it; the
// first survivor after a dead locker therefore already has the update.
NodeSet update_order(const NodeSet& actives, NodeId locker);

// Global update protocol engine, one per node. The locker node serializes
// updates (one in flight cluster-wide); every update is installed at every
// active node or at none. View installs and database writes share this
// single ordered channel.
class GlupEngine {
 public:
  using CompletionFn = std::function<void(bool installed_here, Gseq gseq)>;

  explicit GlupEngine(Node* node) : node_(node) {}

  // Issue an update from this node. Completion fires once the update has
  // been installed everywhere (or re-issued and then installed). Requests
  // made while another local request is pending queue locally.
  void begin_update(GlupPayload payload, CompletionFn done = nullptr);

  // Wire handlers.
  void on_lock_request(NodeId from, std::uint64_t req, const LockRequest& m);
  void on_lock_grant(const LockGrant& m);
  void on_install(NodeId from, std::uint64_t req, const InstallUpdate& m);
  void on_unlock(NodeId from, std::uint64_t req, const GlupUnlock& m);
  void on_replay_request(NodeId from, std::uint64_t req,
                         const ReplayRequest& m);
  void on_replay_done(const ReplayDone& m);

  // Membership hooks. While a regroup runs the protocol is quiesced; at
  // stabilization (or any view install) recovery re-propagates whatever
  // may have been in flight and re-issues unserved requests. via_gseq is
  // the update that carried the install, 0 for a direct (regroup) install;
  // a sender does not disturb its own pass.
  void on_regroup_started();
  void on_view_installed(const MembershipView& old_view,
                         const MembershipView& new_view, Gseq via_gseq);

  // Bootstrap for a forming node: it is the only member and the locker.
  void reset_for_form(Gseq version);
  // Adopt a shipped log entry during a join; out-of-sequence entries no-op.
  void adopt(Gseq gseq, const GlupPayload& payload);

  Gseq last_installed() const { return last_installed_; }
  const std::vector<std::pair<Gseq, GlupPayload>>& installed_log() const {
    return installed_log_;
  }
  // Gseq before the oldest retained log entry; suffix shipping reaches
  // back no further.
  Gseq history_base() const {
    return last_installed_ - static_cast<Gseq>(installed_log_.size());
  }
  std::vector<Gseq> installed_gseqs() const;
  bool idle() const;

 private:
  struct Outgoing {
    std::uint64_t request_id = 0;
    GlupPayload payload;
    CompletionFn done;
    bool granted = false;
    Gseq gseq = 0;
  };
  struct QueueItem {
    NodeId sender = 0;
    std::uint64_t request_id = 0;
    GlupPayload payload;
    bool is_replay = false;
    Gseq replay_gseq = 0;
  };
  struct Busy {
    Gseq gseq = 0;
    NodeId sender = 0;  // who is driving the propagation
    std::uint64_t request_id = 0;
    GlupPayload payload;
    bool locker_driven = false;
  };
  struct Propagation {
    Gseq gseq = 0;
    GlupPayload payload;
    NodeSet order;
    std::size_t next = 0;
    std::uint64_t rpc = 0;
    std::function<void()> done;
  };

  bool i_am_locker() const;
  NodeId current_locker() const;
  void pump_local();        // issue the next local request if none pending
  void send_lock_request();
  void send_unlock(Gseq gseq);
  void send_replay_request();
  void locker_pump();       // grant the next queued item if free
  void locker_grant(QueueItem item);
  void start_propagation(Gseq gseq, GlupPayload payload,
                         std::function<void()> done);
  void propagation_step();
  void install_here(Gseq gseq, const GlupPayload& payload);
  void abort_propagation();
  void self_replay_last();

  Node* node_;
  Gseq last_installed_ = 0;
  std::vector<std::pair<Gseq, GlupPayload>> installed_log_;
  std::map<Gseq, std::size_t> installed_index_;

  // sender side
  std::uint64_t next_request_id_ = 1;
  std::deque<Outgoing> local_queue_;
  bool lock_request_pending_ = false;
  std::uint64_t lock_rpc_ = 0;    // outstanding lock / replay request rpc
  bool replay_pending_ = false;   // waiting on ReplayDone from a new locker
  std::optional<Propagation> prop_;

  // locker side
  std::optional<Busy> busy_;
  std::deque<QueueItem> queue_;
  std::map<NodeId, std::pair<std::uint64_t, Gseq>> granted_;  // idempotency

  bool quiesced_ = false;

  friend class Node;
};

}  // namespace clussim
