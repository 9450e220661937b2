// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "clussim/kernel.hpp"
#include "clussim/messages.hpp"
#include "clussim/types.hpp"
#include "clussim/view.hpp"

namespace clussim {

class Node;

// Node lifecycle, sponsored join, forming, clean leave and the staged
// regroup. One engine per node; the view it maintains is the one every
// other module keys off.
class MembershipEngine {
 public:
  explicit MembershipEngine(Node* node) : node_(node) {}

  // Lifecycle entry points (operator actions arrive through the node).
  void start_node();
  void leave_cluster(const char* why);
  void pause();
  void resume();

  // Wire handlers (join discovery, sponsor-driven join phases, leave,
  // regroup coordination).
  void on_join_request(NodeId from);
  void on_join_offer(NodeId from);
  void on_join_engage(NodeId from, std::uint64_t req, const JoinEngage& m);
  void on_join_db_info(NodeId from, std::uint64_t req, const JoinDbInfo& m);
  void on_join_membership_info(NodeId from, std::uint64_t req,
                               const JoinMembershipInfo& m);
  void on_full_member_signal(NodeId from, std::uint64_t req,
                             const FullMemberSignal& m);
  void on_join_ack(NodeId from, std::uint64_t req, const JoinAck& m);
  void on_join_reject(NodeId from, const JoinReject& m);
  void on_cluster_exit(NodeId from);
  void on_regroup_status(NodeId from, const RegroupStatus& m);
  // Operator eviction of another node, driven from a surviving member.
  void evict(NodeId target);

  // Hooks.
  void on_suspicion(NodeId peer);                  // from the net monitor
  void apply_view_install(Gseq gseq, const ViewInstall& vi);  // from glup
  void on_timer(const TimerTag& tag, Tick now);
  // Arms a retry pulse whenever the quorum device is believed ownerless;
  // failover also pokes this when the quorum group goes homeless.
  void maybe_reclaim_quorum();
  // True while the quorum device or the group carrying its resource has no
  // living owner; drives the reclaim retry pulse.
  bool quorum_reclaim_needed() const;

  const MembershipView& view() const { return view_; }
  NodePhase phase() const { return phase_; }
  bool regrouping() const { return regroup_.active; }
  bool is_member() const {
    return phase_ == NodePhase::Online || phase_ == NodePhase::Paused;
  }
  int regroup_restarts() const { return regroup_.restart_count; }
  // The node currently serializing updates. Between a clean leave of the
  // locker and the install recording its successor, every survivor already
  // answers with the successor, so update traffic never stalls.
  NodeId effective_locker() const {
    return locker_override_ ? *locker_override_ : view_.locker;
  }
  const std::string& halt_reason() const { return halt_reason_; }

  void reset();

 private:
  // --- lifecycle / search / form ---
  void set_phase(NodePhase p, const char* why);
  void begin_member_search();
  void begin_quorum_search();
  void begin_form(const QMasterData& master);
  void finish_install_common(const MembershipView& old_view, Gseq via_gseq);
  void halt(const char* reason);

  // --- applicant side of join ---
  void engage_sponsor(NodeId sponsor);
  void applicant_fail(const char* why);

  // --- sponsor side of join ---
  struct SponsorJoin {
    NodeId applicant = 0;
    std::uint64_t attempt = 0;
    int phase = 0;
    Epoch epoch_at_start = 0;
    std::uint64_t applicant_incarnation = 0;
    Gseq applicant_version = 0;
    Gseq synced_version = 0;  // applicant's horizon after the db sync
    bool installed = false;
  };
  void sponsor_advance(int phase);
  void sponsor_abort(const char* why);
  void sponsor_finish();

  // --- clean leave ---
  void handle_departure_install(ViewChangeKind kind, NodeId subject,
                                const MembershipView& v);

  // --- regroup ---
  struct PeerReport {
    int stage = 0;
    NodeSet reachable;
    bool has_final = false;
    NodeSet final_set;
  };
  struct RegroupState {
    bool active = false;
    Epoch base_epoch = 0;
    int restart_count = 0;
    int stage = 0;
    // survival inputs frozen when the instance starts, so restarted
    // attempts judge against the same original membership
    NodeSet frozen_original;
    NodeId frozen_tb = 0;
    NodeId frozen_owner = 0;
    bool installed_this_instance = false;
    bool claimed_quorum = false;  // won the disk during this instance
    bool arbitrating = false;
    NodeSet expected;      // stage 1 gate
    NodeSet participants;  // heard from this attempt
    NodeSet candidate;     // frozen when stage 1 completes
    std::map<NodeId, PeerReport> reports;
    bool have_final = false;
    NodeSet final_set;
    NodeId final_from = 0;
    MembershipView pre_regroup_view;  // for update-protocol recovery
    EventHandle status_timer, stage_timer, tick_timer;
  };
  void start_regroup();
  void regroup_enter_stage(int stage);
  void regroup_broadcast_status();
  void regroup_check_advance();
  void regroup_restart(const char* why);
  void regroup_stage2_evaluate();
  void regroup_install();
  void regroup_stabilized();
  NodeSet connected_component(const NodeSet& candidates) const;
  NodeSet prune_fully_connected(const NodeSet& comp) const;
  NodeSet row_of(NodeId n) const;
  bool all_report_stage(const NodeSet& who, int stage) const;
  void regroup_stop_timers();

  Node* node_;
  NodePhase phase_ = NodePhase::Offline;
  MembershipView view_;

  // search / join, applicant side
  int form_cycles_ = 0;
  std::uint64_t join_attempt_ = 0;
  NodeId engaged_sponsor_ = 0;
  NodeSet offers_;
  EventHandle search_timer_, join_grace_timer_, reclaim_timer_;

  std::optional<SponsorJoin> sponsor_;
  std::optional<NodeId> locker_override_;
  std::string halt_reason_;

  RegroupState regroup_;
  EventHandle leave_grace_timer_;

  friend class Node;
};

}  // namespace clussim
