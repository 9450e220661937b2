// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/membership.hpp"

#include <memory>

#include "clussim/node.hpp"

namespace clussim {

namespace {

// First node of the old installation order that is still present: the
// deterministic successor for a departed or departing locker.
NodeId next_locker(const NodeSet& old_active, NodeId old_locker,
                   const NodeSet& surviving) {
  for (NodeId n : update_order(old_active, old_locker))
    if (contains(surviving, n)) return n;
  return surviving.empty() ? 0 : surviving.front();
}

}  // namespace

void MembershipEngine::set_phase(NodePhase p, const char* why) {
  if (phase_ == p) return;
  node_->trace("PHASE", std::string("state=") + to_string(p) +
                            (why && *why ? std::string(" why=") + why : ""));
  phase_ = p;
}

// ---------------------------------------------------------------- lifecycle

void MembershipEngine::start_node() {
  if (phase_ != NodePhase::Offline) return;
  set_phase(NodePhase::Initializing, "start");
  form_cycles_ = 0;
  begin_member_search();
}

void MembershipEngine::begin_member_search() {
  set_phase(NodePhase::MemberSearch, "");
  offers_.clear();
  engaged_sponsor_ = 0;
  for (NodeId n : node_->spec().defined_nodes) {
    if (n == node_->id()) continue;
    node_->send_datagram(n, JoinRequest{});
  }
  node_->cancel(search_timer_);
  search_timer_ = node_->timer(node_->cfg().member_search_wait,
                               {TimerKind::MemberSearch, 0, {}});
}

void MembershipEngine::on_join_request(NodeId from) {
  // Any settled full member answers, even while sponsoring someone else:
  // the offer tells the applicant a cluster exists. Engaging a busy
  // sponsor is rejected and the applicant simply searches again.
  if (phase_ != NodePhase::Online || regroup_.active) return;
  if (!contains(node_->spec().defined_nodes, from)) return;
  if (contains(view_.active_set, from)) return;
  node_->send_datagram(from, JoinOffer{});
}

void MembershipEngine::on_join_offer(NodeId from) {
  if (phase_ != NodePhase::MemberSearch) return;
  insert_sorted(offers_, from);
  // A live cluster answered; keep knocking however long it takes. The
  // retry budget is for deciding between forming and giving up, not for
  // waiting out a busy sponsor.
  form_cycles_ = 0;
}

void MembershipEngine::begin_quorum_search() {
  set_phase(NodePhase::QuorumDiskSearch, "");
  node_->arb().arbitrate([this](Arbitrator::Outcome o) {
    if (o == Arbitrator::Outcome::Won) {
      set_phase(NodePhase::Forming, "");
      node_->rpc_call(
          kDeviceId, QReadMaster{},
          [this](NodeId, const Envelope& env) {
            begin_form(std::get<QMasterData>(env.body));
          },
          [this] {
            node_->arb().release();
            applicant_fail("master-read-timeout");
          });
    } else {
      applicant_fail(o == Arbitrator::Outcome::Lost ? "arbitration-lost"
                                                    : "device-unavailable");
    }
  });
}

void MembershipEngine::begin_form(const QMasterData& master) {
  node_->db().load(
      MasterLog{master.checkpoint, master.checkpoint_version, master.log}
          .restore_state(),
      master.log.empty() ? master.checkpoint_version
                         : master.log.back().gseq);
  node_->glup().reset_for_form(node_->db().version());
  node_->rpc_call(
      kDeviceId, QNewIncarnation{},
      [this, last_epoch = master.last_epoch](NodeId, const Envelope& env) {
        node_->set_db_incarnation(
            std::get<QNewIncarnationReply>(env.body).incarnation);
        MembershipView old = view_;
        view_.epoch = last_epoch + 1;
        view_.active_set = {node_->id()};
        view_.original_set = {node_->id()};
        view_.tie_breaker = node_->id();
        view_.locker = node_->id();
        view_.quorum_owner = node_->id();
        set_phase(NodePhase::Online, "formed");
        form_cycles_ = 0;
        node_->arb().start_defense();
        node_->master_log_epoch(view_.epoch);
        node_->netmon().start();
        finish_install_common(old, 0);
        node_->timesync().start();
        node_->glup().begin_update(
            DbWrite{"cluster/incarnation",
                    std::to_string(node_->db_incarnation())});
        node_->failover().placement_pass("form");
      },
      [this] {
        node_->arb().release();
        applicant_fail("incarnation-timeout");
      });
}

void MembershipEngine::leave_cluster(const char* why) {
  if (!is_member()) return;
  set_phase(NodePhase::Exiting, why);
  node_->resmgr().drop_all([this] {
    bool last = view_.active_set.size() == 1;
    if (last) node_->arb().release();
    for (NodeId peer : view_.active_set) {
      if (peer == node_->id()) continue;
      node_->send_datagram(peer, ClusterExit{});
    }
    set_phase(NodePhase::RundownComplete, "");
    node_->netmon().stop();
    node_->timesync().stop();
    node_->glup().reset_for_form(node_->glup().last_installed());
    view_ = MembershipView{};
    set_phase(NodePhase::Offline, "left");
  });
}

void MembershipEngine::pause() {
  if (phase_ != NodePhase::Online) return;
  set_phase(NodePhase::Paused, "operator");
  node_->glup().begin_update(
      DbWrite{"nodes/" + std::to_string(node_->id()) + "/paused", "1"});
}

void MembershipEngine::resume() {
  if (phase_ != NodePhase::Paused) return;
  set_phase(NodePhase::Online, "operator");
  node_->glup().begin_update(
      DbWrite{"nodes/" + std::to_string(node_->id()) + "/paused", ""});
}

void MembershipEngine::evict(NodeId target) {
  if (!is_member() || regroup_.active) return;
  if (!contains(view_.active_set, target) || target == node_->id()) return;
  MembershipView v = view_;
  v.epoch += 1;
  erase_value(v.active_set, target);
  v.original_set = v.active_set;
  if (v.tie_breaker == target) v.tie_breaker = v.active_set.front();
  if (v.locker == target)
    v.locker = next_locker(view_.active_set, view_.locker, v.active_set);
  node_->glup().begin_update(ViewInstall{ViewChangeKind::Evict, target, v});
}

void MembershipEngine::halt(const char* reason) {
  node_->trace("HALT", std::string("reason=") + reason);
  halt_reason_ = reason;
  regroup_stop_timers();
  regroup_ = RegroupState{};
  sponsor_.reset();
  locker_override_.reset();
  node_->cancel(search_timer_);
  node_->cancel(join_grace_timer_);
  node_->cancel(reclaim_timer_);
  node_->netmon().stop();
  node_->timesync().stop();
  node_->glup().reset_for_form(node_->glup().last_installed());
  node_->resmgr().reset();
  node_->arb().reset();
  view_ = MembershipView{};
  set_phase(NodePhase::Offline, reason);
}

void MembershipEngine::reset() {
  phase_ = NodePhase::Offline;
  view_ = MembershipView{};
  form_cycles_ = 0;
  join_attempt_ = 0;
  engaged_sponsor_ = 0;
  offers_.clear();
  search_timer_ = join_grace_timer_ = reclaim_timer_ = EventHandle{};
  sponsor_.reset();
  locker_override_.reset();
  halt_reason_.clear();
  regroup_ = RegroupState{};
  leave_grace_timer_ = EventHandle{};
}

// ------------------------------------------------------------- join, applicant

void MembershipEngine::engage_sponsor(NodeId sponsor) {
  set_phase(NodePhase::Joining, "");
  engaged_sponsor_ = sponsor;
  ++join_attempt_;
  node_->cancel(join_grace_timer_);
  join_grace_timer_ =
      node_->timer(node_->cfg().join_grace, {TimerKind::JoinGrace, 0, {}});
  node_->trace("JOIN", "phase=1 sponsor=" + std::to_string(sponsor));
  std::uint64_t attempt = join_attempt_;
  node_->rpc_call(
      sponsor,
      JoinEngage{attempt, node_->db_incarnation(), node_->db().version()},
      [this, attempt](NodeId, const Envelope& env) {
        if (phase_ != NodePhase::Joining || join_attempt_ != attempt) return;
        if (const auto* rej = std::get_if<JoinReject>(&env.body))
          applicant_fail(rej->reason.c_str());
        // On Ack the sponsor drives everything from here.
      },
      [this, attempt] {
        if (phase_ != NodePhase::Joining || join_attempt_ != attempt) return;
        applicant_fail("engage-timeout");
      });
}

void MembershipEngine::on_join_db_info(NodeId from, std::uint64_t req,
                                       const JoinDbInfo& m) {
  if (phase_ != NodePhase::Joining || from != engaged_sponsor_ ||
      m.attempt != join_attempt_)
    return;
  if (m.full) {
    node_->db().load(m.snapshot, m.version);
    node_->glup().reset_for_form(m.version);
  } else {
    for (const auto& [gseq, payload] : m.suffix)
      node_->glup().adopt(gseq, payload);
  }
  node_->set_db_incarnation(m.incarnation);
  node_->trace("JOIN", std::string("phase=2 sync=") +
                           (m.full ? "snapshot" : "suffix") +
                           " version=" + std::to_string(m.version));
  node_->respond(from, req, Ack{});
}

void MembershipEngine::on_join_membership_info(NodeId from, std::uint64_t req,
                                               const JoinMembershipInfo& m) {
  if (phase_ != NodePhase::Joining || from != engaged_sponsor_ ||
      m.attempt != join_attempt_)
    return;
  // Replay the missed tail first: db writes apply, embedded view installs
  // no-op against the empty local view, and the horizon lands on the join
  // install's slot so the next propagated update is contiguous.
  for (const auto& [gseq, payload] : m.suffix) node_->glup().adopt(gseq, payload);
  MembershipView old = view_;
  view_ = m.view;
  node_->trace("JOIN", "phase=3 installed epoch=" + std::to_string(view_.epoch));
  node_->netmon().start();
  node_->netmon().sync_view();
  node_->timesync().start();
  finish_install_common(old, 0);
  node_->respond(from, req, Ack{});
}

void MembershipEngine::on_join_ack(NodeId from, std::uint64_t req,
                                   const JoinAck& m) {
  if (phase_ != NodePhase::Joining || from != engaged_sponsor_ ||
      m.attempt != join_attempt_)
    return;
  node_->respond(from, req, Ack{});
  node_->cancel(join_grace_timer_);
  form_cycles_ = 0;
  engaged_sponsor_ = 0;
  set_phase(NodePhase::Online, "joined");
  node_->trace("JOIN", "result=member epoch=" + std::to_string(view_.epoch));
  node_->failover().on_peer_joined(node_->id(), node_->now());
  node_->failover().placement_pass("join");
}

void MembershipEngine::on_join_reject(NodeId from, const JoinReject& m) {
  if (phase_ != NodePhase::Joining || m.attempt != join_attempt_) return;
  if (from != engaged_sponsor_) return;
  applicant_fail(m.reason.c_str());
}

void MembershipEngine::applicant_fail(const char* why) {
  node_->cancel(join_grace_timer_);
  node_->cancel(search_timer_);
  bool installed = contains(view_.active_set, node_->id()) &&
                   phase_ == NodePhase::Joining;
  node_->trace("JOIN", std::string("result=fail why=") + why);
  if (installed) {
    // Others believe this node is in; retract loudly and stay down until
    // the operator restarts the service.
    for (NodeId peer : view_.active_set) {
      if (peer == node_->id()) continue;
      node_->send_datagram(peer, ClusterExit{});
    }
    node_->netmon().stop();
    node_->timesync().stop();
    node_->glup().reset_for_form(node_->glup().last_installed());
    view_ = MembershipView{};
    set_phase(NodePhase::Offline, why);
    return;
  }
  node_->netmon().stop();
  node_->timesync().stop();
  view_ = MembershipView{};
  ++form_cycles_;
  if (form_cycles_ >= node_->cfg().form_retry_limit) {
    set_phase(NodePhase::Offline, "retries-exhausted");
    return;
  }
  begin_member_search();
}

// -------------------------------------------------------------- join, sponsor

void MembershipEngine::on_join_engage(NodeId from, std::uint64_t req,
                                      const JoinEngage& m) {
  auto reject = [&](const char* why) {
    node_->respond(from, req, JoinReject{m.attempt, why});
  };
  if (phase_ != NodePhase::Online) return reject("sponsor-not-online");
  if (regroup_.active) return reject("regrouping");
  if (sponsor_) return reject("sponsor-busy");
  if (!contains(node_->spec().defined_nodes, from)) return reject("unknown");
  if (contains(view_.active_set, from)) return reject("already-member");
  node_->respond(from, req, Ack{});
  SponsorJoin sj;
  sj.applicant = from;
  sj.attempt = m.attempt;
  sj.phase = 1;
  sj.epoch_at_start = view_.epoch;
  sj.applicant_incarnation = m.incarnation;
  sj.applicant_version = m.version;
  sponsor_ = sj;
  node_->trace("JOIN", "phase=1 applicant=" + std::to_string(from));
  sponsor_advance(2);
}

void MembershipEngine::sponsor_advance(int phase) {
  if (!sponsor_) return;
  sponsor_->phase = phase;
  NodeId applicant = sponsor_->applicant;
  std::uint64_t attempt = sponsor_->attempt;
  auto live = [this, applicant, attempt] {
    return sponsor_ && sponsor_->applicant == applicant &&
           sponsor_->attempt == attempt;
  };
  switch (phase) {
    case 2: {
      // Ship state: a log suffix when the applicant's replica is from this
      // database incarnation and the retained log reaches back to it.
      JoinDbInfo info;
      info.attempt = attempt;
      info.incarnation = node_->db_incarnation();
      const GlupEngine& glup = node_->glup();
      bool suffix_ok = sponsor_->applicant_incarnation ==
                           node_->db_incarnation() &&
                       sponsor_->applicant_version <= glup.last_installed() &&
                       sponsor_->applicant_version >= glup.history_base();
      info.full = !suffix_ok;
      info.version = glup.last_installed();
      sponsor_->synced_version = info.version;
      if (info.full) {
        info.snapshot = node_->db().state();
      } else {
        for (const auto& e : glup.installed_log())
          if (e.first > sponsor_->applicant_version) info.suffix.push_back(e);
      }
      node_->trace("JOIN", "phase=2 applicant=" + std::to_string(applicant) +
                               std::string(" sync=") +
                               (info.full ? "snapshot" : "suffix"));
      node_->rpc_call(
          applicant, std::move(info),
          [this, live](NodeId, const Envelope&) {
            if (live()) sponsor_advance(3);
          },
          [this, live] {
            if (live()) sponsor_abort("db-info-timeout");
          });
      break;
    }
    case 3: {
      node_->trace("JOIN", "phase=3 applicant=" + std::to_string(applicant));
      MembershipView v = view_;
      v.epoch += 1;
      insert_sorted(v.active_set, applicant);
      v.original_set = v.active_set;
      node_->glup().begin_update(
          ViewInstall{ViewChangeKind::Join, applicant, v},
          [this, live, applicant, attempt](bool ok, Gseq) {
            if (!live()) return;
            if (!ok || !contains(view_.active_set, applicant)) {
              sponsor_abort("install-rejected");
              return;
            }
            // Updates committed since the db sync never addressed the
            // applicant; hand them over so its horizon meets the view.
            JoinMembershipInfo info{attempt, view_, {}};
            for (const auto& e : node_->glup().installed_log())
              if (e.first > sponsor_->synced_version)
                info.suffix.push_back(e);
            node_->rpc_call(
                applicant, std::move(info),
                [this, live](NodeId, const Envelope&) {
                  if (live()) sponsor_advance(4);
                },
                [this, live] {
                  if (live()) sponsor_abort("membership-info-timeout");
                });
          });
      break;
    }
    case 4: {
      node_->trace("JOIN", "phase=4 applicant=" + std::to_string(applicant));
      node_->netmon().watch_first_heartbeat(applicant, [this, live] {
        if (!live()) return;
        NodeSet others = view_.active_set;
        erase_value(others, node_->id());
        erase_value(others, sponsor_->applicant);
        if (others.empty()) {
          sponsor_advance(5);
          return;
        }
        auto remaining = std::make_shared<std::size_t>(others.size());
        for (NodeId peer : others) {
          node_->rpc_call(
              peer, FullMemberSignal{sponsor_->applicant},
              [this, live, remaining](NodeId, const Envelope&) {
                if (!live()) return;
                if (--*remaining == 0) sponsor_advance(5);
              },
              [this, live] {
                if (live()) sponsor_abort("member-signal-timeout");
              });
        }
      });
      break;
    }
    case 5: {
      node_->trace("JOIN", "phase=5 applicant=" + std::to_string(applicant));
      node_->rpc_call(
          applicant, JoinAck{attempt},
          [this, live, applicant](NodeId, const Envelope&) {
            if (live()) sponsor_finish();
          },
          [this, live] {
            if (live()) sponsor_abort("ack-timeout");
          });
      break;
    }
    default:
      break;
  }
}

void MembershipEngine::on_full_member_signal(NodeId from, std::uint64_t req,
                                             const FullMemberSignal& m) {
  if (is_member() && contains(view_.active_set, m.applicant)) {
    node_->failover().on_peer_joined(m.applicant, node_->now());
    node_->respond(from, req, Ack{});
  }
  // Otherwise stay silent; the sponsor aborts and retracts the join.
}

void MembershipEngine::sponsor_finish() {
  if (!sponsor_) return;
  NodeId applicant = sponsor_->applicant;
  node_->trace("JOIN", "result=ok applicant=" + std::to_string(applicant));
  node_->events().log_local("node-joined id=" + std::to_string(applicant));
  node_->failover().on_peer_joined(applicant, node_->now());
  sponsor_.reset();
}

void MembershipEngine::sponsor_abort(const char* why) {
  if (!sponsor_) return;
  SponsorJoin sj = *sponsor_;
  sponsor_.reset();
  node_->trace("JOIN", "result=abort applicant=" +
                           std::to_string(sj.applicant) + " why=" + why);
  node_->send_datagram(sj.applicant, JoinReject{sj.attempt, why});
  if (sj.installed && contains(view_.active_set, sj.applicant)) {
    MembershipView v = view_;
    v.epoch += 1;
    erase_value(v.active_set, sj.applicant);
    v.original_set = v.active_set;
    node_->glup().begin_update(
        ViewInstall{ViewChangeKind::Evict, sj.applicant, v});
  }
}

// ----------------------------------------------------------------- installs

void MembershipEngine::apply_view_install(Gseq gseq, const ViewInstall& vi) {
  // Validation happens against local replica state; the update channel
  // hands every replica the same sequence, so accept or no-op is uniform.
  bool ok = false;
  switch (vi.kind) {
    case ViewChangeKind::Join: {
      NodeSet expect = view_.active_set;
      insert_sorted(expect, vi.subject);
      ok = !contains(view_.active_set, vi.subject) &&
           vi.view.active_set == expect && vi.view.epoch == view_.epoch + 1;
      break;
    }
    case ViewChangeKind::Leave:
    case ViewChangeKind::Evict: {
      NodeSet expect = view_.active_set;
      erase_value(expect, vi.subject);
      ok = contains(view_.active_set, vi.subject) &&
           vi.view.active_set == expect && vi.view.epoch == view_.epoch + 1;
      break;
    }
    case ViewChangeKind::QuorumOwner:
      ok = vi.view.epoch == view_.epoch &&
           vi.view.active_set == view_.active_set;
      break;
  }
  if (!ok) {
    node_->trace("VIEW", "action=stale-install " + vi.view.summary());
    return;
  }
  if ((vi.kind == ViewChangeKind::Evict || vi.kind == ViewChangeKind::Leave) &&
      vi.subject == node_->id()) {
    // Removed by fiat; shut the service down.
    halt("evicted");
    return;
  }
  MembershipView old = view_;
  view_ = vi.view;
  locker_override_.reset();
  finish_install_common(old, gseq);
  switch (vi.kind) {
    case ViewChangeKind::Join:
      // Failback bookkeeping waits for the full-member signal; a node in
      // the view but still mid-join cannot host anything yet.
      if (sponsor_ && sponsor_->applicant == vi.subject) {
        sponsor_->installed = true;
        sponsor_->epoch_at_start = view_.epoch;
      }
      break;
    case ViewChangeKind::Leave:
    case ViewChangeKind::Evict:
      handle_departure_install(vi.kind, vi.subject, old);
      break;
    case ViewChangeKind::QuorumOwner:
      break;
  }
  if (sponsor_ && view_.epoch != sponsor_->epoch_at_start)
    sponsor_abort("view-changed");
}

void MembershipEngine::finish_install_common(const MembershipView& old_view,
                                             Gseq via_gseq) {
  node_->trace("VIEW", view_.summary());
  node_->netmon().sync_view();
  if (node_->arb().lease_owned()) node_->master_log_epoch(view_.epoch);
  node_->glup().on_view_installed(old_view, view_, via_gseq);
}

void MembershipEngine::handle_departure_install(ViewChangeKind kind,
                                                NodeId subject,
                                                const MembershipView&) {
  node_->failover().on_departure_install(subject);
  maybe_reclaim_quorum();
}

// ------------------------------------------------------------------ leaves

void MembershipEngine::on_cluster_exit(NodeId from) {
  if (!is_member() || regroup_.active) return;
  if (!contains(view_.active_set, from)) return;
  node_->netmon().mark_clean_exit(from);
  NodeSet survivors = view_.active_set;
  erase_value(survivors, from);
  if (from == effective_locker() && !survivors.empty())
    locker_override_ = next_locker(view_.active_set, view_.locker, survivors);
  if (survivors.empty() || survivors.front() != node_->id()) return;
  // Lowest surviving id records the departure for everyone.
  MembershipView v = view_;
  v.epoch += 1;
  v.active_set = survivors;
  v.original_set = survivors;
  if (!contains(survivors, v.tie_breaker)) v.tie_breaker = survivors.front();
  if (!contains(survivors, v.locker))
    v.locker = next_locker(view_.active_set, view_.locker, survivors);
  node_->events().log_local("node-left id=" + std::to_string(from));
  node_->glup().begin_update(ViewInstall{ViewChangeKind::Leave, from, v});
}

// ----------------------------------------------------------------- regroup

void MembershipEngine::on_suspicion(NodeId peer) {
  if (!is_member() || regroup_.active) return;
  if (!contains(view_.active_set, peer)) return;
  start_regroup();
}

void MembershipEngine::start_regroup() {
  regroup_ = RegroupState{};
  regroup_.active = true;
  regroup_.base_epoch = view_.epoch;
  regroup_.frozen_original = view_.active_set;
  regroup_.frozen_tb = view_.tie_breaker;
  regroup_.frozen_owner = view_.quorum_owner;
  regroup_.expected = view_.active_set;
  regroup_.participants = {node_->id()};
  regroup_.pre_regroup_view = view_;
  node_->trace("REGROUP", "start base=" + std::to_string(regroup_.base_epoch));
  node_->glup().on_regroup_started();
  if (sponsor_) sponsor_abort("regroup");
  // Same-tick suspicions coalesce behind this one-tick deferral.
  regroup_.tick_timer = node_->timer(1, {TimerKind::RegroupTick, 0, {}});
}

void MembershipEngine::regroup_stop_timers() {
  node_->cancel(regroup_.status_timer);
  node_->cancel(regroup_.stage_timer);
  node_->cancel(regroup_.tick_timer);
}

void MembershipEngine::regroup_enter_stage(int stage) {
  regroup_.stage = stage;
  node_->trace("REGROUP", "stage=" + std::to_string(stage) +
                              " rc=" + std::to_string(regroup_.restart_count));
  node_->cancel(regroup_.stage_timer);
  if (stage == 1) {
    regroup_.stage_timer = node_->timer(node_->cfg().regroup_stage1_wait,
                                        {TimerKind::RegroupStageTimeout, 1, {}});
  } else if (stage >= 2 && stage <= 5) {
    regroup_.stage_timer =
        node_->timer(node_->cfg().regroup_stage_timeout,
                     {TimerKind::RegroupStageTimeout, stage, {}});
  }
  if (!regroup_.status_timer.valid() && stage >= 1) {
    regroup_broadcast_status();
  }
  regroup_check_advance();
}

void MembershipEngine::regroup_broadcast_status() {
  RegroupStatus st;
  st.base_epoch = regroup_.base_epoch;
  st.restart_count = regroup_.restart_count;
  st.stage_done = regroup_.stage;
  st.reachable = node_->netmon().reachable_row(node_->now());
  st.has_final = regroup_.have_final;
  st.final_set = regroup_.final_set;
  for (NodeId peer : regroup_.frozen_original) {
    if (peer == node_->id()) continue;
    node_->send_datagram(peer, st);
  }
  regroup_.status_timer = node_->timer(node_->cfg().regroup_status_period,
                                       {TimerKind::RegroupStatus, 0, {}});
}

void MembershipEngine::on_regroup_status(NodeId from, const RegroupStatus& m) {
  if (!is_member()) return;
  if (!regroup_.active) {
    if (m.base_epoch > view_.epoch) {
      halt("lost-partition");
      return;
    }
    if (m.base_epoch < view_.epoch) {
      // The sender regroups below an installed epoch: it missed a view.
      // One targeted status tells it to stand down. Finished-instance
      // announcements are not confusion and need no reply.
      if (m.stage_done < 6) {
        RegroupStatus st;
        st.base_epoch = view_.epoch;
        st.stage_done = 6;
        node_->send_datagram(from, st);
      }
      return;
    }
    if (m.stage_done >= 6) return;  // echo of an instance both sides closed
    if (!contains(view_.active_set, from)) return;
    start_regroup();
    // Fall through once the instance exists; the deferral tick still runs.
  }
  if (m.base_epoch > regroup_.base_epoch) {
    // A finished instance this node already installed is completion, not
    // defeat: stop waiting on reports that will never come.
    if (m.stage_done >= 6 && regroup_.installed_this_instance &&
        m.base_epoch == view_.epoch) {
      regroup_stabilized();
      return;
    }
    halt("lost-partition");
    return;
  }
  if (m.base_epoch < regroup_.base_epoch) return;
  if (!contains(regroup_.frozen_original, from)) return;
  if (m.restart_count > regroup_.restart_count) {
    // A peer timed a stage out; join its attempt.
    int rc = m.restart_count;
    node_->trace("REGROUP", "restart adopt rc=" + std::to_string(rc));
    regroup_.restart_count = rc;
    regroup_.participants = {node_->id()};
    regroup_.reports.clear();
    regroup_.candidate.clear();
    regroup_.have_final = false;
    regroup_.final_set.clear();
    regroup_.final_from = 0;
    regroup_.arbitrating = false;
    regroup_enter_stage(1);
  } else if (m.restart_count < regroup_.restart_count) {
    return;
  }
  insert_sorted(regroup_.participants, from);
  PeerReport& rep = regroup_.reports[from];
  rep.stage = m.stage_done;
  rep.reachable = m.reachable;
  if (m.has_final) {
    rep.has_final = true;
    rep.final_set = m.final_set;
    if (!regroup_.have_final || from < regroup_.final_from) {
      bool mine = regroup_.have_final && regroup_.final_from == node_->id();
      if (!mine || from < node_->id()) {
        regroup_.have_final = true;
        regroup_.final_from = from;
        regroup_.final_set = m.final_set;
      }
    }
  }
  regroup_check_advance();
}

NodeSet MembershipEngine::row_of(NodeId n) const {
  if (n == node_->id())
    return node_->netmon().reachable_row(node_->now());
  auto it = regroup_.reports.find(n);
  if (it == regroup_.reports.end() || it->second.reachable.empty())
    return {n};
  return it->second.reachable;
}

bool MembershipEngine::all_report_stage(const NodeSet& who, int stage) const {
  for (NodeId n : who) {
    if (n == node_->id()) {
      if (regroup_.stage < stage) return false;
      continue;
    }
    auto it = regroup_.reports.find(n);
    if (it == regroup_.reports.end() || it->second.stage < stage) return false;
  }
  return true;
}

NodeSet MembershipEngine::connected_component(const NodeSet& candidates) const {
  // Mutual reachability closure from this node: an edge needs both rows to
  // agree, so one-way silence separates.
  auto mutual = [&](NodeId a, NodeId b) {
    NodeSet ra = row_of(a), rb = row_of(b);
    return contains(ra, b) && contains(rb, a);
  };
  NodeSet comp = {node_->id()};
  bool grew = true;
  while (grew) {
    grew = false;
    for (NodeId c : candidates) {
      if (contains(comp, c)) continue;
      for (NodeId m : comp) {
        if (mutual(c, m)) {
          insert_sorted(comp, c);
          grew = true;
          break;
        }
      }
    }
  }
  return comp;
}

NodeSet MembershipEngine::prune_fully_connected(const NodeSet& comp) const {
  auto mutual = [&](NodeId a, NodeId b) {
    NodeSet ra = row_of(a), rb = row_of(b);
    return contains(ra, b) && contains(rb, a);
  };
  NodeSet kept = comp;
  for (;;) {
    // Count missing edges per node; fully connected means none missing.
    NodeId worst = 0;
    std::size_t worst_missing = 0;
    for (NodeId a : kept) {
      std::size_t missing = 0;
      for (NodeId b : kept)
        if (a != b && !mutual(a, b)) ++missing;
      if (missing > worst_missing ||
          (missing == worst_missing && missing > 0 && a > worst)) {
        worst = a;
        worst_missing = missing;
      }
    }
    if (worst_missing == 0) return kept;
    erase_value(kept, worst);
  }
}

void MembershipEngine::regroup_check_advance() {
  if (!regroup_.active) return;
  switch (regroup_.stage) {
    case 1: {
      if (subtract(regroup_.expected, regroup_.participants).empty()) {
        regroup_.candidate = intersect(regroup_.expected, regroup_.participants);
        regroup_enter_stage(2);
      }
      break;
    }
    case 2: {
      if (!all_report_stage(regroup_.candidate, 2)) break;
      regroup_stage2_evaluate();
      break;
    }
    case 3: {
      if (!regroup_.have_final) break;
      if (!contains(regroup_.final_set, node_->id())) {
        halt("pruned");
        return;
      }
      if (all_report_stage(regroup_.final_set, 3)) {
        regroup_install();
        if (regroup_.active) regroup_enter_stage(4);
      }
      break;
    }
    case 4:
      if (all_report_stage(regroup_.final_set, 4)) regroup_enter_stage(5);
      break;
    case 5:
      if (all_report_stage(regroup_.final_set, 5)) regroup_stabilized();
      break;
    default:
      break;
  }
}

void MembershipEngine::regroup_stage2_evaluate() {
  NodeSet comp = connected_component(regroup_.candidate);
  if (!survives(regroup_.frozen_original, comp, regroup_.frozen_tb,
                regroup_.frozen_owner)) {
    // Sole survivor of a pair without the reservation: the judgment is not
    // static, the disk decides. Break the dead owner's reservation; a live
    // owner on the far side defends and this side loses.
    if (comp.size() == 1 && regroup_.frozen_original.size() == 2 &&
        !regroup_.arbitrating) {
      regroup_.arbitrating = true;
      Epoch base = regroup_.base_epoch;
      int rc = regroup_.restart_count;
      node_->trace("REGROUP", "arbitrate base=" + std::to_string(base));
      node_->arb().arbitrate([this, base, rc](Arbitrator::Outcome o) {
        if (!regroup_.active || regroup_.base_epoch != base ||
            regroup_.restart_count != rc || regroup_.stage != 2) {
          // Verdict for an abandoned attempt; don't sit on a stray win.
          if (o == Arbitrator::Outcome::Won &&
              view_.quorum_owner != node_->id())
            node_->arb().release();
          return;
        }
        regroup_.arbitrating = false;
        if (o != Arbitrator::Outcome::Won) {
          halt("lost-partition");
          return;
        }
        regroup_.claimed_quorum = true;
        node_->arb().start_defense();
        regroup_.have_final = true;
        regroup_.final_from = node_->id();
        regroup_.final_set = {node_->id()};
        regroup_enter_stage(3);
      });
      return;
    }
    if (regroup_.arbitrating) return;  // verdict still pending
    halt("lost-partition");
    return;
  }
  if (comp.front() == node_->id() && !regroup_.have_final) {
    regroup_.have_final = true;
    regroup_.final_from = node_->id();
    regroup_.final_set = prune_fully_connected(comp);
  }
  regroup_enter_stage(3);
}

void MembershipEngine::regroup_install() {
  if (!contains(regroup_.final_set, node_->id())) {
    halt("pruned");
    return;
  }
  MembershipView old = view_;
  MembershipView v;
  v.epoch = regroup_.base_epoch + 1;
  v.active_set = regroup_.final_set;
  v.original_set = regroup_.final_set;
  v.tie_breaker = regroup_.final_set.front();
  v.locker = contains(regroup_.final_set, old.locker)
                 ? old.locker
                 : next_locker(regroup_.frozen_original, old.locker,
                               regroup_.final_set);
  v.quorum_owner =
      regroup_.claimed_quorum ? node_->id() : old.quorum_owner;
  view_ = v;
  locker_override_.reset();
  regroup_.installed_this_instance = true;
  node_->trace("VIEW", view_.summary());
  node_->netmon().sync_view();
  if (node_->arb().lease_owned()) node_->master_log_epoch(view_.epoch);
  if (view_.active_set.front() == node_->id()) {
    for (NodeId gone : subtract(regroup_.frozen_original, view_.active_set))
      node_->events().log_local("node-failed id=" + std::to_string(gone));
  }
}

void MembershipEngine::regroup_stabilized() {
  node_->trace("REGROUP", "stabilized epoch=" + std::to_string(view_.epoch));
  // Tell the laggards this instance is finished; without this the last
  // participant to stabilize waits on reports that will never come.
  regroup_.stage = 6;
  regroup_broadcast_status();
  regroup_stop_timers();
  MembershipView old = regroup_.pre_regroup_view;
  regroup_ = RegroupState{};
  node_->glup().on_view_installed(old, view_, 0);
  node_->failover().on_departure_install(0);
  maybe_reclaim_quorum();
}

void MembershipEngine::regroup_restart(const char* why) {
  if (regroup_.restart_count + 1 > node_->cfg().regroup_restart_limit) {
    halt("regroup-limit");
    return;
  }
  ++regroup_.restart_count;
  node_->trace("REGROUP", std::string("restart why=") + why +
                              " rc=" + std::to_string(regroup_.restart_count));
  regroup_.expected = regroup_.participants;
  regroup_.participants = {node_->id()};
  regroup_.reports.clear();
  regroup_.candidate.clear();
  regroup_.have_final = false;
  regroup_.final_set.clear();
  regroup_.final_from = 0;
  regroup_.arbitrating = false;
  regroup_enter_stage(1);
}

// ------------------------------------------------------------------ quorum

bool MembershipEngine::quorum_reclaim_needed() const {
  if (!contains(view_.active_set, view_.quorum_owner)) return true;
  for (const auto& [gid, gs] : node_->spec().groups)
    if (node_->spec().group_has_quorum_resource(gid) &&
        node_->failover().effective_owner(gid) == 0)
      return true;
  return false;
}

void MembershipEngine::maybe_reclaim_quorum() {
  if (!is_member() || !quorum_reclaim_needed()) return;
  node_->cancel(reclaim_timer_);
  reclaim_timer_ = node_->timer(node_->cfg().arbitration_retry,
                                {TimerKind::ArbitrationRetry, 0, {}},
                                /*background=*/true);
}

// ------------------------------------------------------------------ timers

void MembershipEngine::on_timer(const TimerTag& tag, Tick now) {
  switch (tag.kind) {
    case TimerKind::MemberSearch: {
      if (phase_ != NodePhase::MemberSearch) return;
      if (!offers_.empty()) {
        engage_sponsor(offers_.front());
      } else {
        begin_quorum_search();
      }
      break;
    }
    case TimerKind::JoinGrace:
      if (phase_ == NodePhase::Joining) applicant_fail("join-grace");
      break;
    case TimerKind::RegroupTick:
      if (regroup_.active && regroup_.stage == 0) regroup_enter_stage(1);
      break;
    case TimerKind::RegroupStatus:
      if (regroup_.active) regroup_broadcast_status();
      break;
    case TimerKind::RegroupStageTimeout: {
      if (!regroup_.active || regroup_.stage != tag.a) return;
      if (regroup_.stage == 1) {
        regroup_.candidate =
            intersect(regroup_.expected, regroup_.participants);
        regroup_enter_stage(2);
      } else {
        regroup_restart("stage-timeout");
      }
      break;
    }
    case TimerKind::ArbitrationRetry: {
      if (!is_member() || regroup_.active) return;
      if (!quorum_reclaim_needed()) return;
      node_->failover().placement_pass("quorum-reclaim");
      maybe_reclaim_quorum();
      break;
    }
    default:
      break;
  }
  (void)now;
}

}  // namespace clussim
