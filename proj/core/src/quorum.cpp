// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/quorum.hpp"

#include <stdexcept>

#include "clussim/node.hpp"

namespace clussim {

QuorumDevice::QuorumDevice(SimKernel* kernel, int checkpoint_interval)
    : kernel_(kernel), checkpoint_interval_(checkpoint_interval) {}

void QuorumDevice::reply(NodeId to, std::uint64_t req, MessageBody body) {
  Envelope env;
  env.rpc_resp = req;
  // Defense chatter is maintenance; it must not hold off quiescence.
  bool background = std::holds_alternative<QDefendReply>(body);
  env.body = std::move(body);
  kernel_->send(kDeviceId, to, 0, std::move(env), background);
}

void QuorumDevice::on_message(NodeId from, int, const Envelope& env,
                              Tick now) {
  if (!up_) return;  // a dead device answers nothing
  const MessageBody& m = env.body;
  if (std::holds_alternative<QBreak>(m)) {
    bool had = reservation_ != 0;
    kernel_->trace().emit(now, kDeviceId, "QUORUM",
                          "action=break by=" + std::to_string(from) +
                              " owner=" + std::to_string(reservation_));
    reservation_ = 0;
    reply(from, env.rpc_req, QBreakAck{had});
  } else if (std::holds_alternative<QClaim>(m)) {
    bool won = reservation_ == 0 || reservation_ == from;
    if (won) reservation_ = from;
    reply(from, env.rpc_req, QClaimReply{won});
  } else if (std::holds_alternative<QDefend>(m)) {
    // A living owner re-places its reservation; losing it to a finished
    // claim means somebody else owns the disk now.
    bool still = reservation_ == 0 || reservation_ == from;
    if (still) reservation_ = from;
    reply(from, env.rpc_req, QDefendReply{still});
  } else if (std::holds_alternative<QRelease>(m)) {
    if (reservation_ == from) reservation_ = 0;
  } else if (std::holds_alternative<QReadMaster>(m)) {
    reply(from, env.rpc_req,
          QMasterData{master_.checkpoint, master_.checkpoint_version,
                      master_.log, master_.last_epoch, master_.incarnation});
  } else if (std::holds_alternative<QNewIncarnation>(m)) {
    ++master_.incarnation;
    reply(from, env.rpc_req, QNewIncarnationReply{master_.incarnation});
  } else if (const auto* a = std::get_if<QLogAppend>(&m)) {
    master_.append(a->entry, checkpoint_interval_);
  } else if (const auto* c = std::get_if<QCheckpoint>(&m)) {
    master_.checkpoint = c->snapshot;
    master_.checkpoint_version = c->version;
    master_.log.clear();
  } else if (const auto* e = std::get_if<QLogEpoch>(&m)) {
    if (e->epoch > master_.last_epoch) master_.last_epoch = e->epoch;
  }
}

void QuorumDevice::on_timer(const TimerTag&, Tick) {}

void QuorumDevice::set_available(bool up) {
  up_ = up;
  // Reservations are held in device volatile state; the master log is on
  // the media and survives the outage.
  if (!up) reservation_ = 0;
}

void Arbitrator::arbitrate(DoneFn done) {
  if (done_) throw std::logic_error("arbitration already in progress");
  done_ = std::move(done);
  node_->trace("QUORUM", "action=break");
  node_->rpc_call(
      kDeviceId, QBreak{},
      [this](NodeId, const Envelope& env) {
        const auto& ack = std::get<QBreakAck>(env.body);
        if (!ack.had_owner) {
          claim();  // nothing to challenge, take it now
          return;
        }
        wait_timer_ = node_->timer(node_->cfg().challenge_wait,
                                   {TimerKind::ArbitrationWait, 0, {}});
      },
      [this] { finish(Outcome::Unavailable); });
}

void Arbitrator::claim() {
  node_->rpc_call(
      kDeviceId, QClaim{},
      [this](NodeId, const Envelope& env) {
        const auto& r = std::get<QClaimReply>(env.body);
        finish(r.won ? Outcome::Won : Outcome::Lost);
      },
      [this] { finish(Outcome::Unavailable); });
}

void Arbitrator::finish(Outcome o) {
  node_->trace("QUORUM", o == Outcome::Won    ? "action=win"
                         : o == Outcome::Lost ? "action=lose"
                                              : "action=unavailable");
  if (o == Outcome::Won) lease_owned_ = true;
  DoneFn done = std::move(done_);
  done_ = nullptr;
  done(o);
}

void Arbitrator::start_defense() {
  lease_owned_ = true;
  if (defense_timer_.valid()) return;
  defense_timer_ = node_->timer(node_->cfg().defense_period,
                                {TimerKind::Defense, 0, {}},
                                /*background=*/true);
}

void Arbitrator::stop_defense() { node_->cancel(defense_timer_); }

void Arbitrator::release() {
  stop_defense();
  if (!lease_owned_) return;
  lease_owned_ = false;
  node_->trace("QUORUM", "action=release");
  node_->send_datagram(kDeviceId, QRelease{});
}

void Arbitrator::on_timer(const TimerTag& tag, Tick) {
  if (tag.kind == TimerKind::ArbitrationWait) {
    claim();
    return;
  }
  if (tag.kind != TimerKind::Defense) return;
  if (!lease_owned_) return;
  defense_timer_ = node_->timer(node_->cfg().defense_period,
                                {TimerKind::Defense, 0, {}},
                                /*background=*/true);
  node_->rpc_call(
      kDeviceId, QDefend{},
      [this](NodeId, const Envelope& env) {
        const auto& r = std::get<QDefendReply>(env.body);
        if (!r.still_owner && lease_owned_) {
          lease_owned_ = false;
          stop_defense();
          node_->trace("QUORUM", "action=fence why=reservation-taken");
        }
      },
      [this] {
        if (!lease_owned_) return;
        lease_owned_ = false;
        stop_defense();
        node_->trace("QUORUM", "action=fence why=device-silent");
      },
      /*timeout=*/0, /*background=*/true);
}

void Arbitrator::reset() {
  done_ = nullptr;
  wait_timer_ = EventHandle{};
  defense_timer_ = EventHandle{};
  lease_owned_ = false;
}

}  // namespace clussim
