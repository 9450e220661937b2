// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "clussim/clusterdb.hpp"
#include "clussim/eventlog.hpp"
#include "clussim/types.hpp"
#include "clussim/view.hpp"

namespace clussim {

// ---------------------------------------------------------------- payloads
// What the global update protocol can carry. View installs ride the same
// ordered channel as database writes so every replica sees one sequence.

struct DbWrite {
  std::string path;
  std::string value;
};

enum class ViewChangeKind { Join, Leave, Evict, QuorumOwner };
const char* to_string(ViewChangeKind k);

struct ViewInstall {
  ViewChangeKind kind = ViewChangeKind::Join;
  NodeId subject = 0;
  MembershipView view;  // complete view after the change
};

using GlupPayload = std::variant<DbWrite, ViewInstall>;
std::string payload_summary(const GlupPayload& p);

// ---------------------------------------------------------------- messages

struct Ack {};  // generic positive RPC reply

struct HeartbeatMsg {
  std::uint64_t hb_seq = 0;
};

// Join discovery and the sponsor-driven phases.
struct JoinRequest {};
struct JoinOffer {};
struct JoinEngage {
  std::uint64_t attempt = 0;
  std::uint64_t incarnation = 0;  // of the applicant's database replica
  Gseq version = 0;
};
struct JoinDbInfo {
  std::uint64_t attempt = 0;
  std::uint64_t incarnation = 0;
  Gseq version = 0;  // sponsor's update horizon, not just its last db write
  bool full = true;
  DbSnapshot snapshot;
  // Update-log suffix; view installs ride along and no-op at the joiner.
  std::vector<std::pair<Gseq, GlupPayload>> suffix;
};
struct JoinMembershipInfo {
  std::uint64_t attempt = 0;
  MembershipView view;
  // Updates committed after the db sync, ending with the join install
  // itself; the joiner replays them to reach the cluster's horizon.
  std::vector<std::pair<Gseq, GlupPayload>> suffix;
};
struct FullMemberSignal {
  NodeId applicant = 0;
};
struct JoinAck {
  std::uint64_t attempt = 0;
};
struct JoinReject {
  std::uint64_t attempt = 0;
  std::string reason;
};
struct ClusterExit {};

// Regroup status, rebroadcast periodically while a regroup runs. A node
// advances a stage only when every expected peer reports the stage done.
struct RegroupStatus {
  Epoch base_epoch = 0;   // view epoch when this regroup instance started
  int restart_count = 0;
  int stage_done = 0;     // highest stage the sender has finished
  NodeSet reachable;      // sender's current connectivity row
  bool has_final = false; // tie breaker's pruned final membership, once known
  NodeSet final_set;
};

// Global update protocol wire traffic.
struct LockRequest {
  std::uint64_t request_id = 0;  // sender-scoped, makes grants idempotent
  GlupPayload payload;
};
struct LockAccepted {
  std::uint64_t request_id = 0;
};
struct LockGrant {
  std::uint64_t request_id = 0;
  Gseq gseq = 0;
};
struct InstallUpdate {
  Gseq gseq = 0;
  Epoch epoch = 0;  // issue epoch; receivers drop cross-epoch strays
  GlupPayload payload;
};
struct GlupUnlock {
  Gseq gseq = 0;
};
struct ReplayRequest {
  std::uint64_t request_id = 0;
  Gseq gseq = 0;
  GlupPayload payload;
};
struct ReplayDone {
  std::uint64_t request_id = 0;
  Gseq gseq = 0;
};

// Quorum device traffic (the device is address kDeviceId).
struct QBreak {};
struct QBreakAck {
  bool had_owner = false;
};
struct QClaim {};
struct QClaimReply {
  bool won = false;
};
struct QDefend {};
struct QDefendReply {
  bool still_owner = false;
};
struct QRelease {};
struct QReadMaster {};
struct QMasterData {
  DbSnapshot checkpoint;
  Gseq checkpoint_version = 0;
  std::vector<DbLogEntry> log;
  Epoch last_epoch = 0;
  std::uint64_t incarnation = 0;
};
struct QNewIncarnation {};
struct QNewIncarnationReply {
  std::uint64_t incarnation = 0;
};
struct QLogAppend {
  DbLogEntry entry;
};
struct QCheckpoint {
  DbSnapshot snapshot;
  Gseq version = 0;
};
struct QLogEpoch {
  Epoch epoch = 0;
};

// Failover handoff: the old owner asks the chosen node to take a group.
struct TakeGroup {
  GroupId gid;
};

// Support services.
struct EventRecordMsg {
  EventRecord record;
};
struct TimeSyncMsg {
  std::int64_t source_offset = 0;
};

using MessageBody = std::variant<
    Ack, HeartbeatMsg, JoinRequest, JoinOffer, JoinEngage, JoinDbInfo,
    JoinMembershipInfo, FullMemberSignal, JoinAck, JoinReject, ClusterExit,
    RegroupStatus, LockRequest, LockAccepted, LockGrant, InstallUpdate,
    GlupUnlock, ReplayRequest, ReplayDone, QBreak, QBreakAck, QClaim,
    QClaimReply, QDefend, QDefendReply, QRelease, QReadMaster, QMasterData,
    QNewIncarnation, QNewIncarnationReply, QLogAppend, QCheckpoint, QLogEpoch,
    TakeGroup, EventRecordMsg, TimeSyncMsg>;

const char* message_kind(const MessageBody& m);

// The unit the kernel transports. rpc_req marks a request the sender wants
// answered; rpc_resp echoes that id back on the reply.
struct Envelope {
  std::uint64_t rpc_req = 0;
  std::uint64_t rpc_resp = 0;
  MessageBody body;
};

}  // namespace clussim
