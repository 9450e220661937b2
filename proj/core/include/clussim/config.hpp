// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <string>

#include "clussim/types.hpp"

namespace clussim {

// Every timing constant of the cluster lives here so that tests and
// scenarios have a single tuning surface. Values are ticks unless noted.
struct ClusterConfig {
  Tick base_delay = 2;           // default one-way link latency
  Tick heartbeat_period = 300;   // heartbeat emission interval
  // A peer is suspected after 2 heartbeat periods of silence.
  Tick alive_window() const { return 2 * heartbeat_period; }
  // Granularity of the silence scan; bounds detection latency jitter.
  Tick suspicion_check_period() const { return heartbeat_period / 2; }

  Tick rpc_timeout = 50;              // request/response wait before failure
  Tick member_search_wait = 100;      // discovery wait before forming is tried
  int form_retry_limit = 3;           // search/form cycles before giving up
  Tick join_grace = 900;              // applicant-side ceiling on a join attempt
  Tick leave_grace = 100;             // silence allowance after a clean exit

  Tick regroup_status_period = 75;    // regroup status rebroadcast interval
  Tick regroup_stage1_wait = 600;     // stage 1 advances on this timeout
  Tick regroup_stage_timeout = 3000;  // stages 2..5 restart on this timeout
  int regroup_restart_limit = 16;     // restarts before the node halts

  Tick defense_period = 3;     // owner re-reserves the quorum device
  Tick challenge_wait = 6;     // challenger waits for a defense after breaking
  Tick arbitration_retry = 12; // lost challengers retry at this interval

  int checkpoint_interval = 64;  // master log entries between checkpoints

  Tick monitor_poll_period = 100;  // resource health poll
  Tick resource_online_delay = 1;  // default time an online callback takes
  Tick resource_offline_delay = 1;

  Tick time_sync_period = 1000;  // time source broadcast interval
  std::int64_t skew_bound = 100; // pairwise clock skew promise

  std::uint64_t event_ceiling = 1000000;  // livelock guard
  Tick quiescence_window = 3000;          // idle span that counts as settled

  bool set_field(const std::string& name, std::int64_t value);
};

}  // namespace clussim
