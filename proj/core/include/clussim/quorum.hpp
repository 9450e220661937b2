// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <functional>
#include <optional>

#include "clussim/clusterdb.hpp"
#include "clussim/kernel.hpp"
#include "clussim/messages.hpp"

namespace clussim {

// The shared quorum device: one reservation slot plus the master copy of
// the configuration database. It sits on its own bus, so node partitions
// never cut it off; only scripted unavailability does. Arbitration is
// challenge and defense: a challenger breaks the reservation and claims it
// after challenge_wait; a living owner re-reserves every defense_period,
// which beats any challenger because defense_period < challenge_wait.
class QuorumDevice : public IEventTarget {
 public:
  QuorumDevice(SimKernel* kernel, int checkpoint_interval);

  void on_message(NodeId from, int iface, const Envelope& env,
                  Tick now) override;
  void on_timer(const TimerTag& tag, Tick now) override;

  void set_available(bool up);
  bool available() const { return up_; }

  NodeId reservation() const { return reservation_; }
  const MasterLog& master() const { return master_; }
  std::uint64_t incarnations() const { return master_.incarnation; }

 private:
  void reply(NodeId to, std::uint64_t req, MessageBody body);

  SimKernel* kernel_;
  int checkpoint_interval_;
  bool up_ = true;
  NodeId reservation_ = 0;
  MasterLog master_;
};

// Node-side arbitration state machine (lives on the node, talks to the
// device). Exactly one outstanding arbitration per node.
class Arbitrator {
 public:
  enum class Outcome { Won, Lost, Unavailable };
  using DoneFn = std::function<void(Outcome)>;

  explicit Arbitrator(Node* node) : node_(node) {}

  void arbitrate(DoneFn done);
  bool in_progress() const { return static_cast<bool>(done_); }

  // Lease side: defense heartbeat towards the device.
  void start_defense();
  void stop_defense();
  void release();
  bool lease_owned() const { return lease_owned_; }
  void on_timer(const TimerTag& tag, Tick now);
  void reset();

 private:
  void claim();
  void finish(Outcome o);

  Node* node_;
  DoneFn done_;
  EventHandle wait_timer_, defense_timer_;
  bool lease_owned_ = false;
};

}  // namespace clussim
