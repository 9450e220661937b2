// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>

#include "clussim/kernel.hpp"
#include "clussim/types.hpp"

namespace clussim {

class Node;

// Cluster time service. The lowest active node id is the time source and
// broadcasts its offset every sync period; everyone else adopts it. Local
// clock reads are clamped monotone, so adopting an earlier source time
// slews the clock (it holds still) instead of stepping it backwards.
class TimeSync {
 public:
  explicit TimeSync(Node* node) : node_(node) {}

  void start();
  void stop();
  void on_timer(const TimerTag& tag, Tick now);
  void on_sync(NodeId from, const TimeSyncMsg& m);
  void drift(std::int64_t delta) { offset_ += delta; }

  std::int64_t offset() const { return offset_; }
  // Adjusted local clock; never decreases between reads.
  Tick adjusted_now();
  void reset();

 private:
  bool i_am_source() const;

  Node* node_;
  std::int64_t offset_ = 0;
  Tick last_reported_ = 0;
  EventHandle timer_;
};

}  // namespace clussim
