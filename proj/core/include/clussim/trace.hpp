// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "clussim/types.hpp"

namespace clussim {

// Append-only run trace. Each record is one line of the form
//   t=<ticks> node=<id> kind=<KIND> detail=<key=value ...>
// Records are appended in dispatch order, which makes the byte image of a
// trace a fingerprint of the whole run.
class Trace {
 public:
  void emit(Tick t, NodeId node, std::string_view kind, std::string detail);

  const std::vector<std::string>& lines() const { return lines_; }
  std::size_t size() const { return lines_.size(); }
  void clear() { lines_.clear(); }

  // All lines with the given kind, in order.
  std::vector<std::string> with_kind(std::string_view kind) const;
  std::string joined() const;

 private:
  std::vector<std::string> lines_;
};

// Returns the value of `key=` inside a trace line, or "" if absent.
std::string trace_field(const std::string& line, std::string_view key);

}  // namespace clussim
