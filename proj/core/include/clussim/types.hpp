// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace clussim {

// Virtual time in ticks. One tick is the smallest schedulable delay; the
// interpretation (we treat a tick as a millisecond) never enters the logic.
using Tick = std::uint64_t;

// Node identifiers are small positive integers. Id 0 is reserved for the
// shared quorum device, which lives on its own bus and is addressed with
// the same message primitives as a node.
using NodeId = int;
inline constexpr NodeId kDeviceId = 0;

using Gseq = std::uint64_t;
using Epoch = std::uint64_t;

using GroupId = std::string;
using ResourceId = std::string;

// Sorted set of node ids, the representation used for every membership set.
using NodeSet = std::vector<NodeId>;

bool contains(const NodeSet& s, NodeId n);
void insert_sorted(NodeSet& s, NodeId n);
void erase_value(NodeSet& s, NodeId n);
NodeSet intersect(const NodeSet& a, const NodeSet& b);
NodeSet subtract(const NodeSet& a, const NodeSet& b);
std::string join_ids(const NodeSet& s, char sep = ',');

}  // namespace clussim
