// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clussim/types.hpp"

namespace clussim {

// One durable database mutation, identified by the global sequence number
// the update protocol stamped on it.
struct DbLogEntry {
  Gseq gseq = 0;
  std::string path;
  std::string value;
};

using DbSnapshot = std::map<std::string, std::string>;

// Canonical form: sorted "path=value" lines, newline separated. Replica
// digests and golden comparisons are computed over this form.
std::string serialize_db(const DbSnapshot& db);
std::uint64_t fnv1a64(const std::string& s);

// One node's replica of the configuration database. version is the gseq of
// the last applied write; writes arrive in gseq order but with holes, since
// view installs consume sequence numbers on the same channel.
class DbReplica {
 public:
  void apply(const DbLogEntry& e);
  std::optional<std::string> get(const std::string& path) const;
  // All keys under "prefix/" (used for per-virtual-server subtrees).
  std::vector<std::pair<std::string, std::string>> subtree(
      const std::string& prefix) const;

  Gseq version() const { return version_; }
  const DbSnapshot& state() const { return state_; }
  std::string serialize() const { return serialize_db(state_); }
  std::uint64_t digest() const { return fnv1a64(serialize()); }

  void load(DbSnapshot snap, Gseq version);

 private:
  DbSnapshot state_;
  Gseq version_ = 0;
};

// The master copy on the quorum device: a checkpoint plus the log of writes
// since. Restore replays the log over the checkpoint.
struct MasterLog {
  DbSnapshot checkpoint;
  Gseq checkpoint_version = 0;
  std::vector<DbLogEntry> log;
  Epoch last_epoch = 0;          // highest view install seen by an owner
  std::uint64_t incarnation = 0; // bumped every time a cluster forms

  void append(const DbLogEntry& e, int checkpoint_interval);
  DbSnapshot restore_state() const;
  Gseq restore_version() const;
};

}  // namespace clussim
