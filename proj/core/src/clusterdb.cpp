// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/clusterdb.hpp"

#include <stdexcept>

namespace clussim {

std::string serialize_db(const DbSnapshot& db) {
  std::string out;
  for (const auto& [k, v] : db) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void DbReplica::apply(const DbLogEntry& e) {
  if (e.gseq <= version_)
    throw std::logic_error("db write applied out of order");
  if (e.value.empty())
    state_.erase(e.path);
  else
    state_[e.path] = e.value;
  version_ = e.gseq;
}

std::optional<std::string> DbReplica::get(const std::string& path) const {
  auto it = state_.find(path);
  if (it == state_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, std::string>> DbReplica::subtree(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, std::string>> out;
  std::string p = prefix;
  if (p.empty() || p.back() != '/') p += '/';
  for (auto it = state_.lower_bound(p); it != state_.end(); ++it) {
    if (it->first.compare(0, p.size(), p) != 0) break;
    out.emplace_back(it->first, it->second);
  }
  return out;
}

void DbReplica::load(DbSnapshot snap, Gseq version) {
  state_ = std::move(snap);
  version_ = version;
}

void MasterLog::append(const DbLogEntry& e, int checkpoint_interval) {
  log.push_back(e);
  if (checkpoint_interval > 0 &&
      static_cast<int>(log.size()) >= checkpoint_interval) {
    checkpoint = restore_state();
    checkpoint_version = restore_version();
    log.clear();
  }
}

DbSnapshot MasterLog::restore_state() const {
  DbSnapshot s = checkpoint;
  for (const auto& e : log) {
    if (e.value.empty())
      s.erase(e.path);
    else
      s[e.path] = e.value;
  }
  return s;
}

Gseq MasterLog::restore_version() const {
  return log.empty() ? checkpoint_version : log.back().gseq;
}

}  // namespace clussim
