// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/failover.hpp"

#include <algorithm>
#include <utility>

#include "clussim/clusterdb.hpp"
#include "clussim/node.hpp"
#include "clussim/view.hpp"

namespace clussim {

namespace {

std::string owner_key(const GroupId& g) { return "groups/" + g + "/owner"; }

// Priority rank of a node in the preferred owner list; unlisted ranks last.
std::size_t pref_rank(const GroupSpec& gs, NodeId n) {
  for (std::size_t i = 0; i < gs.preferred_owners.size(); ++i)
    if (gs.preferred_owners[i] == n) return i;
  return gs.preferred_owners.size();
}

}  // namespace

std::optional<NodeId> select_host(const ClusterSpec& spec,
                                  const GroupSpec& group,
                                  const NodeSet& actives,
                                  const std::set<NodeId>& paused,
                                  NodeId exclude) {
  NodeSet eligible = intersect(spec.eligible_hosts(group.gid), actives);
  eligible.erase(std::remove_if(eligible.begin(), eligible.end(),
                                [&](NodeId n) {
                                  return n == exclude || paused.count(n) > 0;
                                }),
                 eligible.end());
  if (eligible.empty()) return std::nullopt;
  for (NodeId p : group.preferred_owners)
    if (contains(eligible, p)) return p;
  return eligible.front();
}

std::set<NodeId> paused_nodes(const DbReplica& db, const NodeSet& actives) {
  std::set<NodeId> out;
  for (NodeId n : actives)
    if (db.get("nodes/" + std::to_string(n) + "/paused")) out.insert(n);
  return out;
}

NodeId FailoverEngine::db_owner(const GroupId& g) const {
  auto v = node_->db().get(owner_key(g));
  if (!v || v->empty()) return 0;
  return std::stoi(*v);
}

NodeId FailoverEngine::effective_owner(const GroupId& g) const {
  NodeId owner = db_owner(g);
  return contains(node_->view().active_set, owner) ? owner : 0;
}

void FailoverEngine::write_owner(const GroupId& g, NodeId owner) {
  node_->glup().begin_update(
      DbWrite{owner_key(g), owner ? std::to_string(owner) : std::string()});
}

void FailoverEngine::placement_pass(const char* why) {
  if (!node_->is_member() || node_->membership().regrouping()) return;
  const NodeSet& actives = node_->view().active_set;
  std::set<NodeId> paused = paused_nodes(node_->db(), actives);
  for (const auto& [gid, gs] : node_->spec().groups) {
    if (effective_owner(gid) != 0) continue;
    auto chosen = select_host(node_->spec(), gs, actives, paused);
    if (!chosen) {
      last_assignment_.erase(gid);
      // Nobody can host it; the lowest member keeps the record truthful.
      if (db_owner(gid) != 0 && actives.front() == node_->id())
        write_owner(gid, 0);
      continue;
    }
    last_assignment_[gid] = *chosen;
    if (*chosen != node_->id()) continue;
    node_->trace("OWNER",
                 "group=" + gid + " take=" + std::to_string(*chosen) +
                     " why=" + why);
    acquire_group(gid);
  }
}

void FailoverEngine::acquire_group(const GroupId& g) {
  if (acquiring_.count(g)) return;
  acquiring_.insert(g);
  node_->resmgr().take_group(g, [this, g](bool ok) {
    acquiring_.erase(g);
    if (ok) group_now_online(g);
  });
}

void FailoverEngine::group_now_online(const GroupId& g) {
  if (!node_->is_member()) return;
  node_->trace("OWNER", "group=" + g + " online=" +
                            std::to_string(node_->id()));
  if (db_owner(g) != node_->id()) write_owner(g, node_->id());
  // A better-preferred member may already be waiting on its uptime.
  const auto& gs = node_->spec().groups.at(g);
  if (!gs.failback.enabled) return;
  for (NodeId n : node_->view().active_set) {
    if (n == node_->id()) continue;
    if (pref_rank(gs, n) >= pref_rank(gs, node_->id())) continue;
    auto it = online_since_.find(n);
    if (it == online_since_.end()) continue;
    Tick at = first_eligible(gs.failback, it->second);
    Tick now = node_->now();
    node_->timer(at > now ? at - now : 0, {TimerKind::Failback, n, g});
  }
}

void FailoverEngine::push_group(const GroupId& g, NodeId target,
                                const char* why) {
  node_->trace("OWNER", "group=" + g + " push=" + std::to_string(target) +
                            " why=" + why);
  node_->resmgr().drop_group(g, [this, g, target]() {
    if (target == node_->id()) {
      acquire_group(g);
      return;
    }
    write_owner(g, target);
    node_->rpc_call(
        target, TakeGroup{g}, [](NodeId, const Envelope&) {},
        [this, g, target]() { retry_failed_push(g, target); });
  });
}

void FailoverEngine::retry_failed_push(const GroupId& g, NodeId failed) {
  // The target never accepted. Free the record, then place the group
  // somewhere that answers; taking it back ourselves beats leaving it
  // homeless until the next membership event.
  write_owner(g, 0);
  node_->membership().maybe_reclaim_quorum();
  if (!node_->is_member() || node_->membership().regrouping()) return;
  auto gi = node_->spec().groups.find(g);
  if (gi == node_->spec().groups.end()) return;
  const NodeSet& actives = node_->view().active_set;
  std::set<NodeId> paused = paused_nodes(node_->db(), actives);
  auto chosen = select_host(node_->spec(), gi->second, actives, paused, failed);
  if (chosen && *chosen == node_->id()) {
    node_->trace("OWNER", "group=" + g + " take=" +
                              std::to_string(*chosen) + " why=push-failed");
    acquire_group(g);
  } else if (chosen) {
    push_group(g, *chosen, "push-retry");
  } else {
    placement_pass("push-failed");
  }
}

bool FailoverEngine::operator_move(const GroupId& g, NodeId target) {
  if (!node_->is_member() || node_->membership().regrouping()) return false;
  auto gi = node_->spec().groups.find(g);
  if (gi == node_->spec().groups.end()) return false;
  if (effective_owner(g) != node_->id()) return false;
  const NodeSet& actives = node_->view().active_set;
  std::set<NodeId> paused = paused_nodes(node_->db(), actives);
  if (target == 0) {
    auto chosen =
        select_host(node_->spec(), gi->second, actives, paused, node_->id());
    if (!chosen) return false;
    target = *chosen;
  } else {
    if (target == node_->id()) return true;
    if (!contains(actives, target) || paused.count(target)) return false;
    if (!contains(node_->spec().eligible_hosts(g), target)) return false;
  }
  push_group(g, target, "operator");
  return true;
}

void FailoverEngine::escalate_push(const GroupId& g) {
  if (!node_->is_member() || node_->membership().regrouping()) return;
  auto gi = node_->spec().groups.find(g);
  if (gi == node_->spec().groups.end()) return;
  const NodeSet& actives = node_->view().active_set;
  std::set<NodeId> paused = paused_nodes(node_->db(), actives);
  auto chosen =
      select_host(node_->spec(), gi->second, actives, paused, node_->id());
  if (!chosen) {
    node_->trace("OWNER", "group=" + g + " homeless why=escalate");
    if (db_owner(g) != 0) write_owner(g, 0);
    node_->membership().maybe_reclaim_quorum();
    return;
  }
  push_group(g, *chosen, "escalate");
}

void FailoverEngine::on_departure_install(NodeId departed) {
  if (departed != 0) {
    online_since_.erase(departed);
  } else {
    for (auto it = online_since_.begin(); it != online_since_.end();)
      it = contains(node_->view().active_set, it->first)
               ? std::next(it)
               : online_since_.erase(it);
  }
  placement_pass("pull");
}

void FailoverEngine::on_peer_joined(NodeId who, Tick now) {
  online_since_[who] = now;
  if (who == node_->id()) {
    // Members that joined before us: date them from our own admission, a
    // conservative floor that only delays failback.
    for (NodeId n : node_->view().active_set) online_since_.emplace(n, now);
  }
  if (!node_->is_member()) return;
  for (const auto& [gid, gs] : node_->spec().groups) {
    if (!gs.failback.enabled) continue;
    if (effective_owner(gid) != node_->id()) continue;
    if (pref_rank(gs, who) >= pref_rank(gs, node_->id())) continue;
    if (!contains(node_->spec().eligible_hosts(gid), who)) continue;
    Tick at = first_eligible(gs.failback, now);
    node_->timer(at > now ? at - now : 0, {TimerKind::Failback, who, gid});
  }
}

void FailoverEngine::on_take_group(NodeId from, std::uint64_t req,
                                   const TakeGroup& m) {
  if (!node_->is_member() || node_->membership().regrouping()) return;
  node_->respond(from, req, Ack{});
  acquire_group(m.gid);
}

void FailoverEngine::on_timer(const TimerTag& tag, Tick now) {
  if (tag.kind != TimerKind::Failback) return;
  const GroupId& g = tag.s;
  NodeId who = tag.a;
  if (!node_->is_member() || node_->membership().regrouping()) return;
  if (effective_owner(g) != node_->id()) return;
  if (!contains(node_->view().active_set, who)) return;
  auto gi = node_->spec().groups.find(g);
  if (gi == node_->spec().groups.end() || !gi->second.failback.enabled) return;
  if (pref_rank(gi->second, who) >= pref_rank(gi->second, node_->id())) return;
  std::set<NodeId> paused =
      paused_nodes(node_->db(), node_->view().active_set);
  if (paused.count(who)) return;
  auto it = online_since_.find(who);
  if (it == online_since_.end()) return;
  Tick at = first_eligible(gi->second.failback, it->second);
  if (at > now) {
    node_->timer(at - now, {TimerKind::Failback, who, g});
    return;
  }
  push_group(g, who, "failback");
}

Tick FailoverEngine::first_eligible(const FailbackPolicy& fb,
                                    Tick uptime_start) const {
  Tick t = uptime_start + fb.min_uptime;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const auto& [a, b] : fb.blackouts) {
      if (t >= a && t < b) {
        t = b;
        moved = true;
      }
    }
  }
  return t;
}

void FailoverEngine::reset() {
  last_assignment_.clear();
  online_since_.clear();
  acquiring_.clear();
}

}  // namespace clussim
