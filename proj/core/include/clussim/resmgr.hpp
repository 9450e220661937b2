// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "clussim/kernel.hpp"
#include "clussim/specs.hpp"
#include "clussim/types.hpp"

namespace clussim {

class Node;

enum class ResState { Offline, OnlinePending, Online, OfflinePending, Failed };
const char* to_string(ResState s);

// Scripted behavior of the world behind resource control callbacks: which
// resources are healthy, globally or at one node. Tests and scenarios poke
// this; the resource manager only ever asks alive(). A one-shot failure is
// consumed by the next health check (a transient crash the restart policy
// rides out); the sticky forms persist until fix().
struct ControlScript {
  std::set<ResourceId> dead_everywhere;
  std::set<std::pair<ResourceId, NodeId>> dead_at;
  std::set<ResourceId> dead_once;

  bool alive(const ResourceId& rid, NodeId node) {
    if (dead_once.erase(rid)) return false;
    return dead_everywhere.count(rid) == 0 &&
           dead_at.count({rid, node}) == 0;
  }
  void fail(const ResourceId& rid) { dead_everywhere.insert(rid); }
  void fail_at(const ResourceId& rid, NodeId n) { dead_at.insert({rid, n}); }
  void fail_once(const ResourceId& rid) { dead_once.insert(rid); }
  void fix(const ResourceId& rid) {
    dead_everywhere.erase(rid);
    dead_once.erase(rid);
    for (auto it = dead_at.begin(); it != dead_at.end();)
      it = (it->first == rid) ? dead_at.erase(it) : std::next(it);
  }
};

// Per-node resource manager: hosts the groups this node owns, drives the
// five-state resource machine, enforces dependency order, restarts failed
// resources within policy and escalates to failover past it.
class ResourceManager {
 public:
  explicit ResourceManager(Node* node) : node_(node) {}

  enum class GroupStatus { Absent, Onlining, Online, Offlining, Offline };

  // Bring a group online here (members in dependency order). done(true)
  // once every member is Online; done(false) if onlining gave up.
  void take_group(const GroupId& g, std::function<void(bool)> done);
  // Offline every member (reverse order) and forget the group.
  void drop_group(const GroupId& g, std::function<void()> done);
  void drop_all(std::function<void()> done);

  bool hosts(const GroupId& g) const { return groups_.count(g) > 0; }
  GroupStatus group_status(const GroupId& g) const;
  ResState state_of(const ResourceId& rid) const;

  // Operator actions, valid only on the owning node.
  bool operator_online(const ResourceId& rid);
  bool operator_offline(const ResourceId& rid);

  void on_timer(const TimerTag& tag, Tick now);
  void reset();

  int restarts_recorded(const ResourceId& rid) const;

 private:
  struct ResRuntime {
    ResState state = ResState::Offline;
    std::vector<Tick> restart_times;
    EventHandle step_timer, poll_timer;
  };
  struct Step {
    ResourceId rid;
    bool online = true;
  };
  struct GroupRuntime {
    GroupStatus status = GroupStatus::Offline;
    std::map<ResourceId, ResRuntime> res;
    std::deque<Step> steps;
    bool stepping = false;
    std::function<void(bool)> online_done;
    std::function<void()> offline_done;
  };

  GroupRuntime* group_of(const ResourceId& rid);
  void set_state(const GroupId& g, const ResourceId& rid, ResState s);
  void run_steps(const GroupId& g);
  void finish_step(const GroupId& g, const ResourceId& rid, bool online_op);
  void start_poll(const GroupId& g, const ResourceId& rid);
  void handle_failure(const GroupId& g, const ResourceId& rid);
  void enqueue_cascade_restart(const GroupId& g, const ResourceId& rid);

  Node* node_;
  std::map<GroupId, GroupRuntime> groups_;
};

}  // namespace clussim
