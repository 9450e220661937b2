// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/resmgr.hpp"

#include <algorithm>
#include <utility>

#include "clussim/cluster.hpp"
#include "clussim/node.hpp"

namespace clussim {

const char* to_string(ResState s) {
  switch (s) {
    case ResState::Offline: return "offline";
    case ResState::OnlinePending: return "online-pending";
    case ResState::Online: return "online";
    case ResState::OfflinePending: return "offline-pending";
    case ResState::Failed: return "failed";
  }
  return "?";
}

ResourceManager::GroupRuntime* ResourceManager::group_of(
    const ResourceId& rid) {
  auto rs = node_->spec().resources.find(rid);
  if (rs == node_->spec().resources.end()) return nullptr;
  auto it = groups_.find(rs->second.group);
  return it == groups_.end() ? nullptr : &it->second;
}

ResourceManager::GroupStatus ResourceManager::group_status(
    const GroupId& g) const {
  auto it = groups_.find(g);
  return it == groups_.end() ? GroupStatus::Absent : it->second.status;
}

ResState ResourceManager::state_of(const ResourceId& rid) const {
  auto rs = node_->spec().resources.find(rid);
  if (rs == node_->spec().resources.end()) return ResState::Offline;
  auto it = groups_.find(rs->second.group);
  if (it == groups_.end()) return ResState::Offline;
  auto r = it->second.res.find(rid);
  return r == it->second.res.end() ? ResState::Offline : r->second.state;
}

int ResourceManager::restarts_recorded(const ResourceId& rid) const {
  auto rs = node_->spec().resources.find(rid);
  if (rs == node_->spec().resources.end()) return 0;
  auto it = groups_.find(rs->second.group);
  if (it == groups_.end()) return 0;
  auto r = it->second.res.find(rid);
  return r == it->second.res.end()
             ? 0
             : static_cast<int>(r->second.restart_times.size());
}

void ResourceManager::set_state(const GroupId& g, const ResourceId& rid,
                                ResState s) {
  auto& rt = groups_[g].res[rid];
  if (rt.state == s) return;
  rt.state = s;
  node_->trace("RES", "rid=" + rid + " state=" + to_string(s));
}

void ResourceManager::take_group(const GroupId& g,
                                 std::function<void(bool)> done) {
  auto it = groups_.find(g);
  if (it != groups_.end()) {
    GroupRuntime& gr = it->second;
    if (gr.status == GroupStatus::Online) {
      if (done) done(true);
      return;
    }
    if (gr.status == GroupStatus::Onlining) {
      // A pass re-requested a group already coming up: piggyback.
      if (done) {
        auto prev = std::move(gr.online_done);
        gr.online_done = [prev = std::move(prev),
                          done = std::move(done)](bool ok) {
          if (prev) prev(ok);
          done(ok);
        };
      }
      return;
    }
    // Racing a drop; the caller retries on a later pass.
    if (done) done(false);
    return;
  }
  GroupRuntime& gr = groups_[g];
  gr.status = GroupStatus::Onlining;
  gr.online_done = std::move(done);
  for (const ResourceId& rid : online_order(node_->spec(), g)) {
    gr.res[rid];  // materialize as Offline
    gr.steps.push_back({rid, true});
  }
  run_steps(g);
}

void ResourceManager::drop_group(const GroupId& g,
                                 std::function<void()> done) {
  auto it = groups_.find(g);
  if (it == groups_.end()) {
    if (done) done();
    return;
  }
  GroupRuntime& gr = it->second;
  if (auto online_done = std::move(gr.online_done)) online_done(false);
  gr.online_done = nullptr;
  gr.steps.clear();
  gr.stepping = false;
  for (auto& [rid, rt] : gr.res) {
    node_->cancel(rt.step_timer);
    node_->cancel(rt.poll_timer);
  }
  gr.status = GroupStatus::Offlining;
  if (done) {
    auto prev = std::move(gr.offline_done);
    gr.offline_done = [prev = std::move(prev), done = std::move(done)]() {
      if (prev) prev();
      done();
    };
  }
  auto order = online_order(node_->spec(), g);
  for (auto rit = order.rbegin(); rit != order.rend(); ++rit)
    gr.steps.push_back({*rit, false});
  run_steps(g);
}

void ResourceManager::drop_all(std::function<void()> done) {
  if (groups_.empty()) {
    if (done) done();
    return;
  }
  GroupId g = groups_.begin()->first;
  drop_group(g, [this, done = std::move(done)]() { drop_all(done); });
}

void ResourceManager::run_steps(const GroupId& g) {
  auto it = groups_.find(g);
  if (it == groups_.end()) return;
  GroupRuntime& gr = it->second;
  if (gr.stepping) return;
  while (!gr.steps.empty()) {
    Step s = gr.steps.front();
    ResState cur = gr.res[s.rid].state;
    if ((s.online && cur == ResState::Online) ||
        (!s.online && cur == ResState::Offline)) {
      gr.steps.pop_front();  // already there, free step
      continue;
    }
    gr.steps.pop_front();
    const ResourceSpec& spec = node_->spec().resources.at(s.rid);
    Tick delay = s.online ? (spec.online_delay ? spec.online_delay
                                               : node_->cfg().resource_online_delay)
                          : node_->cfg().resource_offline_delay;
    set_state(g, s.rid,
              s.online ? ResState::OnlinePending : ResState::OfflinePending);
    gr.stepping = true;
    gr.res[s.rid].step_timer = node_->timer(
        delay, TimerTag{TimerKind::ResourceStep, s.online ? 1 : 0, s.rid});
    return;
  }
  // Queue drained with no step in flight: settle the group transition.
  if (gr.status == GroupStatus::Onlining) {
    gr.status = GroupStatus::Online;
    if (auto done = std::move(gr.online_done)) {
      gr.online_done = nullptr;
      done(true);
    }
  } else if (gr.status == GroupStatus::Offlining) {
    auto done = std::move(gr.offline_done);
    groups_.erase(g);
    if (done) done();
  }
}

void ResourceManager::finish_step(const GroupId& g, const ResourceId& rid,
                                  bool online_op) {
  auto it = groups_.find(g);
  if (it == groups_.end()) return;
  GroupRuntime& gr = it->second;
  const ResourceSpec& spec = node_->spec().resources.at(rid);
  if (!online_op) {
    gr.stepping = false;
    node_->cancel(gr.res[rid].poll_timer);
    set_state(g, rid, ResState::Offline);
    // Offlining the quorum resource hands the device back; a successor can
    // then claim without waiting out a challenge.
    if (spec.is_quorum && node_->arb().lease_owned()) node_->arb().release();
    run_steps(g);
    return;
  }
  if (!node_->cluster().script().alive(rid, node_->id())) {
    gr.stepping = false;
    handle_failure(g, rid);
    return;
  }
  if (spec.is_quorum && !node_->arb().lease_owned()) {
    if (node_->arb().in_progress()) {
      gr.stepping = false;
      handle_failure(g, rid);
      return;
    }
    // The step stays in flight until arbitration settles.
    node_->arb().arbitrate([this, g, rid](Arbitrator::Outcome o) {
      auto it2 = groups_.find(g);
      if (it2 == groups_.end()) return;
      auto r = it2->second.res.find(rid);
      if (r == it2->second.res.end() ||
          r->second.state != ResState::OnlinePending)
        return;
      it2->second.stepping = false;
      if (o == Arbitrator::Outcome::Won) {
        set_state(g, rid, ResState::Online);
        start_poll(g, rid);
        run_steps(g);
      } else {
        handle_failure(g, rid);
      }
    });
    return;
  }
  gr.stepping = false;
  set_state(g, rid, ResState::Online);
  start_poll(g, rid);
  run_steps(g);
}

void ResourceManager::start_poll(const GroupId& g, const ResourceId& rid) {
  const ResourceSpec& spec = node_->spec().resources.at(rid);
  Tick period =
      spec.poll_period ? spec.poll_period : node_->cfg().monitor_poll_period;
  groups_[g].res[rid].poll_timer = node_->timer(
      period, TimerTag{TimerKind::MonitorPoll, 0, rid}, /*background=*/true);
}

void ResourceManager::handle_failure(const GroupId& g, const ResourceId& rid) {
  auto it = groups_.find(g);
  if (it == groups_.end()) return;
  GroupRuntime& gr = it->second;
  ResRuntime& rt = gr.res[rid];
  node_->cancel(rt.poll_timer);
  node_->cancel(rt.step_timer);
  set_state(g, rid, ResState::Failed);
  const RestartPolicy& policy = node_->spec().resources.at(rid).restart;
  Tick now = node_->now();
  auto& times = rt.restart_times;
  times.erase(std::remove_if(times.begin(), times.end(),
                             [&](Tick t) { return t + policy.window <= now; }),
              times.end());
  if (static_cast<int>(times.size()) < policy.max_restarts) {
    times.push_back(now);
    enqueue_cascade_restart(g, rid);
    run_steps(g);
    return;
  }
  // Policy exhausted. Either push the whole group to another host or park
  // the resource as Failed with its dependents offline.
  if (policy.then_escalate) {
    if (auto done = std::move(gr.online_done)) done(false);
    gr.online_done = nullptr;
    gr.steps.clear();
    gr.status = GroupStatus::Offlining;
    auto prev = std::move(gr.offline_done);
    gr.offline_done = [this, g, prev = std::move(prev)]() {
      if (prev) prev();
      node_->failover().escalate_push(g);
    };
    auto order = online_order(node_->spec(), g);
    for (auto rit = order.rbegin(); rit != order.rend(); ++rit)
      gr.steps.push_back({*rit, false});
    run_steps(g);
    return;
  }
  // Strip the failed resource's dependents; the rest of the group stays up.
  auto deps = dependents_of(node_->spec(), rid);
  for (auto rit = deps.rbegin(); rit != deps.rend(); ++rit)
    gr.steps.push_back({*rit, false});
  run_steps(g);
}

void ResourceManager::enqueue_cascade_restart(const GroupId& g,
                                              const ResourceId& rid) {
  GroupRuntime& gr = groups_[g];
  auto deps = dependents_of(node_->spec(), rid);
  for (auto rit = deps.rbegin(); rit != deps.rend(); ++rit)
    gr.steps.push_back({*rit, false});
  gr.steps.push_back({rid, true});
  for (const ResourceId& d : deps) gr.steps.push_back({d, true});
}

bool ResourceManager::operator_online(const ResourceId& rid) {
  auto rs = node_->spec().resources.find(rid);
  if (rs == node_->spec().resources.end()) return false;
  const GroupId& g = rs->second.group;
  auto it = groups_.find(g);
  if (it == groups_.end() || it->second.status == GroupStatus::Offlining)
    return false;
  // Providers first: the transitive closure of depends_on, in online order.
  std::set<ResourceId> need{rid};
  std::vector<ResourceId> frontier{rid};
  while (!frontier.empty()) {
    ResourceId r = frontier.back();
    frontier.pop_back();
    for (const ResourceId& d : node_->spec().resources.at(r).depends_on)
      if (need.insert(d).second) frontier.push_back(d);
  }
  for (const ResourceId& r : online_order(node_->spec(), g))
    if (need.count(r)) it->second.steps.push_back({r, true});
  run_steps(g);
  return true;
}

bool ResourceManager::operator_offline(const ResourceId& rid) {
  auto rs = node_->spec().resources.find(rid);
  if (rs == node_->spec().resources.end()) return false;
  const GroupId& g = rs->second.group;
  auto it = groups_.find(g);
  if (it == groups_.end() || it->second.status == GroupStatus::Offlining)
    return false;
  auto deps = dependents_of(node_->spec(), rid);
  for (auto rit = deps.rbegin(); rit != deps.rend(); ++rit)
    it->second.steps.push_back({*rit, false});
  it->second.steps.push_back({rid, false});
  run_steps(g);
  return true;
}

void ResourceManager::on_timer(const TimerTag& tag, Tick now) {
  (void)now;
  const ResourceId& rid = tag.s;
  auto rs = node_->spec().resources.find(rid);
  if (rs == node_->spec().resources.end()) return;
  const GroupId& g = rs->second.group;
  if (tag.kind == TimerKind::ResourceStep) {
    finish_step(g, rid, tag.a == 1);
    return;
  }
  if (tag.kind == TimerKind::MonitorPoll) {
    auto it = groups_.find(g);
    if (it == groups_.end()) return;
    auto r = it->second.res.find(rid);
    if (r == it->second.res.end() || r->second.state != ResState::Online)
      return;
    bool ok = node_->cluster().script().alive(rid, node_->id());
    if (ok && rs->second.is_quorum) ok = node_->arb().lease_owned();
    if (!ok) {
      handle_failure(g, rid);
      return;
    }
    start_poll(g, rid);
  }
}

void ResourceManager::reset() {
  for (auto& [g, gr] : groups_) {
    for (auto& [rid, rt] : gr.res) {
      node_->cancel(rt.step_timer);
      node_->cancel(rt.poll_timer);
    }
  }
  groups_.clear();
}

}  // namespace clussim
