// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/cluster.hpp"

#include <cmath>
#include <cstdlib>
#include <utility>

#include "clussim/vserver.hpp"

namespace clussim {

Cluster::Cluster(ClusterSpec spec, ClusterConfig config, std::uint64_t seed)
    : config_(config),
      spec_(std::move(spec)),
      kernel_(seed, config.event_ceiling, config.quiescence_window) {
  kernel_.set_default_delay(config_.base_delay);
  ensure_vserver_resources(spec_);
  device_ =
      std::make_unique<QuorumDevice>(&kernel_, config_.checkpoint_interval);
  kernel_.register_target(kDeviceId, device_.get());
  for (NodeId n : spec_.defined_nodes) {
    nodes_[n] = std::make_unique<Node>(n, this);
    kernel_.register_target(n, nodes_[n].get());
  }
}

Cluster::Cluster(const Scenario& sc) : Cluster(sc.spec, sc.config, sc.seed) {
  wire_topology(sc.links);
}

void Cluster::wire_topology(
    const std::map<std::pair<NodeId, NodeId>, LinkState>& links) {
  for (const auto& [ab, ls] : links) {
    LinkState l = ls;
    if (l.delay == 0) l.delay = config_.base_delay;
    kernel_.add_link(ab.first, ab.second, l);
  }
}


Node& Cluster::node(NodeId id) { return *nodes_.at(id); }
const Node& Cluster::node(NodeId id) const { return *nodes_.at(id); }

NodeSet Cluster::online_members() const {
  NodeSet out;
  for (const auto& [id, n] : nodes_)
    if (n->phase() == NodePhase::Online) out.push_back(id);
  return out;
}

NodeSet Cluster::live_members() const {
  NodeSet out;
  for (const auto& [id, n] : nodes_)
    if (n->is_member()) out.push_back(id);
  return out;
}

Node* Cluster::any_member() {
  for (auto& [id, n] : nodes_)
    if (n->phase() == NodePhase::Online && !kernel_.is_crashed(id))
      return n.get();
  return nullptr;
}

RunResult Cluster::run_until(Tick t) {
  SimKernel::RunLimit lim;
  lim.until_quiescence = false;
  lim.until_tick = t;
  return kernel_.run(lim);
}

RunResult Cluster::run_to_quiescence() {
  SimKernel::RunLimit lim;
  lim.until_quiescence = true;
  return kernel_.run(lim);
}

// ----------------------------------------------------------- operator verbs

void Cluster::op_start(NodeId n) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=start");
  node(n).power_on();
}

void Cluster::op_crash(NodeId n) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=crash");
  kernel_.crash(n);
  node(n).hard_reset();
}

void Cluster::op_revive(NodeId n) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=revive");
  kernel_.revive(n);
  node(n).power_on();  // the service restarts with the machine
}

void Cluster::op_leave(NodeId n) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=leave");
  node(n).membership().leave_cluster("operator");
}

void Cluster::op_evict(NodeId n) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=evict");
  for (auto& [id, np] : nodes_) {
    if (id == n || !np->is_member() || np->membership().regrouping()) continue;
    np->membership().evict(n);
    return;
  }
}

void Cluster::op_pause(NodeId n) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=pause");
  node(n).membership().pause();
}

void Cluster::op_resume(NodeId n) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=resume");
  node(n).membership().resume();
}

void Cluster::op_partition(const std::vector<NodeSet>& groups) {
  std::string detail = "op=partition";
  for (const auto& g : groups) detail += " set=" + join_ids(g);
  kernel_.trace().emit(kernel_.now(), 0, "CMD", detail);
  kernel_.partition(groups);
}

void Cluster::op_heal() {
  kernel_.trace().emit(kernel_.now(), 0, "CMD", "op=heal");
  kernel_.heal();
}

void Cluster::op_dropnext(NodeId a, NodeId b, int iface, int count) {
  kernel_.trace().emit(kernel_.now(), a, "CMD",
                       "op=dropnext to=" + std::to_string(b) +
                           " iface=" + std::to_string(iface) +
                           " count=" + std::to_string(count));
  kernel_.drop_next(a, b, iface, count);
}

void Cluster::op_delaylink(NodeId a, NodeId b, Tick extra) {
  kernel_.trace().emit(kernel_.now(), a, "CMD",
                       "op=delaylink to=" + std::to_string(b) +
                           " extra=" + std::to_string(extra));
  kernel_.delay_link(a, b, extra);
  kernel_.delay_link(b, a, extra);
}

void Cluster::op_quorum_available(bool up) {
  kernel_.trace().emit(kernel_.now(), kDeviceId, "CMD",
                       up ? "op=quorumup" : "op=quorumdown");
  device_->set_available(up);
}

void Cluster::op_drift(NodeId n, std::int64_t delta) {
  kernel_.trace().emit(kernel_.now(), n, "CMD",
                       "op=drift delta=" + std::to_string(delta));
  node(n).timesync().drift(delta);
}

void Cluster::op_update(NodeId n, const std::string& key,
                        const std::string& value) {
  kernel_.trace().emit(kernel_.now(), n, "CMD",
                       "op=update key=" + key + " value=" + value);
  if (node(n).is_member()) node(n).glup().begin_update(DbWrite{key, value});
}

void Cluster::op_logevent(NodeId n, const std::string& text) {
  kernel_.trace().emit(kernel_.now(), n, "CMD", "op=logevent text=" + text);
  node(n).events().log_local(text);
}

void Cluster::op_movegroup(const GroupId& g, NodeId target) {
  kernel_.trace().emit(kernel_.now(), 0, "CMD",
                       "op=movegroup group=" + g +
                           " to=" + std::to_string(target));
  NodeId owner = group_owner(g);
  if (owner != 0) {
    node(owner).failover().operator_move(g, target);
    return;
  }
  if (Node* m = any_member()) m->failover().placement_pass("operator");
}

void Cluster::op_online(const ResourceId& rid) {
  kernel_.trace().emit(kernel_.now(), 0, "CMD", "op=online rid=" + rid);
  auto it = spec_.resources.find(rid);
  if (it == spec_.resources.end()) return;
  NodeId owner = group_owner(it->second.group);
  if (owner != 0) node(owner).resmgr().operator_online(rid);
}

void Cluster::op_offline(const ResourceId& rid) {
  kernel_.trace().emit(kernel_.now(), 0, "CMD", "op=offline rid=" + rid);
  auto it = spec_.resources.find(rid);
  if (it == spec_.resources.end()) return;
  NodeId owner = group_owner(it->second.group);
  if (owner != 0) node(owner).resmgr().operator_offline(rid);
}

void Cluster::op_failres(const ResourceId& rid, NodeId at_node) {
  kernel_.trace().emit(kernel_.now(), at_node, "CMD", "op=failres rid=" + rid);
  // Plain failres is a transient crash; "on <id>" breaks the resource at
  // that host until fixres.
  if (at_node == 0)
    script_.fail_once(rid);
  else
    script_.fail_at(rid, at_node);
}

void Cluster::op_fixres(const ResourceId& rid) {
  kernel_.trace().emit(kernel_.now(), 0, "CMD", "op=fixres rid=" + rid);
  script_.fix(rid);
}

ResolveResult Cluster::op_probe(const std::string& vname,
                                const std::string& svc) {
  ResolveResult r;
  Node* m = any_member();
  if (m) r = resolve_vserver(spec_, m->db(), m->view(), vname);
  std::string detail = "vname=" + vname + " svc=" + svc +
                       " available=" + (r.available ? "1" : "0");
  if (r.available)
    detail += " host=" + std::to_string(r.host) +
              " endpoint=" + remap_endpoint(vname, svc, r.host);
  kernel_.trace().emit(kernel_.now(), m ? m->id() : 0, "PROBE", detail);
  return r;
}

void Cluster::schedule_action(
    const ScenarioAction& a,
    std::function<void(Tick, const ScenarioAction&)> fn) {
  if (a.verb == "expect") {
    kernel_.schedule_assertion(a.at,
                               [fn, a](Tick t) { fn(t, a); });
    return;
  }
  kernel_.schedule_command(a.at, a.verb, [fn, a](Tick t) { fn(t, a); });
}

NodeId Cluster::group_owner(const GroupId& g) const {
  for (const auto& [id, n] : nodes_)
    if (n->is_member()) return n->failover().effective_owner(g);
  return 0;
}

std::int64_t Cluster::max_pairwise_skew() {
  std::vector<Tick> clocks;
  for (auto& [id, n] : nodes_)
    if (n->is_member() && !kernel_.is_crashed(id))
      clocks.push_back(n->timesync().adjusted_now());
  std::int64_t worst = 0;
  for (std::size_t i = 0; i < clocks.size(); ++i)
    for (std::size_t j = i + 1; j < clocks.size(); ++j) {
      std::int64_t d = static_cast<std::int64_t>(clocks[i]) -
                       static_cast<std::int64_t>(clocks[j]);
      worst = std::max(worst, d < 0 ? -d : d);
    }
  return worst;
}

}  // namespace clussim
