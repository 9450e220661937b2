// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "clussim/config.hpp"
#include "clussim/kernel.hpp"
#include "clussim/node.hpp"
#include "clussim/quorum.hpp"
#include "clussim/resmgr.hpp"
#include "clussim/scenario.hpp"
#include "clussim/specs.hpp"
#include "clussim/vserver.hpp"

namespace clussim {

// A whole simulated cluster: the kernel, one Node per defined member, the
// quorum device and the scripted world behind resource callbacks. Also the
// home of every operator verb a scenario can schedule.
class Cluster {
 public:
  Cluster(ClusterSpec spec, ClusterConfig config, std::uint64_t seed);
  explicit Cluster(const Scenario& sc);

  SimKernel& kernel() { return kernel_; }
  const ClusterConfig& config() const { return config_; }
  const ClusterSpec& spec() const { return spec_; }
  Node& node(NodeId id);
  const Node& node(NodeId id) const;
  QuorumDevice& device() { return *device_; }
  const QuorumDevice& device() const { return *device_; }
  ControlScript& script() { return script_; }

  NodeSet online_members() const;  // phase Online
  NodeSet live_members() const;    // Online or Paused
  // Lowest Online node, the deterministic stand-in for "ask the cluster".
  Node* any_member();

  RunResult run_until(Tick t);
  RunResult run_to_quiescence();

  // Operator verbs (each traces a CMD record).
  void op_start(NodeId n);
  void op_crash(NodeId n);
  void op_revive(NodeId n);
  void op_leave(NodeId n);
  void op_evict(NodeId n);
  void op_pause(NodeId n);
  void op_resume(NodeId n);
  void op_partition(const std::vector<NodeSet>& groups);
  void op_heal();
  void op_dropnext(NodeId a, NodeId b, int iface, int count);
  void op_delaylink(NodeId a, NodeId b, Tick extra);
  void op_quorum_available(bool up);
  void op_drift(NodeId n, std::int64_t delta);
  void op_update(NodeId n, const std::string& key, const std::string& value);
  void op_logevent(NodeId n, const std::string& text);
  void op_movegroup(const GroupId& g, NodeId target);  // 0 = auto
  void op_online(const ResourceId& rid);
  void op_offline(const ResourceId& rid);
  void op_failres(const ResourceId& rid, NodeId at_node);  // 0 = one-shot
  void op_fixres(const ResourceId& rid);
  ResolveResult op_probe(const std::string& vname, const std::string& svc);

  // Schedules a scenario action for execution at its tick.
  void schedule_action(const ScenarioAction& a,
                       std::function<void(Tick, const ScenarioAction&)> fn);

  // Introspection used by assertions and tests.
  NodeId group_owner(const GroupId& g) const;  // effective, via any member
  std::int64_t max_pairwise_skew();  // adjusted clock reads are not const

 private:
  void wire_topology(const std::map<std::pair<NodeId, NodeId>, LinkState>&);

  ClusterConfig config_;
  ClusterSpec spec_;
  SimKernel kernel_;
  std::unique_ptr<QuorumDevice> device_;
  std::map<NodeId, std::unique_ptr<Node>> nodes_;
  ControlScript script_;
};

}  // namespace clussim
