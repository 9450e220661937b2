// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clussim/types.hpp"

namespace clussim {

enum class ResourceType { PhysDisk, IpAddr, NetName, GenericApp };
const char* to_string(ResourceType t);
std::optional<ResourceType> resource_type_from(const std::string& s);

struct RestartPolicy {
  int max_restarts = 3;
  Tick window = 1000;
  bool then_escalate = true;
};

// Static description of one resource, shared by every node (it is part of
// the cluster configuration, not of any replica's dynamic state).
struct ResourceSpec {
  ResourceId rid;
  ResourceType type = ResourceType::GenericApp;
  GroupId group;
  std::vector<ResourceId> depends_on;  // providers this resource needs
  NodeSet possible_hosts;              // empty means every defined node
  RestartPolicy restart;
  Tick poll_period = 0;    // 0: use config default
  Tick online_delay = 0;   // 0: use config default
  bool is_quorum = false;  // binds the group to quorum device ownership
};

struct FailbackPolicy {
  bool enabled = false;
  Tick min_uptime = 0;
  // Closed-open intervals of virtual time in which failback must not run.
  std::vector<std::pair<Tick, Tick>> blackouts;
};

struct GroupSpec {
  GroupId gid;
  NodeSet preferred_owners;  // ordered by priority
  FailbackPolicy failback;
};

struct VServerSpec {
  std::string name;
  GroupId group;
  std::string ip;
};

// Immutable cluster-wide configuration assembled from a scenario: the
// defined members plus every resource, group and virtual server.
struct ClusterSpec {
  NodeSet defined_nodes;
  std::map<ResourceId, ResourceSpec> resources;
  std::map<GroupId, GroupSpec> groups;
  std::map<std::string, VServerSpec> vservers;

  std::vector<ResourceId> members_of(const GroupId& g) const;
  // Nodes able to host the whole group: the intersection of the members'
  // possible host sets (resources of a group always move together).
  NodeSet eligible_hosts(const GroupId& g) const;
  const VServerSpec* vserver_of_group(const GroupId& g) const;
  bool group_has_quorum_resource(const GroupId& g) const;
};

// Every virtual server implies an address resource ("<name>-ip") and a name
// resource ("<name>-name" depending on it) in its group; this materializes
// the pair wherever the scenario did not declare them explicitly.
void ensure_vserver_resources(ClusterSpec& spec);

// Configuration validation (dependency cycles, cross-group dependencies,
// unknown ids). Returns human-readable problems; empty means valid.
std::vector<std::string> validate_spec(const ClusterSpec& spec);

// Deterministic bring-up order for the resources of one group: providers
// before dependents, ties broken by resource id. Throws std::logic_error
// if the dependency graph has a cycle.
std::vector<ResourceId> online_order(const ClusterSpec& spec,
                                     const GroupId& g);

// Transitive dependents of `rid` inside its group (everything that must
// restart when `rid` restarts), in online order.
std::vector<ResourceId> dependents_of(const ClusterSpec& spec,
                                      const ResourceId& rid);

}  // namespace clussim
