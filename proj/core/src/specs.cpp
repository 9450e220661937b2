// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/specs.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace clussim {

const char* to_string(ResourceType t) {
  switch (t) {
    case ResourceType::PhysDisk: return "phys-disk";
    case ResourceType::IpAddr: return "ip-addr";
    case ResourceType::NetName: return "net-name";
    case ResourceType::GenericApp: return "generic-app";
  }
  return "?";
}

std::optional<ResourceType> resource_type_from(const std::string& s) {
  if (s == "phys-disk" || s == "physdisk") return ResourceType::PhysDisk;
  if (s == "ip-addr" || s == "ipaddr") return ResourceType::IpAddr;
  if (s == "net-name" || s == "netname") return ResourceType::NetName;
  if (s == "generic-app" || s == "app") return ResourceType::GenericApp;
  return std::nullopt;
}

void ensure_vserver_resources(ClusterSpec& spec) {
  // The name resource publishes only once the address is up.
  for (const auto& [vname, vs] : spec.vservers) {
    ResourceId ip = vname + "-ip";
    ResourceId nm = vname + "-name";
    if (!spec.resources.count(ip)) {
      ResourceSpec r;
      r.rid = ip;
      r.type = ResourceType::IpAddr;
      r.group = vs.group;
      spec.resources.emplace(ip, std::move(r));
    }
    if (!spec.resources.count(nm)) {
      ResourceSpec r;
      r.rid = nm;
      r.type = ResourceType::NetName;
      r.group = vs.group;
      r.depends_on = {ip};
      spec.resources.emplace(nm, std::move(r));
    }
  }
}

std::vector<ResourceId> ClusterSpec::members_of(const GroupId& g) const {
  std::vector<ResourceId> out;
  for (const auto& [rid, r] : resources)
    if (r.group == g) out.push_back(rid);
  return out;  // map iteration: already sorted by rid
}

NodeSet ClusterSpec::eligible_hosts(const GroupId& g) const {
  NodeSet hosts = defined_nodes;
  for (const auto& [rid, r] : resources) {
    if (r.group != g || r.possible_hosts.empty()) continue;
    hosts = intersect(hosts, r.possible_hosts);
  }
  return hosts;
}

const VServerSpec* ClusterSpec::vserver_of_group(const GroupId& g) const {
  for (const auto& [name, vs] : vservers)
    if (vs.group == g) return &vs;
  return nullptr;
}

bool ClusterSpec::group_has_quorum_resource(const GroupId& g) const {
  for (const auto& [rid, r] : resources)
    if (r.group == g && r.is_quorum) return true;
  return false;
}

std::vector<std::string> validate_spec(const ClusterSpec& spec) {
  std::vector<std::string> problems;
  int quorum_resources = 0;
  for (const auto& [rid, r] : spec.resources) {
    if (spec.groups.count(r.group) == 0)
      problems.push_back("resource " + rid + ": unknown group " + r.group);
    if (r.is_quorum) {
      ++quorum_resources;
      if (r.type != ResourceType::PhysDisk)
        problems.push_back("resource " + rid +
                           ": quorum resource must be a phys-disk");
    }
    for (NodeId h : r.possible_hosts)
      if (!contains(spec.defined_nodes, h))
        problems.push_back("resource " + rid + ": unknown host " +
                           std::to_string(h));
    for (const auto& dep : r.depends_on) {
      auto it = spec.resources.find(dep);
      if (it == spec.resources.end()) {
        problems.push_back("resource " + rid + ": unknown dependency " + dep);
      } else if (it->second.group != r.group) {
        // dependencies never cross groups: the group is the failover unit
        problems.push_back("resource " + rid + ": dependency " + dep +
                           " is outside group " + r.group);
      }
    }
  }
  if (quorum_resources > 1)
    problems.push_back("more than one quorum resource defined");

  for (const auto& [gid, g] : spec.groups) {
    NodeSet possible_union;
    for (const auto& rid : spec.members_of(gid)) {
      const auto& ph = spec.resources.at(rid).possible_hosts;
      if (ph.empty()) {
        possible_union = spec.defined_nodes;
      } else {
        for (NodeId h : ph) insert_sorted(possible_union, h);
      }
    }
    if (spec.members_of(gid).empty()) possible_union = spec.defined_nodes;
    for (NodeId p : g.preferred_owners)
      if (!contains(possible_union, p))
        problems.push_back("group " + gid + ": preferred owner " +
                           std::to_string(p) +
                           " cannot host any member resource");
    for (const auto& [b0, b1] : g.failback.blackouts)
      if (b1 <= b0)
        problems.push_back("group " + gid + ": empty blackout interval");
    // cycle check happens in online_order below
    try {
      online_order(spec, gid);
    } catch (const std::logic_error& e) {
      problems.push_back("group " + gid + ": " + e.what());
    }
  }

  for (const auto& [name, vs] : spec.vservers) {
    if (spec.groups.count(vs.group) == 0)
      problems.push_back("vserver " + name + ": unknown group " + vs.group);
  }
  return problems;
}

std::vector<ResourceId> online_order(const ClusterSpec& spec,
                                     const GroupId& g) {
  std::vector<ResourceId> members = spec.members_of(g);
  std::map<ResourceId, int> missing;  // unsatisfied providers per resource
  std::map<ResourceId, std::vector<ResourceId>> dependents;
  for (const auto& rid : members) {
    int deps = 0;
    for (const auto& d : spec.resources.at(rid).depends_on) {
      if (spec.resources.count(d) == 0 || spec.resources.at(d).group != g)
        continue;  // reported by validate_spec
      ++deps;
      dependents[d].push_back(rid);
    }
    missing[rid] = deps;
  }
  // Kahn's algorithm with an always-sorted ready set: deterministic order,
  // providers first, ties by resource id.
  std::set<ResourceId> ready;
  for (const auto& [rid, n] : missing)
    if (n == 0) ready.insert(rid);
  std::vector<ResourceId> order;
  while (!ready.empty()) {
    ResourceId rid = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(rid);
    for (const auto& dep : dependents[rid])
      if (--missing[dep] == 0) ready.insert(dep);
  }
  if (order.size() != members.size())
    throw std::logic_error("dependency cycle among resources");
  return order;
}

std::vector<ResourceId> dependents_of(const ClusterSpec& spec,
                                      const ResourceId& rid) {
  const GroupId& g = spec.resources.at(rid).group;
  std::vector<ResourceId> order = online_order(spec, g);
  std::set<ResourceId> affected = {rid};
  // order is topological, so one forward pass closes the set
  for (const auto& r : order) {
    for (const auto& d : spec.resources.at(r).depends_on)
      if (affected.count(d)) affected.insert(r);
  }
  std::vector<ResourceId> out;
  for (const auto& r : order)
    if (r != rid && affected.count(r)) out.push_back(r);
  return out;
}

}  // namespace clussim
