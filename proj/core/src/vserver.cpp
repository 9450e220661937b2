// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#include "clussim/vserver.hpp"

namespace clussim {

std::string host_token(NodeId id) { return "n" + std::to_string(id); }

ResolveResult resolve_vserver(const ClusterSpec& spec, const DbReplica& db,
                              const MembershipView& view,
                              const std::string& vname) {
  auto it = spec.vservers.find(vname);
  if (it == spec.vservers.end()) return {};
  auto owner = db.get("groups/" + it->second.group + "/owner");
  if (!owner || owner->empty()) return {};
  NodeId host = std::stoi(*owner);
  if (!contains(view.active_set, host)) return {};
  return {true, host};
}

std::string remap_endpoint(const std::string& vname,
                           const std::string& service, NodeId host) {
  return "\\\\" + host_token(host) + "\\$" + vname + "\\" + service;
}

std::optional<std::string> virtual_identity(const ClusterSpec& spec,
                                            const GroupId& gid) {
  for (const auto& [name, vs] : spec.vservers)
    if (vs.group == gid) return name;
  return std::nullopt;
}

std::string vserver_config_path(const std::string& vname,
                                const std::string& key) {
  return "vs/" + vname + "/" + key;
}

}  // namespace clussim
