// Copyright 2026 the clussim authors. Licensed under the Apache License,
// Version 2.0. See http://www.apache.org/licenses/LICENSE-2.0 for details.

#pragma once

#include <optional>
#include <string>

#include "clussim/clusterdb.hpp"
#include "clussim/specs.hpp"
#include "clussim/types.hpp"
#include "clussim/view.hpp"

namespace clussim {

// Virtual servers are names clients bind to; they follow their group. All
// lookups are pure reads over the replica and the view, so any member
// answers identically.

struct ResolveResult {
  bool available = false;
  NodeId host = 0;
};

// Physical host token used in endpoints ("n3" for node 3).
std::string host_token(NodeId id);

// Where a virtual server lives right now. Unavailable while its group is
// offline or mid-migration (no recorded owner, or the recorded owner left
// the membership).
ResolveResult resolve_vserver(const ClusterSpec& spec, const DbReplica& db,
                              const MembershipView& view,
                              const std::string& vname);

// Client endpoint rewrite: a service path addressed to the virtual name
// becomes a host-qualified path that keeps the virtual name as a scope, so
// per-virtual-server state never collides across servers on one host.
//   \\vsA\sql at host n2 -> \\n2\$vsA\sql
std::string remap_endpoint(const std::string& vname,
                           const std::string& service, NodeId host);

// The name a process in this group sees as "its computer": the virtual
// server name, never the physical host.
std::optional<std::string> virtual_identity(const ClusterSpec& spec,
                                            const GroupId& gid);

// Per-virtual-server configuration subtree key.
std::string vserver_config_path(const std::string& vname,
                                const std::string& key);

}  // namespace clussim
