#pragma once

#include <set>
#include <stdexcept>

#include "hgba/attack.hpp"

namespace hgba::test {

/// Counts appended nodes and edges by set difference over raw edge lists.
/// Throws when an edge of `before` is missing from `after`.
inline Ledger recount(const HeteroGraph& before, const HeteroGraph& after) {
  Ledger l;
  for (NodeTypeId t = 0; t < before.schema().node_types.size(); ++t) l.new_nodes += after.node_count(t) - before.node_count(t);
  for (RelationId r = 0; r < before.schema().relations.size(); ++r) {
    const std::set<Edge> old(before.edges(r).begin(), before.edges(r).end());
    for (const Edge& e : after.edges(r)) {
      if (!old.count(e)) ++l.new_edges;
    }
    for (const Edge& e : old) {
      if (!after.has_edge(r, e)) throw std::logic_error("recount: an original edge was removed");
    }
  }
  return l;
}

}  // namespace hgba::test
