#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ttx/error.hpp"

namespace ttx {

enum class NodeKind { IT, OT, Network, Service };

inline std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::IT: return "IT";
    case NodeKind::OT: return "OT";
    case NodeKind::Network: return "NETWORK";
    case NodeKind::Service: return "SERVICE";
  }
  return "IT";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  if (s == "IT") return NodeKind::IT;
  if (s == "OT") return NodeKind::OT;
  if (s == "NETWORK") return NodeKind::Network;
  if (s == "SERVICE") return NodeKind::Service;
  return std::nullopt;
}

struct Node {
  std::string id;
  std::string label;
  NodeKind kind = NodeKind::IT;
  double serviceWeight = 1.0;
};

struct Edge {
  std::string from;
  std::string to;
  double contactRate = 1.0;
};

/// Validated infrastructure graph.
///
/// Neighbor lists are "who can infect me": for an undirected topology every
/// edge appears in both endpoints' lists, for a directed one an edge a->b
/// lets a infect b and therefore appears only in b's list.
class Topology {
 public:
  struct Contact {
    std::size_t source;
    double rate;
  };

  Topology() = default;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool directed() const { return directed_; }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<Contact>& contacts(std::size_t node) const { return in_contacts_[node]; }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view id) const {
    auto idx = find(id);
    if (!idx) fail(ErrorCode::NotFound, "unknown node id: " + std::string(id));
    return *idx;
  }

  friend Topology build_topology(std::vector<Node> nodes, std::vector<Edge> edges, bool directed);

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  bool directed_ = false;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<Contact>> in_contacts_;
};

inline Topology build_topology(std::vector<Node> nodes, std::vector<Edge> edges,
                               bool directed = false) {
  Topology topo;
  if (nodes.empty()) fail(ErrorCode::InvalidArgument, "topology has no nodes");
  bool any_weight = false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.id.empty()) fail(ErrorCode::InvalidArgument, "empty node id at position " + std::to_string(i));
    if (!topo.index_.emplace(n.id, i).second) {
      fail(ErrorCode::InvalidArgument, "duplicate node id: " + n.id);
    }
    if (!(n.serviceWeight >= 0.0) || !std::isfinite(n.serviceWeight)) {
      fail(ErrorCode::InvalidArgument, "negative serviceWeight on node: " + n.id);
    }
    any_weight = any_weight || n.serviceWeight > 0.0;
  }
  if (!any_weight) fail(ErrorCode::InvalidArgument, "no node has a positive serviceWeight");

  topo.in_contacts_.resize(nodes.size());
  for (const Edge& e : edges) {
    auto from = topo.index_.find(e.from);
    if (from == topo.index_.end()) fail(ErrorCode::InvalidArgument, "edge references unknown node id: " + e.from);
    auto to = topo.index_.find(e.to);
    if (to == topo.index_.end()) fail(ErrorCode::InvalidArgument, "edge references unknown node id: " + e.to);
    if (from->second == to->second) fail(ErrorCode::InvalidArgument, "self-loop on node: " + e.from);
    if (!(e.contactRate >= 0.0) || !std::isfinite(e.contactRate)) {
      fail(ErrorCode::InvalidArgument, "negative contactRate on edge " + e.from + "-" + e.to);
    }
    topo.in_contacts_[to->second].push_back({from->second, e.contactRate});
    if (!directed) topo.in_contacts_[from->second].push_back({to->second, e.contactRate});
  }
  topo.nodes_ = std::move(nodes);
  topo.edges_ = std::move(edges);
  topo.directed_ = directed;
  return topo;
}

}  // namespace ttx
