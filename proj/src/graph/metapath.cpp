#include "hgba/metapath.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <string>

#include "hgba/error.hpp"

namespace hgba {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

NodeTypeId resolve_type(const Schema& schema, std::string_view token) {
  if (auto t = schema.find_type(token)) return *t;
  const std::string want = lower(token);
  for (std::size_t i = 0; i < schema.node_types.size(); ++i) {
    if (lower(schema.node_types[i].name) == want) return static_cast<NodeTypeId>(i);
  }
  std::optional<NodeTypeId> hit;
  for (std::size_t i = 0; i < schema.node_types.size(); ++i) {
    if (lower(schema.node_types[i].name).starts_with(want)) {
      if (hit) throw ValidationError("metapath: type token '" + std::string(token) + "' is ambiguous");
      hit = static_cast<NodeTypeId>(i);
    }
  }
  if (!hit) throw ValidationError("metapath: unknown node type '" + std::string(token) + "'");
  return *hit;
}

MetapathStep resolve_step(const Schema& schema, NodeTypeId from, NodeTypeId to, std::optional<std::string> rel_name) {
  if (rel_name) {
    auto r = schema.find_relation(*rel_name);
    if (!r) throw ValidationError("metapath: unknown relation '" + *rel_name + "'");
    const auto& rel = schema.relations[*r];
    if (rel.src == from && rel.dst == to) return {*r, false};
    if (rel.src == to && rel.dst == from) return {*r, true};
    throw ValidationError("metapath: relation '" + *rel_name + "' does not join the adjacent types");
  }
  std::optional<MetapathStep> found;
  for (std::size_t i = 0; i < schema.relations.size(); ++i) {
    const auto& rel = schema.relations[i];
    std::optional<MetapathStep> s;
    if (rel.src == from && rel.dst == to) {
      s = MetapathStep{static_cast<RelationId>(i), false};
    } else if (rel.src == to && rel.dst == from) {
      s = MetapathStep{static_cast<RelationId>(i), true};
    }
    if (!s) continue;
    if (found) {
      throw ValidationError("metapath: several relations join '" + schema.node_types[from].name + "' and '" +
                            schema.node_types[to].name + "'; annotate one with [name]");
    }
    found = s;
  }
  if (!found) {
    throw ValidationError("metapath: no relation joins '" + schema.node_types[from].name + "' and '" +
                          schema.node_types[to].name + "'");
  }
  return *found;
}

std::vector<std::uint32_t> walk(const HeteroGraph& graph, std::vector<std::uint32_t> frontier,
                                std::span<const MetapathStep> steps, bool backward) {
  const std::size_t l = steps.size();
  for (std::size_t k = 0; k < l; ++k) {
    const MetapathStep step = backward ? steps[l - 1 - k] : steps[k];
    // Walking a step backwards is the same as traversing the opposite orientation.
    const SparseMatrix& adj = graph.adjacency(step.relation, backward ? !step.reverse : step.reverse);
    std::vector<char> mark(adj.cols(), 0);
    std::vector<std::uint32_t> next;
    for (std::uint32_t u : frontier) {
      for (std::uint32_t w : adj.row_indices(u)) {
        if (!mark[w]) {
          mark[w] = 1;
          next.push_back(w);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return frontier;
}

/// Forward walk from `start` that may also traverse one extra stored edge of `relation`.
bool reaches_with_edge(const HeteroGraph& graph, std::uint32_t start, std::span<const MetapathStep> steps,
                       RelationId relation, Edge extra, std::uint32_t target) {
  std::vector<std::uint32_t> frontier{start};
  for (const MetapathStep& step : steps) {
    const SparseMatrix& adj = graph.adjacency(step.relation, step.reverse);
    std::vector<char> mark(adj.cols(), 0);
    std::vector<std::uint32_t> next;
    auto visit = [&](std::uint32_t w) {
      if (!mark[w]) {
        mark[w] = 1;
        next.push_back(w);
      }
    };
    for (std::uint32_t u : frontier) {
      for (std::uint32_t w : adj.row_indices(u)) visit(w);
      if (step.relation == relation) {
        if (!step.reverse && u == extra.first) visit(extra.second);
        if (step.reverse && u == extra.second) visit(extra.first);
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) return false;
  }
  return std::find(frontier.begin(), frontier.end(), target) != frontier.end();
}

}  // namespace

Metapath::Metapath(const Schema& schema, std::vector<NodeTypeId> types, std::vector<MetapathStep> steps)
    : types_(std::move(types)), steps_(std::move(steps)) {
  if (types_.empty() || types_.size() != steps_.size() + 1 || steps_.empty()) {
    throw ValidationError("metapath: need l >= 1 relations and l + 1 node types");
  }
  for (NodeTypeId t : types_) {
    if (t >= schema.node_types.size()) throw ValidationError("metapath: unknown node type id");
  }
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    if (s.relation >= schema.relations.size()) throw ValidationError("metapath: unknown relation id");
    const auto& rel = schema.relations[s.relation];
    const NodeTypeId from = s.reverse ? rel.dst : rel.src;
    const NodeTypeId to = s.reverse ? rel.src : rel.dst;
    if (from != types_[i] || to != types_[i + 1]) {
      throw ValidationError("metapath: relation '" + rel.name + "' does not match step " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < types_.size(); ++i) {
    const std::string& n = schema.node_types[types_[i]].name;
    name_.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(n.empty() ? '?' : n.front()))));
    if (i) text_.push_back('-');
    text_ += n;
  }
}

Metapath Metapath::parse(const Schema& schema, std::string_view text) {
  std::vector<NodeTypeId> types;
  std::vector<MetapathStep> steps;
  std::optional<std::string> pending_relation;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('-', start);
    // Relation names may themselves contain hyphens.
    const std::size_t open = text.find_first_not_of(" \t", start);
    if (open != std::string_view::npos && text[open] == '[') {
      const std::size_t close = text.find(']', open);
      if (close != std::string_view::npos) end = text.find('-', close);
    }
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(start, end - start);
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
    if (tok.empty()) throw ValidationError("metapath: empty token in '" + std::string(text) + "'");
    if (tok.front() == '[') {
      if (tok.back() != ']' || types.empty() || pending_relation) {
        throw ValidationError("metapath: misplaced relation annotation '" + std::string(tok) + "'");
      }
      pending_relation = std::string(tok.substr(1, tok.size() - 2));
    } else {
      const NodeTypeId t = resolve_type(schema, tok);
      if (!types.empty()) {
        steps.push_back(resolve_step(schema, types.back(), t, pending_relation));
        pending_relation.reset();
      }
      types.push_back(t);
    }
    start = end + 1;
  }
  if (pending_relation) throw ValidationError("metapath: trailing relation annotation");
  return Metapath(schema, std::move(types), std::move(steps));
}

Metapath Metapath::reversed(const Schema& schema) const {
  std::vector<NodeTypeId> types(types_.rbegin(), types_.rend());
  std::vector<MetapathStep> steps;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) steps.push_back({it->relation, !it->reverse});
  return Metapath(schema, std::move(types), std::move(steps));
}

std::vector<Metapath> parse_metapaths(const Schema& schema, std::string_view comma_separated) {
  std::vector<Metapath> out;
  std::size_t start = 0;
  while (start < comma_separated.size()) {
    std::size_t end = comma_separated.find(',', start);
    if (end == std::string_view::npos) end = comma_separated.size();
    if (end > start) out.push_back(Metapath::parse(schema, comma_separated.substr(start, end - start)));
    start = end + 1;
  }
  if (out.empty()) throw ValidationError("metapath list is empty");
  return out;
}

const SparseMatrix& step_adjacency(const HeteroGraph& graph, MetapathStep step) {
  return graph.adjacency(step.relation, step.reverse);
}

std::vector<std::uint32_t> reachable(const HeteroGraph& graph, std::uint32_t start, std::span<const MetapathStep> steps) {
  return walk(graph, {start}, steps, false);
}

std::vector<std::uint32_t> reachable_backward(const HeteroGraph& graph, std::uint32_t end,
                                              std::span<const MetapathStep> steps) {
  return walk(graph, {end}, steps, true);
}

SparseMatrix compose_adjacency(const HeteroGraph& graph, const Metapath& p) {
  auto steps = p.steps();
  if (steps.empty()) throw ValidationError("compose_adjacency: empty metapath");
  SparseMatrix acc = bool_product(SparseMatrix::identity(graph.node_count(p.source_type())),
                                  step_adjacency(graph, steps[0]));
  for (std::size_t i = 1; i < steps.size(); ++i) acc = bool_product(acc, step_adjacency(graph, steps[i]));
  if (p.symmetric_endpoints()) acc = drop_diagonal(acc);
  return acc;
}

HomogeneousGraph extract_subgraph(const HeteroGraph& graph, const Metapath& p) {
  if (!p.symmetric_endpoints()) throw ValidationError("extract_subgraph: metapath '" + p.name() + "' is asymmetric");
  return {p.source_type(), compose_adjacency(graph, p), graph.features(p.source_type())};
}

bool is_connected_via(const HeteroGraph& graph, NodeRef u, NodeRef v, const Metapath& p) {
  if (u.type != p.source_type() || v.type != p.end_type()) {
    throw ValidationError("is_connected_via: node types do not match metapath '" + p.name() + "'");
  }
  if (u.index >= graph.node_count(u.type) || v.index >= graph.node_count(v.type)) {
    throw ValidationError("is_connected_via: node index out of range");
  }
  if (p.symmetric_endpoints() && u.index == v.index) return false;
  const auto reach = reachable(graph, u.index, p.steps());
  return std::binary_search(reach.begin(), reach.end(), v.index);
}

std::optional<EdgeSpec> single_edge_completion(const HeteroGraph& graph, NodeRef v_p, NodeRef v_t, const Metapath& p) {
  if (is_connected_via(graph, v_p, v_t, p)) {
    throw ValidationError("single_edge_completion: nodes are already connected via " + p.name());
  }
  const auto steps = p.steps();
  const auto types = p.types();
  const auto& schema = graph.schema();
  for (std::size_t cut = 0; cut < steps.size(); ++cut) {
    const auto xs = reachable(graph, v_p.index, steps.first(cut));
    if (xs.empty()) continue;
    const auto suffix = steps.subspan(cut + 1);
    const auto ys = reachable_backward(graph, v_t.index, suffix);
    const MetapathStep step = steps[cut];
    // A later step on the same relation may traverse the new edge a second time.
    const bool reuse = std::any_of(suffix.begin(), suffix.end(),
                                   [&](const MetapathStep& s) { return s.relation == step.relation; });
    if (ys.empty() && !reuse) continue;
    const auto& rel = schema.relations[step.relation];
    const std::uint32_t y_count = static_cast<std::uint32_t>(graph.node_count(types[cut + 1]));
    for (std::uint32_t x : xs) {
      auto accept = [&](std::uint32_t y) -> std::optional<EdgeSpec> {
        if (rel.src == rel.dst && x == y) return std::nullopt;  // no self-loops
        EdgeSpec e{step.relation, NodeRef{types[cut], x}, NodeRef{types[cut + 1], y}, step.reverse};
        if (graph.has_edge(e.relation, e.stored())) return std::nullopt;
        if (std::binary_search(ys.begin(), ys.end(), y)) return e;
        if (reuse && reaches_with_edge(graph, y, suffix, e.relation, e.stored(), v_t.index)) return e;
        return std::nullopt;
      };
      if (reuse) {
        for (std::uint32_t y = 0; y < y_count; ++y)
          if (auto e = accept(y)) return e;
      } else {
        for (std::uint32_t y : ys)
          if (auto e = accept(y)) return e;
      }
    }
  }
  return std::nullopt;
}

HeteroGraph attach_edge(const HeteroGraph& graph, const EdgeSpec& e) {
  const auto& schema = graph.schema();
  if (e.relation >= schema.relations.size()) throw ValidationError("attach_edge: unknown relation");
  const auto& rel = schema.relations[e.relation];
  const NodeTypeId from = e.reverse ? rel.dst : rel.src;
  const NodeTypeId to = e.reverse ? rel.src : rel.dst;
  if (e.from.type != from || e.to.type != to) {
    throw ValidationError("attach_edge: endpoint types do not match relation '" + rel.name + "'");
  }
  return graph.with_edge(e.relation, e.stored());
}

std::vector<Metapath> symmetric_metapaths(const Schema& schema, NodeTypeId type, std::size_t max_length) {
  std::vector<Metapath> out;
  std::set<std::pair<std::vector<NodeTypeId>, std::vector<std::pair<RelationId, bool>>>> seen;
  std::vector<NodeTypeId> types{type};
  std::vector<MetapathStep> steps;

  auto key = [](const std::vector<NodeTypeId>& ts, const std::vector<MetapathStep>& ss) {
    std::vector<std::pair<RelationId, bool>> k;
    for (const auto& s : ss) k.emplace_back(s.relation, s.reverse);
    return std::make_pair(ts, k);
  };

  auto extend = [&](auto&& self) -> void {
    if (!steps.empty() && types.back() == type) {
      Metapath m(schema, types, steps);
      Metapath r = m.reversed(schema);
      std::vector<NodeTypeId> rt(r.types().begin(), r.types().end());
      std::vector<MetapathStep> rs(r.steps().begin(), r.steps().end());
      if (!seen.contains(key(rt, rs))) {
        seen.insert(key(types, steps));
        out.push_back(std::move(m));
      }
    }
    if (steps.size() == max_length) return;
    for (std::size_t i = 0; i < schema.relations.size(); ++i) {
      const auto& rel = schema.relations[i];
      for (bool rev : {false, true}) {
        if (rev && rel.src == rel.dst) continue;
        const NodeTypeId from = rev ? rel.dst : rel.src;
        const NodeTypeId to = rev ? rel.src : rel.dst;
        if (from != types.back()) continue;
        types.push_back(to);
        steps.push_back({static_cast<RelationId>(i), rev});
        self(self);
        types.pop_back();
        steps.pop_back();
      }
    }
  };
  extend(extend);
  return out;
}

}  // namespace hgba
