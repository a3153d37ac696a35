#include "hgba/defense.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hgba/error.hpp"
#include "json.hpp"

namespace hgba {
namespace {

Edge oriented(MetapathStep step, std::uint32_t from, std::uint32_t to) {
  return step.reverse ? Edge{to, from} : Edge{from, to};
}

bool contains(const std::vector<std::uint32_t>& sorted, std::uint32_t v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

std::pair<HeteroGraph, DefenseReport> prune_impl(const HeteroGraph& graph, std::span<const Metapath> metapaths,
                                                 const PruneOptions& opts) {
  validate(opts);
  DefenseReport report;
  report.threshold = opts.threshold;
  report.all_instances = opts.all_instances;
  for (const auto& p : metapaths) {
    if (!p.symmetric_endpoints() || p.source_type() != graph.target_type()) {
      throw ValidationError("prune: metapath " + p.name() + " must start and end at the target type");
    }
  }
  for (const auto& p : metapaths) {
    MarkedPairs m{p.text(), mark_dissimilar(graph, p, opts.threshold)};
    auto cut = severing_edges(graph, p, m.pairs, opts.all_instances);
    report.deleted_edges.insert(report.deleted_edges.end(), cut.begin(), cut.end());
    report.marked.push_back(std::move(m));
  }
  std::sort(report.deleted_edges.begin(), report.deleted_edges.end());
  report.deleted_edges.erase(std::unique(report.deleted_edges.begin(), report.deleted_edges.end()),
                             report.deleted_edges.end());

  std::vector<std::vector<Edge>> by_relation(graph.schema().relations.size());
  for (const auto& d : report.deleted_edges) by_relation[d.relation].push_back(d.edge);
  HeteroGraph out = graph;
  for (std::size_t r = 0; r < by_relation.size(); ++r) {
    if (!by_relation[r].empty()) out = out.without_edges(static_cast<RelationId>(r), by_relation[r]);
  }
  return {std::move(out), std::move(report)};
}

}  // namespace

std::string_view to_string(DefenseMethod m) {
  switch (m) {
    case DefenseMethod::Prune: return "prune";
    case DefenseMethod::PruneLd: return "prune-ld";
  }
  return "unknown";
}

DefenseMethod parse_defense_method(std::string_view name) {
  if (name == "prune") return DefenseMethod::Prune;
  if (name == "prune-ld") return DefenseMethod::PruneLd;
  throw ConfigError("unknown defense method '" + std::string(name) + "'");
}

void validate(const PruneOptions& opts) {
  if (!(opts.threshold >= -1.0 && opts.threshold <= 1.0)) throw ConfigError("prune threshold must lie in [-1, 1]");
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> mark_dissimilar(const HeteroGraph& graph, const Metapath& p,
                                                                     double threshold) {
  const SparseMatrix proj = compose_adjacency(graph, p);
  const DenseMatrix& x = graph.features(p.source_type());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::size_t u = 0; u < proj.rows(); ++u) {
    for (std::uint32_t w : proj.row_indices(u)) {
      if (w <= u) continue;
      if (cosine(x.row(u), x.row(w)) < threshold) out.emplace_back(static_cast<std::uint32_t>(u), w);
    }
  }
  return out;
}

std::vector<DeletedEdge> severing_edges(const HeteroGraph& graph, const Metapath& p,
                                        std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs,
                                        bool all_instances) {
  const auto steps = p.steps();
  std::vector<DeletedEdge> out;
  if (steps.empty()) return out;
  // backward[w][i]: nodes from which w is reachable by walking steps[i..].
  std::map<std::uint32_t, std::vector<std::vector<std::uint32_t>>> backward;
  auto back = [&](std::uint32_t w) -> const std::vector<std::vector<std::uint32_t>>& {
    auto it = backward.find(w);
    if (it != backward.end()) return it->second;
    std::vector<std::vector<std::uint32_t>> b(steps.size() + 1);
    for (std::size_t i = 0; i <= steps.size(); ++i) {
      if (all_instances || i == 1) b[i] = reachable_backward(graph, w, steps.subspan(i));
    }
    return backward.emplace(w, std::move(b)).first->second;
  };
  for (const auto& [u, w] : pairs) {
    const auto& b = back(w);
    if (!all_instances) {
      const SparseMatrix& adj = step_adjacency(graph, steps[0]);
      for (std::uint32_t y : adj.row_indices(u)) {
        if (contains(b[1], y)) out.push_back({steps[0].relation, oriented(steps[0], u, y)});
      }
      continue;
    }
    std::vector<std::uint32_t> frontier{u};
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const SparseMatrix& adj = step_adjacency(graph, steps[i]);
      std::vector<std::uint32_t> next;
      for (std::uint32_t x : frontier) {
        if (!contains(b[i], x)) continue;
        for (std::uint32_t y : adj.row_indices(x)) {
          if (!contains(b[i + 1], y)) continue;
          out.push_back({steps[i].relation, oriented(steps[i], x, y)});
          next.push_back(y);
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      frontier = std::move(next);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Metapath> defender_metapaths(const HeteroGraph& graph) {
  return symmetric_metapaths(graph.schema(), graph.target_type(), 5);
}

std::pair<HeteroGraph, DefenseReport> prune(const HeteroGraph& graph, std::span<const Metapath> metapaths,
                                            const PruneOptions& opts) {
  return prune_impl(graph, metapaths, opts);
}

std::pair<HeteroGraph, DefenseReport> prune_ld(const HeteroGraph& graph, std::span<const Metapath> metapaths,
                                               std::span<const std::uint32_t> supervised,
                                               const PruneOptions& opts) {
  auto [pruned, report] = prune_impl(graph, metapaths, opts);
  report.method = DefenseMethod::PruneLd;
  std::vector<std::uint32_t> sup(supervised.begin(), supervised.end());
  std::sort(sup.begin(), sup.end());
  std::vector<std::uint32_t> drop;
  for (const auto& m : report.marked) {
    for (const auto& [u, w] : m.pairs) {
      for (std::uint32_t v : {u, w}) {
        if (contains(sup, v) && graph.label(v) != kUnlabeled) drop.push_back(v);
      }
    }
  }
  std::sort(drop.begin(), drop.end());
  drop.erase(std::unique(drop.begin(), drop.end()), drop.end());
  if (!drop.empty()) {
    std::vector<int> labels(pruned.labels().begin(), pruned.labels().end());
    for (std::uint32_t v : drop) labels[v] = kUnlabeled;
    pruned = pruned.with_labels(std::move(labels));
  }
  report.discarded_labels = std::move(drop);
  return {std::move(pruned), std::move(report)};
}

std::string report_to_json(const DefenseReport& report, const Schema& schema) {
  nlohmann::json j;
  j["method"] = std::string(to_string(report.method));
  j["threshold"] = report.threshold;
  j["all_instances"] = report.all_instances;
  j["marked"] = nlohmann::json::array();
  for (const auto& m : report.marked) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [u, w] : m.pairs) pairs.push_back({u, w});
    j["marked"].push_back({{"metapath", m.metapath}, {"pairs", pairs}});
  }
  j["deleted_edges"] = nlohmann::json::array();
  for (const auto& d : report.deleted_edges) {
    j["deleted_edges"].push_back(
        {{"relation", schema.relations.at(d.relation).name}, {"from", d.edge.first}, {"to", d.edge.second}});
  }
  j["discarded_labels"] = report.discarded_labels;
  return j.dump(2);
}

DefenseReport report_from_json(std::string_view text, const Schema& schema) {
  DefenseReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.method = parse_defense_method(j.at("method").get<std::string>());
    r.threshold = j.at("threshold").get<double>();
    r.all_instances = j.at("all_instances").get<bool>();
    for (const auto& m : j.at("marked")) {
      MarkedPairs mp{m.at("metapath").get<std::string>(), {}};
      for (const auto& pr : m.at("pairs")) mp.pairs.emplace_back(pr.at(0).get<std::uint32_t>(), pr.at(1).get<std::uint32_t>());
      r.marked.push_back(std::move(mp));
    }
    for (const auto& d : j.at("deleted_edges")) {
      const auto name = d.at("relation").get<std::string>();
      const auto rel = schema.find_relation(name);
      if (!rel) throw ValidationError("defense report: unknown relation " + name);
      r.deleted_edges.push_back({*rel, {d.at("from").get<std::uint32_t>(), d.at("to").get<std::uint32_t>()}});
    }
    r.discarded_labels = j.at("discarded_labels").get<std::vector<std::uint32_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("defense report: ") + e.what());
  }
  return r;
}

}  // namespace hgba
