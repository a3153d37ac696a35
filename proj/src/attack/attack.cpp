#include "hgba/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "hgba/error.hpp"
#include "json.hpp"

namespace hgba {
namespace {

void require_target(const HeteroGraph& graph, NodeRef v, const char* what) {
  if (v.type != graph.target_type() || v.index >= graph.target_count()) {
    throw ValidationError(std::string(what) + " must be an existing target-type node");
  }
}

void require_projection(const HeteroGraph& graph, const Metapath& p) {
  if (!p.symmetric_endpoints() || p.source_type() != graph.target_type()) {
    throw ValidationError("metapath '" + p.name() + "' must start and end at the target type");
  }
}

std::vector<double> column_mean(const DenseMatrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  if (m.rows() == 0) return mean;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

std::uint32_t append_node(HeteroGraph& graph, NodeTypeId t, std::span<const double> features) {
  const auto index = static_cast<std::uint32_t>(graph.node_count(t));
  graph = graph.with_node(t, features);
  return index;
}

std::uint32_t append_mean_node(HeteroGraph& graph, NodeTypeId t) {
  const auto mean = column_mean(graph.features(t));
  return append_node(graph, t, mean);
}

void add_step_edge(HeteroGraph& graph, MetapathStep step, std::uint32_t from, std::uint32_t to) {
  const Edge e = step.reverse ? Edge{to, from} : Edge{from, to};
  graph = graph.with_edge(step.relation, e);
}

// A P_b instance a ~> b built entirely from fresh intermediates.
Ledger fresh_chain(HeteroGraph& graph, std::uint32_t a, std::uint32_t b, const Metapath& p) {
  Ledger ledger;
  const auto steps = p.steps();
  const auto types = p.types();
  std::uint32_t prev = a;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    const std::uint32_t next = append_mean_node(graph, types[i + 1]);
    add_step_edge(graph, steps[i], prev, next);
    prev = next;
    ++ledger.new_nodes;
    ++ledger.new_edges;
  }
  add_step_edge(graph, steps.back(), prev, b);
  ++ledger.new_edges;
  return ledger;
}

struct TriggerSource {
  AttackVariant variant;
  const DenseMatrix* features;
  std::vector<double> mean;
  std::vector<double> stddev;
};

TriggerSource trigger_source(const HeteroGraph& graph, AttackVariant variant) {
  TriggerSource src{variant, &graph.features(graph.target_type()), {}, {}};
  const auto& x = *src.features;
  src.mean = column_mean(x);
  src.stddev.assign(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) src.stddev[c] += (row[c] - src.mean[c]) * (row[c] - src.mean[c]);
  }
  for (double& s : src.stddev) s = std::sqrt(s / static_cast<double>(std::max<std::size_t>(x.rows(), 1)));
  return src;
}

std::vector<double> draw_trigger_features(const TriggerSource& src, std::mt19937_64& rng) {
  const auto& x = *src.features;
  if (src.variant == AttackVariant::SbaSample) {
    std::uniform_int_distribution<std::size_t> pick(0, x.rows() - 1);
    auto row = x.row(pick(rng));
    return {row.begin(), row.end()};
  }
  std::vector<double> f(x.cols());
  for (std::size_t c = 0; c < f.size(); ++c) {
    std::normal_distribution<double> dist(src.mean[c], src.stddev[c]);
    f[c] = src.stddev[c] > 0.0 ? dist(rng) : src.mean[c];
  }
  return f;
}

// Builds one ER trigger and attaches it to `v` along `p`.
Ledger attach_trigger(HeteroGraph& graph, std::uint32_t v, const Metapath& p, std::size_t size, double edge_prob,
                      const TriggerSource& src, std::mt19937_64& rng) {
  const NodeTypeId t = graph.target_type();
  Ledger ledger;
  std::vector<std::uint32_t> nodes;
  for (std::size_t i = 0; i < size; ++i) {
    nodes.push_back(append_node(graph, t, draw_trigger_features(src, rng)));
    ++ledger.new_nodes;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = i + 1; j < size; ++j) {
      if (u(rng) < edge_prob) {
        const Ledger l = fresh_chain(graph, nodes[i], nodes[j], p);
        ledger.new_nodes += l.new_nodes;
        ledger.new_edges += l.new_edges;
      }
    }
  }
  const Ledger l = connect_via(graph, NodeRef{t, nodes.front()}, NodeRef{t, v}, p);
  ledger.new_nodes += l.new_nodes;
  ledger.new_edges += l.new_edges;
  return ledger;
}

std::vector<EdgeSpec> added_edges(const HeteroGraph& before, const HeteroGraph& after) {
  std::vector<EdgeSpec> out;
  const auto& schema = after.schema();
  for (std::size_t r = 0; r < schema.relations.size(); ++r) {
    const auto rid = static_cast<RelationId>(r);
    const auto& rel = schema.relations[r];
    for (const Edge& e : after.edges(rid)) {
      const bool old = e.first < before.node_count(rel.src) && e.second < before.node_count(rel.dst) &&
                       before.has_edge(rid, e);
      if (!old) out.push_back({rid, NodeRef{rel.src, e.first}, NodeRef{rel.dst, e.second}, false});
    }
  }
  return out;
}

nlohmann::json node_json(NodeRef v) { return {{"type", v.type}, {"index", v.index}}; }

}  // namespace

void validate(const BudgetConfig& cfg) {
  if (!(cfg.fraction >= 0.0 && cfg.fraction <= 1.0)) throw ConfigError("budget fraction must lie in [0, 1]");
}

std::size_t attack_budget(const HeteroGraph& graph, const DataSplit& split, const BudgetConfig& cfg) {
  validate(cfg);
  std::vector<char> in_train(graph.target_count(), 0);
  for (std::uint32_t v : split.train) in_train.at(v) = 1;
  const NodeTypeId t = graph.target_type();
  std::size_t edges = 0;
  for (RelationId r = 0; r < graph.schema().relations.size(); ++r) {
    const auto& rel = graph.schema().relations[r];
    if (rel.src != t && rel.dst != t) continue;
    for (const Edge& e : graph.edges(r)) {
      if ((rel.src == t && in_train[e.first]) || (rel.dst == t && in_train[e.second])) ++edges;
    }
  }
  const double units = static_cast<double>(split.train.size() + edges);
  auto budget = static_cast<std::size_t>(std::floor(cfg.fraction * units));
  if (cfg.cap) budget = std::min(budget, *cfg.cap);
  return budget;
}

std::string_view to_string(AttackVariant v) {
  switch (v) {
    case AttackVariant::Hgba: return "hgba";
    case AttackVariant::SbaSample: return "sba-sample";
    case AttackVariant::SbaGen: return "sba-gen";
  }
  return "unknown";
}

AttackVariant parse_attack_variant(std::string_view name) {
  for (auto v : {AttackVariant::Hgba, AttackVariant::SbaSample, AttackVariant::SbaGen}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown attack variant '" + std::string(name) + "'");
}

std::string_view to_string(ProxyKind k) { return k == ProxyKind::HomoGnn ? "homo-gnn" : "hgnn"; }

ProxyKind parse_proxy(std::string_view name) {
  if (name == "homo-gnn") return ProxyKind::HomoGnn;
  if (name == "hgnn") return ProxyKind::Hgnn;
  throw ConfigError("unknown proxy '" + std::string(name) + "'");
}

std::string plan_to_json(const PoisonPlan& plan, const Schema& schema) {
  nlohmann::json j;
  j["variant"] = std::string(to_string(plan.variant));
  j["v_t"] = node_json(plan.v_t);
  j["p_b"] = plan.p_b.text();
  j["p_b_name"] = plan.p_b.name();
  j["y_t"] = plan.y_t;
  j["v_p"] = nlohmann::json::array();
  for (const auto& v : plan.v_p) j["v_p"].push_back(v.index);
  j["e_p"] = nlohmann::json::array();
  for (const auto& e : plan.e_p) {
    j["e_p"].push_back({{"relation", schema.relations.at(e.relation).name},
                        {"from", node_json(e.from)},
                        {"to", node_json(e.to)},
                        {"reverse", e.reverse}});
  }
  j["ledger"] = {{"new_nodes", plan.ledger.new_nodes},
                 {"new_edges", plan.ledger.new_edges},
                 {"total", plan.ledger.total()}};
  j["trigger_size"] = plan.trigger_size;
  j["edge_prob"] = plan.edge_prob;
  j["seed"] = plan.seed;
  return j.dump(2);
}

PoisonPlan plan_from_json(std::string_view text, const Schema& schema) {
  PoisonPlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    auto node = [](const nlohmann::json& n) {
      return NodeRef{n.at("type").get<NodeTypeId>(), n.at("index").get<std::uint32_t>()};
    };
    plan.variant = parse_attack_variant(j.at("variant").get<std::string>());
    plan.v_t = node(j.at("v_t"));
    plan.p_b = Metapath::parse(schema, j.at("p_b").get<std::string>());
    plan.y_t = j.at("y_t").get<int>();
    for (const auto& v : j.at("v_p")) plan.v_p.push_back(NodeRef{plan.p_b.source_type(), v.get<std::uint32_t>()});
    for (const auto& e : j.at("e_p")) {
      const auto rel = schema.find_relation(e.at("relation").get<std::string>());
      if (!rel) throw ValidationError("plan: unknown relation " + e.at("relation").get<std::string>());
      plan.e_p.push_back({*rel, node(e.at("from")), node(e.at("to")), e.at("reverse").get<bool>()});
    }
    plan.ledger = {j.at("ledger").at("new_nodes").get<std::size_t>(), j.at("ledger").at("new_edges").get<std::size_t>()};
    plan.trigger_size = j.at("trigger_size").get<std::size_t>();
    plan.edge_prob = j.at("edge_prob").get<double>();
    plan.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

MetapathSelection select_backdoor_metapath(const HeteroGraph& graph, std::span<const Metapath> candidates,
                                           ProxyKind proxy, const DataSplit& split, std::uint64_t seed,
                                           const TrainConfig& train_cfg) {
  if (candidates.empty()) throw ConfigError("select_backdoor_metapath: no candidates");
  for (const auto& p : candidates) require_projection(graph, p);
  MetapathSelection sel{candidates.front(), {}};
  if (candidates.size() == 1) {
    sel.scores = {1.0};
    return sel;
  }
  if (proxy == ProxyKind::HomoGnn) {
    const auto& monitor = split.val.empty() ? split.train : split.val;
    bool any = false;
    for (const auto& p : candidates) {
      try {
        const auto model = train(ModelConfig::defaults(Architecture::Gcn, {p}, seed), train_cfg, graph, split);
        sel.scores.push_back(evaluate(model, graph, monitor).micro);
        any = true;
      } catch (const PipelineError&) {
        sel.scores.push_back(-std::numeric_limits<double>::infinity());
      }
    }
    if (!any) throw PipelineError("select_backdoor_metapath: training diverged on every candidate");
  } else {
    std::vector<Metapath> all(candidates.begin(), candidates.end());
    const auto model = train(ModelConfig::defaults(Architecture::Han, all, seed), train_cfg, graph, split);
    sel.scores = model.attention;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < sel.scores.size(); ++i) {
    if (sel.scores[i] > sel.scores[best]) best = i;
  }
  sel.chosen = candidates[best];
  return sel;
}

std::vector<std::uint32_t> eligible_poison_nodes(const HeteroGraph& graph, NodeRef v_t, const Metapath& p_b, int y_t,
                                                 const DataSplit& split) {
  require_target(graph, v_t, "trigger node");
  require_projection(graph, p_b);
  const auto connected = reachable_backward(graph, v_t.index, p_b.steps());
  std::vector<std::uint32_t> out;
  for (std::uint32_t v : split.train) {
    if (v == v_t.index || graph.label(v) == y_t || graph.label(v) == kUnlabeled) continue;
    if (std::binary_search(connected.begin(), connected.end(), v)) continue;
    const NodeRef ref{graph.target_type(), v};
    if (single_edge_completion(graph, ref, v_t, p_b)) out.push_back(v);
  }
  return out;
}

std::vector<NodeRef> identify_poisoned_nodes(const HeteroGraph& graph, NodeRef v_t, const Metapath& p_b, int y_t,
                                             const BudgetConfig& budget, const DataSplit& split, std::uint64_t seed) {
  const std::size_t b = attack_budget(graph, split, budget);
  if (b == 0) throw ValidationError("empty poison set: budget rounds to zero");
  auto eligible = eligible_poison_nodes(graph, v_t, p_b, y_t, split);
  if (eligible.empty()) throw ValidationError("empty poison set: no eligible training node");
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(std::min(b, eligible.size()));
  std::vector<NodeRef> out;
  for (std::uint32_t v : eligible) out.push_back(NodeRef{graph.target_type(), v});
  return out;
}

std::pair<HeteroGraph, PoisonPlan> poison(const HeteroGraph& graph, NodeRef v_t, const Metapath& p_b,
                                          std::span<const NodeRef> v_p, int y_t) {
  require_target(graph, v_t, "trigger node");
  require_projection(graph, p_b);
  if (y_t < 0 || y_t >= graph.num_classes()) throw ValidationError("poison: target class out of range");
  PoisonPlan plan;
  plan.variant = AttackVariant::Hgba;
  plan.v_t = v_t;
  plan.p_b = p_b;
  plan.y_t = y_t;
  HeteroGraph g = graph;
  std::vector<int> labels(graph.labels().begin(), graph.labels().end());
  for (const NodeRef& v : v_p) {
    require_target(graph, v, "poisoned node");
    if (is_connected_via(g, v, v_t, p_b)) {
      if (is_connected_via(graph, v, v_t, p_b)) {
        throw ValidationError("poison: node " + std::to_string(v.index) + " is already connected to the trigger");
      }
      continue;
    }
    const auto e = single_edge_completion(g, v, v_t, p_b);
    if (!e) throw ValidationError("poison: no single-edge completion for node " + std::to_string(v.index));
    g = attach_edge(g, *e);
    labels[v.index] = y_t;
    plan.v_p.push_back(v);
    plan.e_p.push_back(*e);
  }
  plan.ledger = {0, plan.e_p.size()};
  return {g.with_labels(std::move(labels)), std::move(plan)};
}

HeteroGraph activate_self_node(const HeteroGraph& graph, NodeRef v_attacker, const PoisonPlan& plan) {
  require_target(graph, v_attacker, "attacker node");
  const auto e = single_edge_completion(graph, v_attacker, plan.v_t, plan.p_b);
  if (!e) throw ValidationError("activate_self_node: no single-edge completion");
  return attach_edge(graph, *e);
}

Ledger connect_via(HeteroGraph& graph, NodeRef from, NodeRef to, const Metapath& p) {
  const auto steps = p.steps();
  const auto types = p.types();
  if (from.type != types.front() || to.type != types.back()) throw ValidationError("connect_via: endpoint types");
  const std::size_t l = steps.size();
  const auto& schema = graph.schema();
  for (std::size_t k = l; k-- > 0;) {
    const auto xs = reachable(graph, from.index, steps.first(k));
    const auto& rel = schema.relations[steps[k].relation];
    for (std::uint32_t x : xs) {
      if (k + 1 == l) {
        if (rel.src == rel.dst && x == to.index) continue;
        const Edge e = steps[k].reverse ? Edge{to.index, x} : Edge{x, to.index};
        if (graph.has_edge(steps[k].relation, e)) continue;
      }
      Ledger ledger;
      std::uint32_t prev = x;
      for (std::size_t i = k; i + 1 < l; ++i) {
        const std::uint32_t next = append_mean_node(graph, types[i + 1]);
        add_step_edge(graph, steps[i], prev, next);
        prev = next;
        ++ledger.new_nodes;
        ++ledger.new_edges;
      }
      add_step_edge(graph, steps[l - 1], prev, to.index);
      ++ledger.new_edges;
      return ledger;
    }
  }
  throw ValidationError("connect_via: no connecting chain");
}

HeteroGraph activate_indiscriminate(const HeteroGraph& graph, NodeRef v_target, const PoisonPlan& plan) {
  require_target(graph, v_target, "target node");
  require_target(graph, plan.v_t, "trigger node");
  HeteroGraph g = graph;
  const std::vector<double> features(graph.feature_row(plan.v_t).begin(), graph.feature_row(plan.v_t).end());
  const std::uint32_t replica = append_node(g, graph.target_type(), features);
  connect_via(g, v_target, NodeRef{graph.target_type(), replica}, plan.p_b);
  return g;
}

void validate(const SbaConfig& cfg) {
  if (cfg.variant == AttackVariant::Hgba) throw ConfigError("sba: variant must be sba-sample or sba-gen");
  if (cfg.trigger_size == 0) throw ConfigError("sba: trigger size must be positive");
  if (!(cfg.edge_prob >= 0.0 && cfg.edge_prob <= 1.0)) throw ConfigError("sba: edge probability must lie in [0, 1]");
}

std::pair<HeteroGraph, PoisonPlan> sba_poison(const HeteroGraph& graph, const SbaConfig& cfg, NodeRef v_t,
                                              const Metapath& p_b, int y_t, const BudgetConfig& budget,
                                              const DataSplit& split, std::uint64_t seed) {
  validate(cfg);
  require_projection(graph, p_b);
  if (y_t < 0 || y_t >= graph.num_classes()) throw ValidationError("sba: target class out of range");
  const std::size_t b = attack_budget(graph, split, budget);
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t v : split.train) {
    if (graph.label(v) != y_t && graph.label(v) != kUnlabeled) candidates.push_back(v);
  }
  if (candidates.empty()) throw ValidationError("sba: no eligible training node");
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);

  PoisonPlan plan;
  plan.variant = cfg.variant;
  plan.v_t = v_t;
  plan.p_b = p_b;
  plan.y_t = y_t;
  plan.trigger_size = cfg.trigger_size;
  plan.edge_prob = cfg.edge_prob;
  plan.seed = seed;
  const TriggerSource src = trigger_source(graph, cfg.variant);
  HeteroGraph g = graph;
  std::vector<int> labels(graph.labels().begin(), graph.labels().end());
  for (std::uint32_t v : candidates) {
    HeteroGraph next = g;
    const Ledger cost = attach_trigger(next, v, p_b, cfg.trigger_size, cfg.edge_prob, src, rng);
    if (plan.ledger.total() + cost.total() > b) break;
    g = std::move(next);
    plan.ledger.new_nodes += cost.new_nodes;
    plan.ledger.new_edges += cost.new_edges;
    plan.v_p.push_back(NodeRef{graph.target_type(), v});
    labels[v] = y_t;
  }
  if (plan.v_p.empty()) throw ValidationError("sba: budget of " + std::to_string(b) + " is below one trigger's cost");
  labels.resize(g.target_count(), kUnlabeled);
  plan.e_p = added_edges(graph, g);
  return {g.with_labels(std::move(labels)), std::move(plan)};
}

HeteroGraph activate_sba(const HeteroGraph& graph, NodeRef v_target, const PoisonPlan& plan, std::uint64_t seed) {
  require_target(graph, v_target, "target node");
  const AttackVariant variant = plan.variant == AttackVariant::Hgba ? AttackVariant::SbaGen : plan.variant;
  std::mt19937_64 rng(seed);
  HeteroGraph g = graph;
  attach_trigger(g, v_target.index, plan.p_b, plan.trigger_size, plan.edge_prob, trigger_source(graph, variant), rng);
  return g;
}

Ledger graph_delta(const HeteroGraph& before, const HeteroGraph& after) {
  if (!(before.schema().relations == after.schema().relations)) throw ValidationError("graph_delta: schema differs");
  Ledger d;
  for (std::size_t t = 0; t < before.schema().node_types.size(); ++t) {
    const auto nt = static_cast<NodeTypeId>(t);
    if (after.node_count(nt) < before.node_count(nt)) throw ValidationError("graph_delta: nodes were removed");
    d.new_nodes += after.node_count(nt) - before.node_count(nt);
  }
  for (std::size_t r = 0; r < before.schema().relations.size(); ++r) {
    const auto rid = static_cast<RelationId>(r);
    for (const Edge& e : before.edges(rid)) {
      if (!after.has_edge(rid, e)) throw ValidationError("graph_delta: edges were removed");
    }
  }
  d.new_edges = added_edges(before, after).size();
  return d;
}

}  // namespace hgba
