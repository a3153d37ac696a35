#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hgba/hetgraph.hpp"
#include "hgba/metapath.hpp"
#include "hgba/models.hpp"

namespace hgba {

struct BudgetConfig {
  /// Fraction of the training-set node + edge count.
  double fraction = 0.01;
  std::optional<std::size_t> cap;
};

void validate(const BudgetConfig& cfg);

/// floor(fraction * (|V_train| + |E_train|)), clipped to the cap, where E_train are the
/// edges with at least one training target endpoint.
std::size_t attack_budget(const HeteroGraph& graph, const DataSplit& split, const BudgetConfig& cfg);

/// B_a = new_nodes + new_edges.
struct Ledger {
  std::size_t new_nodes = 0;
  std::size_t new_edges = 0;

  std::size_t total() const { return new_nodes + new_edges; }
  friend bool operator==(const Ledger&, const Ledger&) = default;
};

enum class AttackVariant { Hgba, SbaSample, SbaGen };

std::string_view to_string(AttackVariant v);
AttackVariant parse_attack_variant(std::string_view name);

struct PoisonPlan {
  AttackVariant variant = AttackVariant::Hgba;
  NodeRef v_t;
  Metapath p_b;
  int y_t = 0;
  std::vector<NodeRef> v_p;
  std::vector<EdgeSpec> e_p;
  Ledger ledger;
  /// SBA trigger shape; recorded so test-time triggers match the poisoned ones.
  std::size_t trigger_size = 3;
  double edge_prob = 0.8;
  std::uint64_t seed = 0;
};

std::string plan_to_json(const PoisonPlan& plan, const Schema& schema);
PoisonPlan plan_from_json(std::string_view text, const Schema& schema);

enum class ProxyKind { HomoGnn, Hgnn };

std::string_view to_string(ProxyKind k);
ProxyKind parse_proxy(std::string_view name);

struct MetapathSelection {
  Metapath chosen;
  /// Validation Micro-F1 (homo-gnn) or attention weight (hgnn) per candidate.
  std::vector<double> scores;
};

/// Picks the candidate with the largest proxy score; ties go to the earlier candidate.
MetapathSelection select_backdoor_metapath(const HeteroGraph& graph, std::span<const Metapath> candidates,
                                           ProxyKind proxy, const DataSplit& split, std::uint64_t seed,
                                           const TrainConfig& train_cfg = {});

/// Training nodes that may be poisoned: not v_t, not yet connected to v_t via P_b,
/// label other than y_t, and admitting a single-edge completion.
std::vector<std::uint32_t> eligible_poison_nodes(const HeteroGraph& graph, NodeRef v_t, const Metapath& p_b, int y_t,
                                                 const DataSplit& split);

/// A seeded uniform sample of the eligible nodes, sized by the budget.
std::vector<NodeRef> identify_poisoned_nodes(const HeteroGraph& graph, NodeRef v_t, const Metapath& p_b, int y_t,
                                             const BudgetConfig& budget, const DataSplit& split, std::uint64_t seed);

/// Attaches one completion edge per poisoned node and relabels it to y_t. Nodes
/// connected to v_t by an earlier attachment are dropped from the plan.
std::pair<HeteroGraph, PoisonPlan> poison(const HeteroGraph& graph, NodeRef v_t, const Metapath& p_b,
                                          std::span<const NodeRef> v_p, int y_t);

/// Self-node activation: one completion edge between the attacker node and v_t.
HeteroGraph activate_self_node(const HeteroGraph& graph, NodeRef v_attacker, const PoisonPlan& plan);

/// Indiscriminate activation: a replica of v_t joined to v_target by P_b.
HeteroGraph activate_indiscriminate(const HeteroGraph& graph, NodeRef v_target, const PoisonPlan& plan);

/// Adds the shortest chain of fresh intermediates so that `from` reaches `to` along `p`,
/// reusing the longest existing prefix walk from `from`. Fresh nodes get the column-mean
/// feature row of their type. Returns the number of nodes and edges added.
Ledger connect_via(HeteroGraph& graph, NodeRef from, NodeRef to, const Metapath& p);

struct SbaConfig {
  AttackVariant variant = AttackVariant::SbaGen;
  std::size_t trigger_size = 3;
  double edge_prob = 0.8;
};

void validate(const SbaConfig& cfg);

/// Subgraph-trigger baseline: per poisoned node an Erdos-Renyi trigger of fresh target
/// nodes, each trigger edge expanded into a P_b instance, attached to the node by P_b.
std::pair<HeteroGraph, PoisonPlan> sba_poison(const HeteroGraph& graph, const SbaConfig& cfg, NodeRef v_t,
                                              const Metapath& p_b, int y_t, const BudgetConfig& budget,
                                              const DataSplit& split, std::uint64_t seed);

/// Attaches a freshly drawn trigger of the plan's shape to `v_target`, seeded by `seed`.
HeteroGraph activate_sba(const HeteroGraph& graph, NodeRef v_target, const PoisonPlan& plan, std::uint64_t seed);

/// Nodes and edges in `after` that are not in `before` (nodes are only ever appended).
Ledger graph_delta(const HeteroGraph& before, const HeteroGraph& after);

}  // namespace hgba
