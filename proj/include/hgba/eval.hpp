#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgba/attack.hpp"
#include "hgba/hetgraph.hpp"
#include "hgba/metapath.hpp"
#include "hgba/models.hpp"

namespace hgba {

enum class Strategy { SelfNode, Indiscriminate, BaselineTrigger };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

/// Maps a graph to one predicted class per target node.
using Predictor = std::function<std::vector<int>(const HeteroGraph&)>;
Predictor model_predictor(const TrainedModel& model);

struct NodeOutcome {
  std::uint32_t node = 0;
  int predicted = 0;
  bool success = false;
};

struct AsrResult {
  Strategy strategy = Strategy::SelfNode;
  std::size_t successes = 0;
  std::size_t eligible = 0;
  double asr = 0.0;
  std::vector<NodeOutcome> outcomes;
};

/// Test nodes whose label is observed and differs from y_t; for the relation
/// triggers also not already connected to v_t via P_b. Self-Node additionally
/// requires a single-edge completion.
std::vector<std::uint32_t> asr_eligible(const HeteroGraph& graph, std::span<const std::uint32_t> test_nodes,
                                        const PoisonPlan& plan, Strategy strategy);

/// Applies the strategy's trigger to one node. Baseline triggers are seeded from the plan seed and node index.
HeteroGraph apply_trigger(const HeteroGraph& graph, std::uint32_t node, const PoisonPlan& plan, Strategy strategy);

enum class NoiseScope { Node, NodeAndNeighbors };

struct NoiseConfig {
  double level = 0.0;
  NoiseScope scope = NoiseScope::NodeAndNeighbors;
  std::uint64_t seed = 0;
};

void validate(const NoiseConfig& cfg);

/// x <- (1 - level) x + level z with z ~ N(column mean, column std) of the target features,
/// for each node and (by scope) its neighbours in the projection of `p`.
HeteroGraph perturb_features(const HeteroGraph& graph, std::span<const std::uint32_t> nodes, const Metapath& p,
                             const NoiseConfig& cfg);

/// Each eligible node is triggered on its own copy of the graph. With `noise`, the node's
/// features (and its neighbours', by scope) are perturbed on that copy before the trigger.
AsrResult asr_one_at_a_time(const Predictor& predict, const HeteroGraph& graph,
                            std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                            const std::optional<NoiseConfig>& noise = std::nullopt);
AsrResult asr_one_at_a_time(const TrainedModel& model, const HeteroGraph& graph,
                            std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                            const std::optional<NoiseConfig>& noise = std::nullopt);

/// Eligible nodes are shuffled and triggered in batches of ceil(fraction * n) on a shared
/// copy; the result averages per-batch ASRs. Nodes connected by an earlier trigger in the
/// same batch keep that connection instead of a new one.
AsrResult asr_simultaneous(const Predictor& predict, const HeteroGraph& graph,
                           std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                           double fraction, std::uint64_t seed);
AsrResult asr_simultaneous(const TrainedModel& model, const HeteroGraph& graph,
                           std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                           double fraction, std::uint64_t seed);

}  // namespace hgba
