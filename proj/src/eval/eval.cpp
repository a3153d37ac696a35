#include "hgba/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hgba/error.hpp"
#include "hgba/inference.hpp"

namespace hgba {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void require_eligible(const std::vector<std::uint32_t>& eligible) {
  if (eligible.empty()) throw ValidationError("ASR: empty eligible set");
}

void finish(AsrResult& r) {
  r.successes = 0;
  for (const auto& o : r.outcomes) r.successes += o.success ? 1 : 0;
  r.eligible = r.outcomes.size();
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::SelfNode: return "self-node";
    case Strategy::Indiscriminate: return "indiscriminate";
    case Strategy::BaselineTrigger: return "baseline-trigger";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::SelfNode, Strategy::Indiscriminate, Strategy::BaselineTrigger}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown activation strategy '" + std::string(name) + "'");
}

Predictor model_predictor(const TrainedModel& model) {
  return [&model](const HeteroGraph& g) { return predict(model, g); };
}

std::vector<std::uint32_t> asr_eligible(const HeteroGraph& graph, std::span<const std::uint32_t> test_nodes,
                                        const PoisonPlan& plan, Strategy strategy) {
  std::vector<std::uint32_t> connected;
  if (strategy != Strategy::BaselineTrigger) {
    connected = reachable_backward(graph, plan.v_t.index, plan.p_b.steps());
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t v : test_nodes) {
    const int y = graph.label(v);
    if (y == kUnlabeled || y == plan.y_t) continue;
    if (strategy != Strategy::BaselineTrigger) {
      if (v == plan.v_t.index || std::binary_search(connected.begin(), connected.end(), v)) continue;
    }
    if (strategy == Strategy::SelfNode &&
        !single_edge_completion(graph, {graph.target_type(), v}, plan.v_t, plan.p_b)) {
      continue;
    }
    out.push_back(v);
  }
  return out;
}

HeteroGraph apply_trigger(const HeteroGraph& graph, std::uint32_t node, const PoisonPlan& plan, Strategy strategy) {
  const NodeRef v{graph.target_type(), node};
  switch (strategy) {
    case Strategy::SelfNode: return activate_self_node(graph, v, plan);
    case Strategy::Indiscriminate: return activate_indiscriminate(graph, v, plan);
    case Strategy::BaselineTrigger: return activate_sba(graph, v, plan, mix_seed(plan.seed, node));
  }
  throw ConfigError("unknown activation strategy");
}

void validate(const NoiseConfig& cfg) {
  if (!(cfg.level >= 0.0 && cfg.level <= 1.0)) throw ConfigError("noise level must lie in [0, 1]");
}

HeteroGraph perturb_features(const HeteroGraph& graph, std::span<const std::uint32_t> nodes, const Metapath& p,
                             const NoiseConfig& cfg) {
  validate(cfg);
  const NodeTypeId t = graph.target_type();
  for (std::uint32_t v : nodes) {
    if (v >= graph.target_count()) throw ValidationError("perturb_features: node out of range");
  }
  if (cfg.level == 0.0 || nodes.empty()) return graph;
  std::vector<std::uint32_t> affected(nodes.begin(), nodes.end());
  if (cfg.scope == NoiseScope::NodeAndNeighbors) {
    if (!p.symmetric_endpoints() || p.source_type() != t) {
      throw ValidationError("perturb_features: metapath must project onto the target type");
    }
    for (std::uint32_t v : nodes) {
      for (std::uint32_t w : reachable(graph, v, p.steps())) {
        if (w != v) affected.push_back(w);
      }
    }
  }
  std::sort(affected.begin(), affected.end());
  affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

  const DenseMatrix& x = graph.features(t);
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += x(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) sd[c] += (x(r, c) - mean[c]) * (x(r, c) - mean[c]);
  }
  for (double& s : sd) s = std::sqrt(s / static_cast<double>(x.rows()));

  DenseMatrix out = x;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::uint32_t v : affected) {
    for (std::size_t c = 0; c < d; ++c) {
      const double z = mean[c] + sd[c] * normal(rng);
      out(v, c) = (1.0 - cfg.level) * x(v, c) + cfg.level * z;
    }
  }
  return graph.with_features(t, std::move(out));
}

AsrResult asr_one_at_a_time(const Predictor& predict, const HeteroGraph& graph,
                            std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                            const std::optional<NoiseConfig>& noise) {
  const auto eligible = asr_eligible(graph, test_nodes, plan, strategy);
  require_eligible(eligible);
  if (noise) validate(*noise);
  AsrResult r;
  r.strategy = strategy;
  for (std::uint32_t v : eligible) {
    HeteroGraph g = graph;
    if (noise) {
      NoiseConfig per_node = *noise;
      per_node.seed = mix_seed(noise->seed, v);
      const std::uint32_t one[] = {v};
      g = perturb_features(g, one, plan.p_b, per_node);
    }
    g = apply_trigger(g, v, plan, strategy);
    const int pred = predict(g).at(v);
    r.outcomes.push_back({v, pred, pred == plan.y_t});
  }
  finish(r);
  r.asr = static_cast<double>(r.successes) / static_cast<double>(r.eligible);
  return r;
}

AsrResult asr_one_at_a_time(const TrainedModel& model, const HeteroGraph& graph,
                            std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                            const std::optional<NoiseConfig>& noise) {
  const DeltaInference inference(model, graph);
  return asr_one_at_a_time([&](const HeteroGraph& g) { return inference.predict(g); }, graph, test_nodes, plan, strategy,
                           noise);
}

AsrResult asr_simultaneous(const Predictor& predict, const HeteroGraph& graph,
                           std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                           double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("simultaneous fraction must lie in (0, 1]");
  auto eligible = asr_eligible(graph, test_nodes, plan, strategy);
  require_eligible(eligible);
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  const auto n = eligible.size();
  const auto batch = std::max<std::size_t>(
      1, std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)))));
  AsrResult r;
  r.strategy = strategy;
  double sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    HeteroGraph g = graph;
    for (std::size_t i = start; i < end; ++i) {
      const std::uint32_t v = eligible[i];
      if (strategy == Strategy::SelfNode && is_connected_via(g, NodeRef{g.target_type(), v}, plan.v_t, plan.p_b)) {
        continue;
      }
      g = apply_trigger(g, v, plan, strategy);
    }
    const auto pred = predict(g);
    std::size_t hits = 0;
    for (std::size_t i = start; i < end; ++i) {
      const std::uint32_t v = eligible[i];
      const bool ok = pred.at(v) == plan.y_t;
      hits += ok ? 1 : 0;
      r.outcomes.push_back({v, pred.at(v), ok});
    }
    sum += static_cast<double>(hits) / static_cast<double>(end - start);
    ++batches;
  }
  std::sort(r.outcomes.begin(), r.outcomes.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
  finish(r);
  r.asr = sum / static_cast<double>(batches);
  return r;
}

AsrResult asr_simultaneous(const TrainedModel& model, const HeteroGraph& graph,
                           std::span<const std::uint32_t> test_nodes, const PoisonPlan& plan, Strategy strategy,
                           double fraction, std::uint64_t seed) {
  const DeltaInference inference(model, graph);
  return asr_simultaneous([&](const HeteroGraph& g) { return inference.predict(g); }, graph, test_nodes, plan, strategy,
                          fraction, seed);
}

}  // namespace hgba
