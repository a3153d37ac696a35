#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hgba/error.hpp"
#include "hgba/hetgraph.hpp"

namespace hgba {

void validate(const SynthConfig& cfg) {
  if (cfg.num_classes < 2) throw ConfigError("synth: num_classes must be at least 2");
  const auto k = static_cast<std::size_t>(cfg.num_classes);
  if (cfg.target_count < k || cfg.aux_a_count < k || cfg.aux_b_count < k) {
    throw ConfigError("synth: every node type needs at least num_classes nodes");
  }
  if (cfg.feature_dim < k) throw ConfigError("synth: feature_dim must be at least num_classes");
  if (cfg.aux_feature_dim == 0) throw ConfigError("synth: aux_feature_dim must be positive");
  if (!(cfg.separation >= 0.0) || !std::isfinite(cfg.separation)) throw ConfigError("synth: separation must be >= 0");
  if (!(cfg.homophily >= 0.0 && cfg.homophily <= 1.0)) throw ConfigError("synth: homophily must lie in [0, 1]");
  if (cfg.secondary_homophily > 1.0) throw ConfigError("synth: secondary_homophily must be <= 1");
  if (!(cfg.skew_a >= 0.0) || !std::isfinite(cfg.skew_a)) throw ConfigError("synth: skew_a must be >= 0");
  if (!(cfg.links_a >= 1.0) || !(cfg.links_b >= 1.0)) throw ConfigError("synth: link means must be >= 1");
}

namespace {

// Each target node links to 1 + Poisson(mean - 1) auxiliary nodes. With
// probability `homophily` a link goes to an auxiliary node owned by the target's
// class (auxiliary node j is owned by class j % k); otherwise to one owned by a
// different class. A negative homophily picks uniformly among all auxiliary nodes.
std::vector<Edge> wire(const std::vector<int>& labels, std::size_t aux_count, int k, double homophily, double mean,
                       double skew, std::mt19937_64& rng) {
  std::vector<std::vector<std::uint32_t>> owned(static_cast<std::size_t>(k));
  for (std::uint32_t j = 0; j < aux_count; ++j) owned[j % static_cast<std::size_t>(k)].push_back(j);
  // Popularity weight of auxiliary node j is (1 + rank_j)^-skew over a random ranking.
  std::vector<std::uint32_t> rank(aux_count);
  for (std::uint32_t j = 0; j < aux_count; ++j) rank[j] = j;
  if (skew != 0.0) std::shuffle(rank.begin(), rank.end(), rng);
  auto weights = [&](const std::vector<std::uint32_t>& pool) {
    std::vector<double> w;
    for (std::uint32_t j : pool) w.push_back(std::pow(1.0 + rank[j], -skew));
    return std::discrete_distribution<std::size_t>(w.begin(), w.end());
  };
  std::vector<std::discrete_distribution<std::size_t>> owned_pick;
  for (const auto& pool : owned) owned_pick.push_back(weights(pool));
  std::vector<std::uint32_t> all(aux_count);
  for (std::uint32_t j = 0; j < aux_count; ++j) all[j] = j;
  auto any_pick = weights(all);
  std::poisson_distribution<int> extra(std::max(mean - 1.0, 1e-9));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> other_class(1, k - 1);

  std::vector<Edge> edges;
  for (std::uint32_t t = 0; t < labels.size(); ++t) {
    const int want = 1 + (mean > 1.0 ? extra(rng) : 0);
    std::set<std::uint32_t> chosen;
    for (int attempt = 0; static_cast<int>(chosen.size()) < want && attempt < 8 * want; ++attempt) {
      std::uint32_t a;
      if (homophily < 0.0) {
        a = skew != 0.0 ? static_cast<std::uint32_t>(any_pick(rng))
                        : std::uniform_int_distribution<std::uint32_t>(0, static_cast<std::uint32_t>(aux_count - 1))(rng);
      } else {
        int c = labels[t];
        if (coin(rng) >= homophily) c = (c + other_class(rng)) % k;
        const auto& pool = owned[static_cast<std::size_t>(c)];
        a = skew != 0.0 ? pool[owned_pick[static_cast<std::size_t>(c)](rng)]
                        : pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      }
      chosen.insert(a);
    }
    for (std::uint32_t a : chosen) edges.emplace_back(t, a);
  }
  return edges;
}

}  // namespace

HeteroGraph synth_generate(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const int k = cfg.num_classes;

  std::vector<int> labels(cfg.target_count);
  std::uniform_int_distribution<int> pick_class(0, k - 1);
  for (int& y : labels) y = pick_class(rng);

  // Class means are scaled one-hot vectors, so every pair sits `separation` apart.
  const double offset = cfg.separation / std::sqrt(2.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  DenseMatrix target_x(cfg.target_count, cfg.feature_dim);
  for (std::size_t i = 0; i < cfg.target_count; ++i) {
    auto row = target_x.row(i);
    for (double& v : row) v = noise(rng);
    row[static_cast<std::size_t>(labels[i])] += offset;
  }
  DenseMatrix a_x(cfg.aux_a_count, cfg.aux_feature_dim);
  for (double& v : a_x.values()) v = noise(rng);
  DenseMatrix b_x(cfg.aux_b_count, cfg.aux_feature_dim);
  for (double& v : b_x.values()) v = noise(rng);

  auto ta = wire(labels, cfg.aux_a_count, k, cfg.homophily, cfg.links_a, cfg.skew_a, rng);
  auto tb = wire(labels, cfg.aux_b_count, k, cfg.secondary_homophily, cfg.links_b, 0.0, rng);

  Schema schema;
  schema.node_types = {{"T", cfg.target_count, cfg.feature_dim},
                       {"A", cfg.aux_a_count, cfg.aux_feature_dim},
                       {"B", cfg.aux_b_count, cfg.aux_feature_dim}};
  schema.relations = {{"T-A", 0, 1}, {"T-B", 0, 2}};
  std::vector<DenseMatrix> features;
  features.push_back(std::move(target_x));
  features.push_back(std::move(a_x));
  features.push_back(std::move(b_x));
  std::vector<std::vector<Edge>> edges;
  edges.push_back(std::move(ta));
  edges.push_back(std::move(tb));
  return HeteroGraph(std::move(schema), std::move(features), std::move(edges), std::move(labels), 0, k);
}

}  // namespace hgba
