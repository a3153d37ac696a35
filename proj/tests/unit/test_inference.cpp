#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "hgba/inference.hpp"
#include "hgba/models.hpp"

using namespace hgba;

namespace {

TrainedModel random_model(std::mt19937_64& rng, const HeteroGraph& g, Architecture arch) {
  const std::vector<Metapath> paths{Metapath::parse(g.schema(), "T-A-T"), Metapath::parse(g.schema(), "T-B-T")};
  ModelConfig cfg = ModelConfig::defaults(arch, paths, rng());
  cfg.hidden = 7;
  TrainedModel m = init_model(cfg, g);
  for (auto& p : m.params)
    for (double& v : p.value.values()) v += 0.2 * std::normal_distribution<double>()(rng);
  return m;
}

/// A random append-only edit: a few new nodes, new edges, and changed feature rows.
HeteroGraph random_edit(std::mt19937_64& rng, const HeteroGraph& g) {
  HeteroGraph h = g;
  std::uniform_int_distribution<int> coin(0, 3);
  for (NodeTypeId t = 0; t < 3; ++t) {
    for (int k = coin(rng); k > 0; --k) {
      const auto row = test::random_dense(rng, 1, h.features(t).cols());
      h = h.with_node(t, row.row(0), t == 0 ? 1 : kUnlabeled);
    }
  }
  for (RelationId r = 0; r < 3; ++r) {
    const auto& rel = h.schema().relations[r];
    std::uniform_int_distribution<std::uint32_t> s(0, static_cast<std::uint32_t>(h.node_count(rel.src) - 1));
    std::uniform_int_distribution<std::uint32_t> d(0, static_cast<std::uint32_t>(h.node_count(rel.dst) - 1));
    for (int k = coin(rng); k > 0; --k) {
      const Edge e{s(rng), d(rng)};
      if (!h.has_edge(r, e)) h = h.with_edge(r, e);
    }
  }
  if (coin(rng) == 0) {
    DenseMatrix x = h.features(0);
    x(0, 0) += 1.0;
    h = h.with_features(0, std::move(x));
  }
  return h;
}

}  // namespace

TEST_CASE("incremental logits match a full forward pass after append-only edits") {
  std::mt19937_64 rng(31);
  for (auto arch : {Architecture::Gcn, Architecture::Rgcn, Architecture::Han}) {
    CAPTURE(to_string(arch));
    for (int trial = 0; trial < 15; ++trial) {
      const HeteroGraph g = test::random_hetero(rng, 50, 0.1);
      const TrainedModel m = random_model(rng, g, arch);
      const DeltaInference inf(m, g);
      for (int edit = 0; edit < 4; ++edit) {
        const HeteroGraph h = random_edit(rng, g);
        const DenseMatrix got = inf.logits(h);
        const DenseMatrix want = forward(m, h);
        REQUIRE(got.rows() == want.rows());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got.values()[i] - want.values()[i]) <= 1e-12);
        CHECK(inf.predict(h) == predict(m, h));
      }
      CHECK(inf.logits(g) == forward(m, g));
    }
  }
}

TEST_CASE("edits that remove edges fall back to a full pass") {
  std::mt19937_64 rng(32);
  const HeteroGraph g = test::random_hetero(rng, 50, 0.2);
  const TrainedModel m = random_model(rng, g, Architecture::Gcn);
  const DeltaInference inf(m, g);
  const Edge gone[] = {g.edges(0).front()};
  const HeteroGraph h = g.without_edges(0, gone);
  CHECK_FALSE(diff_graphs(g, h).compatible);
  CHECK(inf.logits(h) == forward(m, h));
}

TEST_CASE("diff reports appended nodes, added edges and edited rows") {
  std::mt19937_64 rng(33);
  const HeteroGraph g = test::random_hetero(rng, 50, 0.1);
  const double row[] = {1.0, 2.0, 3.0};
  HeteroGraph h = g.with_node(1, row);
  const std::uint32_t a = static_cast<std::uint32_t>(g.node_count(1));
  h = h.with_edge(0, {0, a});
  const auto d = diff_graphs(g, h);
  CHECK(d.compatible);
  CHECK(d.new_counts[1] == d.old_counts[1] + 1);
  CHECK(d.added_edges[0] == std::vector<Edge>{{0, a}});
  CHECK(d.added_edges[1].empty());
  CHECK(d.dirty_rows[1] == std::vector<std::uint32_t>{a});
  CHECK(d.dirty_rows[0].empty());
}
