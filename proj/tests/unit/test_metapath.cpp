#include <random>
#include <set>

#include "doctest.h"
#include "completion_oracle.hpp"
#include "fixtures.hpp"
#include "hgba/error.hpp"
#include "hgba/metapath.hpp"

using namespace hgba;

namespace {

const char* kPaths[] = {"T-A-T", "T-B-T", "T-A-B-T", "T-A-B-A-T", "A-T-A", "T-A-T-B-T", "T-A-B"};

}  // namespace

TEST_CASE("parsing resolves names, prefixes and explicit relations") {
  std::mt19937_64 rng(1);
  const HeteroGraph g = test::random_hetero(rng);
  const Metapath p = Metapath::parse(g.schema(), "t-a-b-t");
  CHECK(p.name() == "TABT");
  CHECK(p.text() == "T-A-B-T");
  CHECK(p.length() == 3);
  CHECK(p.steps()[0].reverse == false);
  CHECK(p.steps()[2].reverse == true);
  CHECK(Metapath::parse(g.schema(), p.text()) == p);
  CHECK(Metapath::parse(g.schema(), "T-[T-A]-A-T") == Metapath::parse(g.schema(), "T-A-T"));
  CHECK(p.reversed(g.schema()).text() == "T-B-A-T");
  CHECK_THROWS_AS(Metapath::parse(g.schema(), "T-Q-T"), ValidationError);
  CHECK_THROWS_AS(Metapath::parse(g.schema(), "T-T"), ValidationError);
  CHECK_THROWS_AS(Metapath::parse(g.schema(), "T-[A-B]-A"), ValidationError);
}

TEST_CASE("composition equals brute-force walk enumeration on random graphs") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const HeteroGraph g = test::random_hetero(rng, 60, 0.1 + 0.2 * (trial % 3));
    for (const char* text : kPaths) {
      const Metapath p = Metapath::parse(g.schema(), text);
      const SparseMatrix c = compose_adjacency(g, p);
      REQUIRE(c.rows() == g.node_count(p.source_type()));
      REQUIRE(c.cols() == g.node_count(p.end_type()));
      for (std::uint32_t u = 0; u < c.rows(); ++u) {
        auto expect = test::walk_endpoints(g, u, p);
        if (p.symmetric_endpoints()) expect.erase(u);
        const auto row = c.row_indices(u);
        CHECK(std::set<std::uint32_t>(row.begin(), row.end()) == expect);
        for (double v : c.row_values(u)) CHECK(v == 1.0);
      }
    }
  }
}

TEST_CASE("reachability helpers agree with walks") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const HeteroGraph g = test::random_hetero(rng);
    const Metapath p = Metapath::parse(g.schema(), "T-A-B-T");
    for (std::uint32_t u = 0; u < g.target_count(); ++u) {
      const auto r = reachable(g, u, p.steps());
      CHECK(std::set<std::uint32_t>(r.begin(), r.end()) == test::walk_endpoints(g, u, p));
      const auto b = reachable_backward(g, u, p.steps());
      std::set<std::uint32_t> expect;
      for (std::uint32_t v = 0; v < g.target_count(); ++v)
        if (test::walk_endpoints(g, v, p).count(u)) expect.insert(v);
      CHECK(std::set<std::uint32_t>(b.begin(), b.end()) == expect);
    }
  }
}

TEST_CASE("projection keeps features and is symmetric for palindromes") {
  std::mt19937_64 rng(4);
  const HeteroGraph g = test::random_hetero(rng);
  const auto sub = extract_subgraph(g, Metapath::parse(g.schema(), "T-A-B-A-T"));
  CHECK(sub.adjacency.is_symmetric());
  CHECK(sub.features == g.features(0));
  CHECK_THROWS_AS(extract_subgraph(g, Metapath::parse(g.schema(), "T-A-B")), ValidationError);
}

TEST_CASE("a completion may cross its own edge twice") {
  // Two target nodes share a B neighbour; nobody has an A neighbour yet.
  Schema s;
  s.node_types = {{"T", 2, 1}, {"A", 1, 1}, {"B", 1, 1}};
  s.relations = {{"T-A", 0, 1}, {"T-B", 0, 2}};
  const HeteroGraph g(s, {DenseMatrix(2, 1), DenseMatrix(1, 1), DenseMatrix(1, 1)}, {{}, {{0, 0}, {1, 0}}}, {0, 1}, 0, 2);
  const Metapath p = Metapath::parse(s, "T-A-T-B-T");
  const auto e = single_edge_completion(g, {0, 0}, {0, 1}, p);
  REQUIRE(e.has_value());
  // 0 -> a -> 0 -> b -> 1 walks the new edge out and back.
  CHECK(*e == EdgeSpec{0, {0, 0}, {1, 0}, false});
  CHECK(is_connected_via(attach_edge(g, *e), {0, 0}, {0, 1}, p));
}

TEST_CASE("single-edge completion matches the exhaustive oracle and connects") {
  std::mt19937_64 rng(5);
  std::size_t completions = 0, impossible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const HeteroGraph g = test::random_hetero(rng, 40, 0.12);
    for (const char* text : {"T-A-T", "T-A-B-T", "T-A-B-A-T", "T-A-T-B-T"}) {
      const Metapath p = Metapath::parse(g.schema(), text);
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(g.target_count() - 1));
      const NodeRef vt{0, pick(rng)}, vp{0, pick(rng)};
      if (vt == vp || test::walk_connects(g, vp.index, vt.index, p)) {
        if (vt != vp) CHECK_THROWS_AS(single_edge_completion(g, vp, vt, p), ValidationError);
        continue;
      }
      const auto got = single_edge_completion(g, vp, vt, p);
      const auto want = test::completion_oracle(g, vp, vt, p);
      CHECK(got == want);
      if (got) {
        ++completions;
        const HeteroGraph h = attach_edge(g, *got);
        CHECK(test::walk_connects(h, vp.index, vt.index, p));
        CHECK(is_connected_via(h, vp, vt, p));
        CHECK(h.total_edges() == g.total_edges() + 1);
      } else {
        ++impossible;
        CHECK(test::no_single_edge_connects(g, vp, vt, p));
      }
    }
  }
  CHECK(completions > 50);
  CHECK(impossible > 0);
}

TEST_CASE("attach_edge checks endpoint types") {
  std::mt19937_64 rng(6);
  const HeteroGraph g = test::random_hetero(rng);
  EdgeSpec e{0, {1, 0}, {0, 0}, false};
  CHECK_THROWS_AS(attach_edge(g, e), ValidationError);
}

TEST_CASE("symmetric metapath enumeration") {
  std::mt19937_64 rng(7);
  const HeteroGraph g = test::random_hetero(rng);
  const auto paths = symmetric_metapaths(g.schema(), 0, 4);
  std::set<std::string> seen;
  for (const auto& p : paths) {
    CHECK(p.source_type() == 0);
    CHECK(p.end_type() == 0);
    CHECK(p.length() <= 4);
    CHECK(seen.insert(p.text()).second);
  }
  for (const auto& p : paths) {
    const auto r = p.reversed(g.schema()).text();
    if (r != p.text()) CHECK_FALSE(seen.count(r));
  }
  CHECK(seen.count("T-A-T"));
  CHECK(seen.count("T-B-T"));
  CHECK(seen.count("T-A-B-T") + seen.count("T-B-A-T") == 1);
  CHECK(paths == symmetric_metapaths(g.schema(), 0, 4));
}
