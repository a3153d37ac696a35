#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "betweenness_oracle.hpp"
#include "completion_oracle.hpp"
#include "fixtures.hpp"
#include "grad_cases.hpp"
#include "hgba/graph_io.hpp"
#include "hgba/pipeline.hpp"
#include "ledger_oracle.hpp"

using namespace hgba;

namespace {

enum class Status { Pass, Fail, Skip };

struct Verdict {
  Status status = Status::Fail;
  std::string detail;
};

Verdict verdict(bool ok, const std::string& detail) { return {ok ? Status::Pass : Status::Fail, detail}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}
std::string pct(double v) { return std::isnan(v) ? "nan" : fmt("%.1f", 100.0 * v); }

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1-5: numerics and protocol invariants ---------------------------------

Verdict numerics() {
  std::mt19937_64 rng(101);
  double worst_op = 0, worst_model = 0;
  std::map<std::string, int> cases;
  for (int trial = 0; trial < 20; ++trial) {
    for (const auto& c : test::op_cases(rng)) {
      worst_op = std::max(worst_op, grad_check(c.fn, c.params, {.seed = static_cast<std::uint64_t>(trial)}));
      ++cases[c.name];
    }
  }
  for (auto arch : {Architecture::Gcn, Architecture::Rgcn, Architecture::Han}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto c = test::model_case(rng, arch);
      worst_model = std::max(worst_model, grad_check(c.fn, c.params, {.max_coords = 60, .seed = static_cast<std::uint64_t>(trial)}));
      ++cases[c.name];
    }
  }
  const int fewest = std::min_element(cases.begin(), cases.end(), [](auto& a, auto& b) { return a.second < b.second; })->second;
  return verdict(worst_op < 1e-4 && worst_model < 1e-4 && fewest >= 20,
                 std::to_string(cases.size()) + " functions x >=" + std::to_string(fewest) + " cases, max rel err ops " +
                     fmt("%.2e", worst_op) + " models " + fmt("%.2e", worst_model));
}

SparseMatrix undirected(std::size_t n, std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> edges) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  for (auto [a, b] : edges) {
    e.emplace_back(a, b);
    e.emplace_back(b, a);
  }
  return SparseMatrix::from_pattern(n, n, e);
}

Verdict centrality_oracle() {
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<std::size_t> size(1, 50);
  std::uniform_real_distribution<double> dens(0.02, 0.3);
  int matched = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto adj = test::random_undirected(rng, size(rng), dens(rng));
    const auto got = betweenness(adj);
    const auto want = test::naive_betweenness(adj);
    bool ok = got.size() == want.size();
    for (std::size_t v = 0; ok && v < got.size(); ++v) {
      const double err = std::abs(got[v] - want[v]) / std::max(1.0, want[v]);
      worst = std::max(worst, err);
      ok = err <= 1e-12;
    }
    matched += ok ? 1 : 0;
  }
  const bool star = betweenness(undirected(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}})) == std::vector<double>{6, 0, 0, 0, 0};
  const bool path = betweenness(undirected(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}})) == std::vector<double>{0, 3, 4, 3, 0};
  return verdict(matched == 100 && star && path, std::to_string(matched) + "/100 random graphs match (max rel diff " +
                                                     fmt("%.1e", worst) + "), star " + (star ? "ok" : "wrong") +
                                                     ", path " + (path ? "ok" : "wrong"));
}

Verdict metapath_oracle() {
  std::mt19937_64 rng(103);
  int composed_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const HeteroGraph g = test::random_hetero(rng, 60, 0.1 + 0.2 * (trial % 3));
    bool ok = true;
    for (const char* text : {"T-A-T", "T-B-T", "T-A-B-T", "T-A-B-A-T", "A-T-A", "T-A-T-B-T", "T-A-B"}) {
      const Metapath p = Metapath::parse(g.schema(), text);
      const SparseMatrix c = compose_adjacency(g, p);
      for (std::uint32_t u = 0; ok && u < c.rows(); ++u) {
        auto expect = test::walk_endpoints(g, u, p);
        if (p.symmetric_endpoints()) expect.erase(u);
        const auto row = c.row_indices(u);
        ok = std::set<std::uint32_t>(row.begin(), row.end()) == expect;
      }
    }
    composed_ok += ok ? 1 : 0;
  }
  std::size_t queries = 0, agree = 0, connects = 0, completions = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const HeteroGraph g = test::random_hetero(rng, 40, 0.12);
    for (const char* text : {"T-A-T", "T-A-B-T", "T-A-B-A-T", "T-A-T-B-T"}) {
      const Metapath p = Metapath::parse(g.schema(), text);
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(g.target_count() - 1));
      const NodeRef vt{0, pick(rng)}, vp{0, pick(rng)};
      if (vt == vp || test::walk_connects(g, vp.index, vt.index, p)) continue;
      ++queries;
      const auto got = single_edge_completion(g, vp, vt, p);
      agree += got == test::completion_oracle(g, vp, vt, p) ? 1 : 0;
      if (got) {
        ++completions;
        connects += test::walk_connects(attach_edge(g, *got), vp.index, vt.index, p) ? 1 : 0;
      } else {
        connects += test::no_single_edge_connects(g, vp, vt, p) ? 1 : 0;
      }
    }
  }
  return verdict(composed_ok == 100 && agree == queries && connects == queries,
                 "composition " + std::to_string(composed_ok) + "/100 graphs; completion agrees " +
                     std::to_string(agree) + "/" + std::to_string(queries) + ", " + std::to_string(completions) +
                     " returned edges connect, exhaustive search confirms every refusal: " +
                     (connects == queries ? "yes" : "no"));
}

/// floor(f * (|V_train| + edges with a training target endpoint)), counted edge by edge.
std::size_t budget_oracle(const HeteroGraph& g, const DataSplit& split, double f) {
  const std::set<std::uint32_t> train(split.train.begin(), split.train.end());
  std::size_t edges = 0;
  for (RelationId r = 0; r < g.schema().relations.size(); ++r) {
    const auto& rel = g.schema().relations[r];
    for (const Edge& e : g.edges(r)) {
      const bool a = rel.src == g.target_type() && train.count(e.first);
      const bool b = rel.dst == g.target_type() && train.count(e.second);
      edges += a || b ? 1 : 0;
    }
  }
  return static_cast<std::size_t>(std::floor(f * static_cast<double>(train.size() + edges)));
}

Verdict budget_ledger() {
  int hgba_plans = 0, hgba_ok = 0, sba_plans = 0, sba_ok = 0, arithmetic = 0, arithmetic_ok = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig c;
    c.target_count = 300;
    c.aux_a_count = 120;
    c.aux_b_count = 60;
    c.feature_dim = 8;
    c.seed = seed;
    const HeteroGraph g = synth_generate(c);
    const DataSplit split = make_split(g, {}, seed);
    const int yt = target_class(g, split);
    for (double f : {0.001, 0.01, 0.05, 0.2}) {
      ++arithmetic;
      arithmetic_ok += attack_budget(g, split, {f, {}}) == budget_oracle(g, split, f) ? 1 : 0;
    }
    for (const char* text : {"T-A-T", "T-B-T"}) {
      const Metapath p = Metapath::parse(g.schema(), text);
      const NodeRef vt = select_trigger_node(g, p).node;
      const auto vp = identify_poisoned_nodes(g, vt, p, yt, {0.05, {}}, split, seed);
      const auto [h, plan] = poison(g, vt, p, vp, yt);
      const Ledger d = test::recount(g, h);
      ++hgba_plans;
      hgba_ok += d.new_nodes == 0 && d.new_edges == plan.v_p.size() && plan.ledger == d ? 1 : 0;
      for (auto variant : {AttackVariant::SbaGen, AttackVariant::SbaSample}) {
        const auto [hs, sp] = sba_poison(g, {variant, 3, 0.8}, vt, p, yt, {0.05, {}}, split, seed);
        const Ledger ds = test::recount(g, hs);
        ++sba_plans;
        sba_ok += sp.ledger == ds && ds.total() <= attack_budget(g, split, {0.05, {}}) ? 1 : 0;
      }
    }
  }
  return verdict(hgba_ok == hgba_plans && sba_ok == sba_plans && arithmetic_ok == arithmetic,
                 "HGBA ledgers " + std::to_string(hgba_ok) + "/" + std::to_string(hgba_plans) + ", SBA ledgers " +
                     std::to_string(sba_ok) + "/" + std::to_string(sba_plans) + ", budget arithmetic " +
                     std::to_string(arithmetic_ok) + "/" + std::to_string(arithmetic));
}

Verdict protocol() {
  int singleton_ok = 0, singleton = 0, unchanged_ok = 0, unchanged = 0;
  std::size_t denominators = 0, bad_denominators = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SynthConfig c;
    c.target_count = 240;
    c.aux_a_count = 90;
    c.aux_b_count = 60;
    c.feature_dim = 8;
    c.seed = seed;
    const HeteroGraph g = synth_generate(c);
    const DataSplit split = make_split(g, {}, seed);
    const Metapath p = Metapath::parse(g.schema(), "T-A-T");
    const int yt = target_class(g, split);
    const NodeRef vt = select_trigger_node(g, p).node;
    const auto vp = identify_poisoned_nodes(g, vt, p, yt, {0.05, {}}, split, seed);
    auto [h, plan] = poison(g, vt, p, vp, yt);
    plan.seed = seed;
    ModelConfig mc = ModelConfig::defaults(Architecture::Gcn, {p}, seed);
    mc.hidden = 16;
    TrainConfig tc;
    tc.max_epochs = 40;
    const TrainedModel m = train(mc, tc, h, split);
    const HeteroGraph before = h;
    const auto clean = predict(m, h);
    for (auto st : {Strategy::SelfNode, Strategy::Indiscriminate, Strategy::BaselineTrigger}) {
      const auto one = asr_one_at_a_time(m, h, split.test, plan, st);
      const auto batch = asr_simultaneous(m, h, split.test, plan, st, 1.0 / static_cast<double>(one.eligible + 1), seed);
      bool same = batch.asr == one.asr && batch.outcomes.size() == one.outcomes.size();
      for (std::size_t i = 0; same && i < one.outcomes.size(); ++i) {
        same = batch.outcomes[i].node == one.outcomes[i].node && batch.outcomes[i].predicted == one.outcomes[i].predicted;
      }
      ++singleton;
      singleton_ok += same ? 1 : 0;
      for (const auto* r : {&one, &batch}) {
        for (const auto& o : r->outcomes) {
          ++denominators;
          bad_denominators += h.label(o.node) == plan.y_t ? 1 : 0;
        }
      }
      asr_simultaneous(m, h, split.test, plan, st, 0.5, seed);
    }
    ++unchanged;
    unchanged_ok += h == before && predict(m, h) == clean ? 1 : 0;
  }
  return verdict(singleton_ok == singleton && unchanged_ok == unchanged && bad_denominators == 0,
                 "singleton batches bit-exact " + std::to_string(singleton_ok) + "/" + std::to_string(singleton) +
                     ", predictions unchanged " + std::to_string(unchanged_ok) + "/" + std::to_string(unchanged) +
                     ", true-y_t nodes in " + std::to_string(denominators) + " scored outcomes: " +
                     std::to_string(bad_denominators));
}

// ---- 6-10: synthetic end-to-end runs ---------------------------------------

ExperimentConfig synthetic_config() {
  ExperimentConfig c;
  c.graph.synth.target_count = 1200;
  c.graph.synth.num_classes = 3;
  c.graph.synth.homophily = 0.9;
  c.graph.synth.separation = 5.0;
  c.graph.synth.links_a = 1.0;
  c.graph.synth.aux_a_count = 1200;
  c.model.architectures = {Architecture::Gcn, Architecture::Rgcn, Architecture::Han};
  c.attack.budget.fraction = 0.01;
  return c;
}

struct ArchStats {
  std::vector<double> clean, poisoned, asr_i, asr_ii;
};

struct SyntheticResults {
  std::map<Architecture, ArchStats> arch;
  std::vector<double> low_budget_asr_ii, low_budget_asr_i;
  std::vector<double> noise0_i, noise0_ii, noise1_i, noise1_ii;
  std::vector<double> sba_gen;
  std::vector<double> defended_asr_ii, defended_clean, undefended_clean, undefended_asr_ii;
  std::vector<double> oracle_asr_ii, oracle_clean;
  std::size_t reports = 0, consistent_reports = 0, labels_discarded = 0, labels_supervised = 0;
};

bool report_matches_diff(const HeteroGraph& before, const HeteroGraph& after, const DefenseReport& report) {
  std::set<std::pair<RelationId, Edge>> removed, listed;
  for (RelationId r = 0; r < before.schema().relations.size(); ++r) {
    for (const Edge& e : before.edges(r)) {
      if (!after.has_edge(r, e)) removed.insert({r, e});
    }
    for (const Edge& e : after.edges(r)) {
      if (!before.has_edge(r, e)) return false;
    }
  }
  for (const auto& d : report.deleted_edges) listed.insert({d.relation, d.edge});
  if (removed != listed || listed.size() != report.deleted_edges.size()) return false;
  std::vector<std::uint32_t> dropped;
  for (std::uint32_t v = 0; v < before.target_count(); ++v) {
    if (after.label(v) == before.label(v)) continue;
    if (after.label(v) != kUnlabeled || before.label(v) == kUnlabeled) return false;
    dropped.push_back(v);
  }
  return dropped == report.discarded_labels;
}

SyntheticResults run_synthetic() {
  const ExperimentConfig cfg = synthetic_config();
  const Strategy hgba_strategies[] = {Strategy::SelfNode, Strategy::Indiscriminate};
  const Strategy sba_strategy[] = {Strategy::BaselineTrigger};
  const double levels[] = {0.0, 1.0};
  SyntheticResults out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const AttackSetup s = prepare_attack(cfg, seed);
    const auto& test = s.split.test;
    std::optional<TrainedModel> gcn;
    for (auto arch : cfg.model.architectures) {
      const ModelConfig mc = victim_config(cfg, arch, s.candidates, s.clean.schema(), seed);
      const TrainedModel clean = train(mc, cfg.train, s.clean, s.split);
      TrainedModel m = train(mc, cfg.train, s.poisoned, s.split);
      auto& a = out.arch[arch];
      a.clean.push_back(evaluate(clean, s.clean, test).micro);
      a.poisoned.push_back(evaluate(m, s.poisoned, test).micro);
      a.asr_i.push_back(asr_one_at_a_time(m, s.poisoned, test, s.plan, Strategy::SelfNode).asr);
      a.asr_ii.push_back(asr_one_at_a_time(m, s.poisoned, test, s.plan, Strategy::Indiscriminate).asr);
      if (arch == Architecture::Gcn) gcn = std::move(m);
    }
    const ModelConfig mc = victim_config(cfg, Architecture::Gcn, s.candidates, s.clean.schema(), seed);

    // Budget trend: same trigger and metapath at a tenth of a percent.
    {
      const auto vp = identify_poisoned_nodes(s.clean, s.v_t, s.plan.p_b, s.y_t, {0.001, {}}, s.split, seed);
      auto [h, plan] = poison(s.clean, s.v_t, s.plan.p_b, vp, s.y_t);
      const TrainedModel m = train(mc, cfg.train, h, s.split);
      out.low_budget_asr_i.push_back(asr_one_at_a_time(m, h, test, plan, Strategy::SelfNode).asr);
      out.low_budget_asr_ii.push_back(asr_one_at_a_time(m, h, test, plan, Strategy::Indiscriminate).asr);
    }

    // Feature perturbation of each triggered node and its neighbours.
    {
      const Table t = sweep_noise(*gcn, s.poisoned, test, s.plan, levels, hgba_strategies, NoiseScope::NodeAndNeighbors, seed);
      out.noise0_i.push_back(t.rows[0][1]);
      out.noise0_ii.push_back(t.rows[0][2]);
      out.noise1_i.push_back(t.rows[1][1]);
      out.noise1_ii.push_back(t.rows[1][2]);
    }

    // Subgraph-trigger baseline at the same budget and trigger node.
    {
      auto [h, plan] = sba_poison(s.clean, {AttackVariant::SbaGen, 3, 0.8}, s.v_t, s.plan.p_b, s.y_t, cfg.attack.budget,
                                  s.split, seed);
      plan.seed = seed;
      const TrainedModel m = train(mc, cfg.train, h, s.split);
      out.sba_gen.push_back(asr_table(m, h, test, plan, sba_strategy).rows[0][0]);
    }

    // Prune+LD at 0.1, defender-realistic (every schema metapath) and along P_b only.
    out.undefended_clean.push_back(out.arch[Architecture::Gcn].poisoned.back());
    out.undefended_asr_ii.push_back(out.arch[Architecture::Gcn].asr_ii.back());
    for (bool oracle : {false, true}) {
      const std::vector<Metapath> paths = oracle ? std::vector<Metapath>{s.plan.p_b} : defender_metapaths(s.poisoned);
      const auto [d, report] = prune_ld(s.poisoned, paths, s.split.train, {0.1, false});
      ++out.reports;
      out.consistent_reports += report_matches_diff(s.poisoned, d, report) ? 1 : 0;
      const bool trainable = std::any_of(s.split.train.begin(), s.split.train.end(),
                                         [&](std::uint32_t v) { return d.label(v) != kUnlabeled; });
      double micro = std::nan(""), asr = std::nan("");
      if (trainable) {
        const TrainedModel m = train(mc, cfg.train, d, s.split);
        micro = evaluate(m, d, test).micro;
        asr = asr_table(m, d, test, s.plan, std::span(hgba_strategies).subspan(1)).rows[0][0];
      }
      if (oracle) {
        out.oracle_clean.push_back(micro);
        out.oracle_asr_ii.push_back(asr);
      } else {
        out.defended_clean.push_back(micro);
        out.defended_asr_ii.push_back(asr);
        out.labels_discarded += report.discarded_labels.size();
        out.labels_supervised += s.split.train.size();
      }
    }
    std::fprintf(stderr, "  synthetic seed %llu done in %.0fs\n", static_cast<unsigned long long>(seed), seconds_since(t0));
  }
  return out;
}

Verdict efficacy(const SyntheticResults& r) {
  bool ok = true;
  std::string detail;
  for (const auto& [arch, a] : r.arch) {
    const double clean = mean(a.clean), drop = clean - mean(a.poisoned), i = mean(a.asr_i), ii = mean(a.asr_ii);
    const bool clean_ok = std::all_of(a.clean.begin(), a.clean.end(), [](double v) { return v >= 0.90; });
    ok = ok && clean_ok && ii >= 0.85 && i >= 0.80 && drop <= 0.03;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(arch)) + " clean " + pct(clean) +
              (clean_ok ? "" : " (a seed < 90)") + " drop " + pct(drop) + " ASR_I " + pct(i) + " ASR_II " + pct(ii);
  }
  return verdict(ok, detail + " [need clean >= 90 per seed, ASR_II >= 85, ASR_I >= 80, drop <= 3]");
}

Verdict budget_trend(const SyntheticResults& r) {
  const auto& g = r.arch.at(Architecture::Gcn);
  const double hi = mean(g.asr_ii), lo = mean(r.low_budget_asr_ii);
  return verdict(hi > lo, "gcn ASR_II at 1% " + pct(hi) + " vs 0.1% " + pct(lo) + " (ASR_I " + pct(mean(g.asr_i)) +
                              " vs " + pct(mean(r.low_budget_asr_i)) + ")");
}

Verdict robustness(const SyntheticResults& r) {
  const double d2 = mean(r.noise0_ii) - mean(r.noise1_ii), d1 = mean(r.noise0_i) - mean(r.noise1_i);
  return verdict(d2 <= 0.05 && d1 <= 0.10, "gcn ASR_II " + pct(mean(r.noise0_ii)) + " -> " + pct(mean(r.noise1_ii)) +
                                               ", ASR_I " + pct(mean(r.noise0_i)) + " -> " + pct(mean(r.noise1_i)) +
                                               " at lambda 0 -> 1");
}

Verdict baseline_gap(const SyntheticResults& r) {
  const double hgba = mean(r.arch.at(Architecture::Gcn).asr_ii), sba = mean(r.sba_gen);
  return verdict(hgba - sba >= 0.15, "gcn SBA-GEN " + pct(sba) + " vs HGBA_II " + pct(hgba) + " (gap " +
                                         pct(hgba - sba) + ", need >= 15)");
}

Verdict defense(const SyntheticResults& r) {
  const double asr0 = mean(r.undefended_asr_ii), asr1 = mean(r.defended_asr_ii);
  const double f0 = mean(r.undefended_clean), f1 = mean(r.defended_clean);
  const bool consistent = r.consistent_reports == r.reports;
  const bool ok = consistent && asr1 < asr0 && f1 < f0;
  return verdict(ok, "gcn ASR_II " + pct(asr0) + " -> " + pct(asr1) + ", clean Micro-F1 " + pct(f0) + " -> " + pct(f1) +
                         " (" + std::to_string(r.labels_discarded) + "/" + std::to_string(r.labels_supervised) +
                         " labels discarded); along P_b only: ASR_II " + pct(mean(r.oracle_asr_ii)) + ", Micro-F1 " +
                         pct(mean(r.oracle_clean)) + "; reports consistent with diffs " +
                         std::to_string(r.consistent_reports) + "/" + std::to_string(r.reports));
}

// ---- 11-14: dataset fixtures ------------------------------------------------

struct Dataset {
  const char* env;
  const char* name;
  const char* metapath;
  const char* metapath_name;
  std::uint32_t trigger;
};

const Dataset kDatasets[] = {
    {"HGBA_ACM_DIR", "ACM", "P-A-P", "PAP", 2245},
    {"HGBA_DBLP_DIR", "DBLP", "A-P-C-P-A", "APCPA", 4},
    {"HGBA_IMDB_DIR", "IMDB", "M-D-M", "MDM", 242},
};

std::optional<std::string> fixture(const char* env) {
  const char* p = std::getenv(env);
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::string(p);
}

ExperimentConfig dataset_config(const std::string& dir) {
  ExperimentConfig c;
  c.graph.path = dir;
  return c;
}

DataSplit dataset_split(const ExperimentConfig& cfg, const HeteroGraph& g, std::uint64_t seed) {
  if (auto stored = load_split(cfg.graph.path)) return *stored;
  return make_split(g, cfg.split, seed);
}

Verdict acm_clean_han() {
  const auto dir = fixture("HGBA_ACM_DIR");
  if (!dir) return {Status::Skip, "HGBA_ACM_DIR not set"};
  const ExperimentConfig cfg = dataset_config(*dir);
  const HeteroGraph g = load_graph(*dir);
  const auto candidates = default_candidates(g);
  std::vector<double> micro, macro;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DataSplit split = dataset_split(cfg, g, seed);
    const TrainedModel m = train(victim_config(cfg, Architecture::Han, candidates, g.schema(), seed), cfg.train, g, split);
    const F1Scores f = evaluate(m, g, split.test);
    micro.push_back(f.micro);
    macro.push_back(f.macro);
  }
  const double mi = mean(micro), ma = mean(macro);
  return verdict(std::abs(100 * mi - 90.75) <= 2.0 && std::abs(100 * ma - 90.82) <= 2.0,
                 "han Micro " + pct(mi) + " Macro " + pct(ma) + " (target 90.75/90.82 +-2)");
}

Verdict trigger_nodes() {
  std::string detail;
  bool ok = true, any = false;
  for (const auto& d : kDatasets) {
    const auto dir = fixture(d.env);
    if (!dir) continue;
    any = true;
    const HeteroGraph g = load_graph(*dir);
    const auto node = select_trigger_node(g, Metapath::parse(g.schema(), d.metapath)).node.index;
    ok = ok && node == d.trigger;
    detail += std::string(detail.empty() ? "" : "; ") + d.name + "/" + d.metapath_name + " -> " + std::to_string(node) +
              " (expect " + std::to_string(d.trigger) + ")";
  }
  if (!any) return {Status::Skip, "no dataset fixture set"};
  return verdict(ok, detail);
}

Verdict metapath_choice() {
  std::string detail;
  bool ok = true, any = false;
  for (const auto& d : kDatasets) {
    const auto dir = fixture(d.env);
    if (!dir) continue;
    any = true;
    const ExperimentConfig cfg = dataset_config(*dir);
    const HeteroGraph g = load_graph(*dir);
    const auto candidates = default_candidates(g);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto sel = select_backdoor_metapath(g, candidates, ProxyKind::HomoGnn, dataset_split(cfg, g, seed), seed, cfg.train);
      hits += sel.chosen.name() == d.metapath_name ? 1 : 0;
    }
    ok = ok && hits == 5;
    detail += std::string(detail.empty() ? "" : "; ") + d.name + " " + d.metapath_name + " " + std::to_string(hits) + "/5";
  }
  if (!any) return {Status::Skip, "no dataset fixture set"};
  return verdict(ok, detail);
}

Verdict acm_attack() {
  const auto dir = fixture("HGBA_ACM_DIR");
  if (!dir) return {Status::Skip, "HGBA_ACM_DIR not set"};
  ExperimentConfig cfg = dataset_config(*dir);
  cfg.model.architectures = {Architecture::Gcn, Architecture::Rgcn, Architecture::Han};
  const HeteroGraph g = load_graph(*dir);
  std::vector<double> asr, clean;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const AttackSetup s = prepare_attack(cfg, g, seed);
    for (auto arch : cfg.model.architectures) {
      const TrainedModel m = train(victim_config(cfg, arch, s.candidates, g.schema(), seed), cfg.train, s.poisoned, s.split);
      clean.push_back(evaluate(m, s.poisoned, s.split.test).micro);
      asr.push_back(asr_one_at_a_time(m, s.poisoned, s.split.test, s.plan, Strategy::Indiscriminate).asr);
    }
  }
  const double a = mean(asr), c = mean(clean);
  return verdict(std::abs(100 * a - 89.67) <= 7.0 && std::abs(100 * c - 88.78) <= 3.0,
                 "ASR_II " + pct(a) + " (target 89.67 +-7), clean Micro-F1 " + pct(c) + " (target 88.78 +-3)");
}

Verdict guarded(const std::function<Verdict()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {Status::Fail, std::string("error: ") + e.what()};
  }
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  int failures = 0;
  auto print = [&](int id, const char* title, const Verdict& v) {
    const char* tag = v.status == Status::Pass ? "PASS" : v.status == Status::Skip ? "SKIP" : "FAIL";
    failures += v.status == Status::Fail ? 1 : 0;
    std::printf("%s %2d %s: %s\n", tag, id, title, v.detail.c_str());
    std::fflush(stdout);
  };

  print(1, "gradient checks", guarded(numerics));
  print(2, "betweenness oracle", guarded(centrality_oracle));
  print(3, "metapath oracle", guarded(metapath_oracle));
  print(4, "budget ledger", guarded(budget_ledger));
  print(5, "ASR protocol", guarded(protocol));

  std::optional<SyntheticResults> synth;
  std::string synth_error;
  try {
    synth = run_synthetic();
  } catch (const std::exception& e) {
    synth_error = std::string("error: ") + e.what();
  }
  auto on_synth = [&](Verdict (*f)(const SyntheticResults&)) {
    return synth ? guarded([&] { return f(*synth); }) : Verdict{Status::Fail, synth_error};
  };
  print(6, "attack efficacy (synthetic)", on_synth(efficacy));
  print(7, "budget trend (synthetic)", on_synth(budget_trend));
  print(8, "feature-noise robustness (synthetic)", on_synth(robustness));
  print(9, "baseline gap (synthetic)", on_synth(baseline_gap));
  print(10, "Prune+LD defense (synthetic)", on_synth(defense));

  print(11, "clean HAN on ACM", guarded(acm_clean_han));
  print(12, "trigger nodes on datasets", guarded(trigger_nodes));
  print(13, "backdoor metapath on datasets", guarded(metapath_choice));
  print(14, "HGBA at 1% on ACM", guarded(acm_attack));

  std::printf("%d criteria failed, %.0fs\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
