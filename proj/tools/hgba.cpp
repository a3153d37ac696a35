#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hgba/attack.hpp"
#include "hgba/centrality.hpp"
#include "hgba/defense.hpp"
#include "hgba/error.hpp"
#include "hgba/eval.hpp"
#include "hgba/graph_io.hpp"
#include "hgba/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hgba;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string graph;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (!g.out.empty()) cfg.output_dir = g.out;
  return cfg;
}

HeteroGraph graph_of(const Globals& g, const ExperimentConfig& cfg) {
  return g.graph.empty() ? build_graph(cfg, g.seed) : load_graph(g.graph);
}

DataSplit split_of(const Globals& g, const ExperimentConfig& cfg, const HeteroGraph& graph) {
  if (!g.graph.empty()) {
    if (auto s = load_split(g.graph)) return *s;
  }
  return make_split(graph, cfg.split, g.seed);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  fs::create_directories(g.out);
  std::ofstream out(fs::path(g.out) / name);
  if (!out) throw PipelineError("cannot write " + (fs::path(g.out) / name).string());
  out << text;
}

void emit_table(const Globals& g, const std::string& stem, const Table& t) {
  emit(g, stem + ".csv", t.to_csv());
  if (!g.out.empty()) emit(g, stem + ".json", t.to_json());
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<Strategy> parse_strategies(const std::string& text, const PoisonPlan& plan) {
  if (text.empty()) return strategies_for(plan.variant);
  std::vector<Strategy> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_strategy(item));
  return out;
}

struct ModelInputs {
  std::string model_dir;
  std::string plan_file;
  std::string strategies;
};

void add_model_inputs(CLI::App* sub, ModelInputs& m) {
  sub->add_option("--model", m.model_dir, "Directory written by `train`")->required();
  sub->add_option("--plan", m.plan_file, "Plan JSON written by `poison`")->required();
  sub->add_option("--strategies", m.strategies, "Comma-separated: self-node, indiscriminate, baseline-trigger");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backdoor attacks on heterogeneous graph neural networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Seed for graph generation, splits and sampling");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--graph", g.graph, "HG-TSV graph directory (default: synthetic graph from the config)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic graph and split as HG-TSV");

  auto* trig = app.add_subcommand("select-trigger", "Score target nodes and pick the trigger node (CSV: node_index,score)");
  std::string trig_path, trig_measure = "betweenness";
  bool trig_max = false;
  trig->add_option("--metapath", trig_path, "Projection metapath")->required();
  trig->add_option("--measure", trig_measure, "degree | betweenness | closeness | eigenvector | pagerank");
  trig->add_flag("--max", trig_max, "Pick the largest score instead of the smallest");

  auto* selmp = app.add_subcommand("select-metapath", "Pick the backdoor metapath among candidates");
  std::string sel_candidates, sel_proxy = "homo-gnn";
  selmp->add_option("--candidates", sel_candidates, "Comma-separated metapaths (default: palindromic candidates)");
  selmp->add_option("--proxy", sel_proxy, "homo-gnn | hgnn");

  auto* pois = app.add_subcommand("poison", "Poison a graph; writes the poisoned graph and plan.json to --out");
  double pois_budget = 0.01;
  std::string pois_variant = "hgba", pois_target = "auto", pois_metapath;
  pois->add_option("--budget", pois_budget, "Budget fraction of training nodes and edges");
  pois->add_option("--variant", pois_variant, "hgba | sba-sample | sba-gen");
  pois->add_option("--target-class", pois_target, "auto | class id");
  pois->add_option("--metapath", pois_metapath, "Backdoor metapath (default: selected by proxy)");

  auto* trn = app.add_subcommand("train", "Train a model; writes model files and metrics to --out");
  std::string trn_arch = "gcn", trn_metapaths;
  trn->add_option("--arch", trn_arch, "gcn | rgcn | han");
  trn->add_option("--metapaths", trn_metapaths, "Comma-separated metapaths (default: palindromic candidates)");

  auto* dfd = app.add_subcommand("defend", "Prune (or Prune+LD) a graph; writes graph and report.json to --out");
  std::string dfd_method = "prune-ld", dfd_oracle;
  double dfd_threshold = 0.1;
  bool dfd_all = false;
  dfd->add_option("--method", dfd_method, "prune | prune-ld");
  dfd->add_option("--threshold", dfd_threshold, "Cosine similarity threshold in [-1, 1]");
  dfd->add_option("--oracle-metapath", dfd_oracle, "Prune along this metapath only");
  dfd->add_flag("--all-instances", dfd_all, "Delete every edge of every instance between marked pairs");

  auto* easr = app.add_subcommand("eval-asr", "ASR per strategy (CSV: asr_<strategy>...)");
  ModelInputs easr_in;
  std::string easr_protocol = "one-at-a-time";
  double easr_fraction = 0.01, easr_noise = 0.0;
  add_model_inputs(easr, easr_in);
  easr->add_option("--protocol", easr_protocol, "one-at-a-time | simultaneous");
  easr->add_option("--fraction", easr_fraction, "Batch fraction for the simultaneous protocol");
  easr->add_option("--noise", easr_noise, "Feature perturbation level in [0, 1]");

  auto* sbud = app.add_subcommand("sweep-budget", "CSV: budget,poisoned_nodes,ledger_total,poisoned_micro,poisoned_macro,asr_<strategy>...");
  std::string sbud_list = "0.001,0.0025,0.005,0.0075,0.01";
  sbud->add_option("--budgets", sbud_list, "Comma-separated budget fractions");

  auto* snoise = app.add_subcommand("sweep-noise", "CSV: level,asr_<strategy>...");
  ModelInputs snoise_in;
  std::string snoise_list = "0,0.2,0.4,0.6,0.8,1";
  add_model_inputs(snoise, snoise_in);
  snoise->add_option("--levels", snoise_list, "Comma-separated noise levels");

  auto* sdens = app.add_subcommand("sweep-density", "CSV: fraction,asr_<strategy>...");
  ModelInputs sdens_in;
  std::string sdens_list = "0.001,0.01,0.1,0.5,1";
  add_model_inputs(sdens, sdens_in);
  sdens->add_option("--fractions", sdens_list, "Comma-separated simultaneous fractions");

  auto* runc = app.add_subcommand("run", "Full pipeline over every configured seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig cfg = load(g);
    if (*synth) {
      if (g.out.empty()) throw ConfigError("synth needs --out");
      const HeteroGraph graph = build_graph(cfg, g.seed);
      save_graph(graph, g.out, make_split(graph, cfg.split, g.seed));
    } else if (*trig) {
      const HeteroGraph graph = graph_of(g, cfg);
      const auto sel = select_trigger_node(graph, Metapath::parse(graph.schema(), trig_path),
                                           TriggerCriterion{parse_centrality(trig_measure), !trig_max});
      std::cerr << "trigger node " << sel.node.index << '\n';
      std::ostringstream csv;
      csv << "node_index,score\n";
      for (std::size_t i = 0; i < sel.scores.size(); ++i) csv << i << ',' << sel.scores[i] << '\n';
      emit(g, "trigger_scores.csv", csv.str());
    } else if (*selmp) {
      const HeteroGraph graph = graph_of(g, cfg);
      const DataSplit split = split_of(g, cfg, graph);
      const auto candidates =
          sel_candidates.empty() ? default_candidates(graph) : parse_metapaths(graph.schema(), sel_candidates);
      const auto sel = select_backdoor_metapath(graph, candidates, parse_proxy(sel_proxy), split, g.seed, cfg.train);
      std::cerr << "backdoor metapath " << sel.chosen.text() << '\n';
      std::ostringstream csv;
      csv << "metapath,score\n";
      for (std::size_t i = 0; i < candidates.size(); ++i) csv << candidates[i].text() << ',' << sel.scores[i] << '\n';
      emit(g, "metapath_scores.csv", csv.str());
    } else if (*pois) {
      if (g.out.empty()) throw ConfigError("poison needs --out");
      ExperimentConfig c = cfg;
      c.attack.variant = parse_attack_variant(pois_variant);
      c.attack.budget.fraction = pois_budget;
      if (pois_target == "auto") {
        c.attack.target_class.reset();
      } else {
        try {
          c.attack.target_class = std::stoi(pois_target);
        } catch (const std::exception&) {
          throw ConfigError("--target-class must be 'auto' or a class id");
        }
      }
      if (!pois_metapath.empty()) c.attack.candidates = {pois_metapath};
      if (!g.graph.empty()) c.graph.path = g.graph;
      validate(c);
      const HeteroGraph graph = graph_of(g, c);
      const AttackSetup s = prepare_attack(c, graph, g.seed);
      save_graph(s.poisoned, g.out, s.split);
      emit(g, "plan.json", plan_to_json(s.plan, s.poisoned.schema()));
    } else if (*trn) {
      if (g.out.empty()) throw ConfigError("train needs --out");
      const HeteroGraph graph = graph_of(g, cfg);
      const DataSplit split = split_of(g, cfg, graph);
      const auto paths =
          trn_metapaths.empty() ? default_candidates(graph) : parse_metapaths(graph.schema(), trn_metapaths);
      ExperimentConfig c = cfg;
      c.model.metapaths.clear();
      const auto model = train(victim_config(c, parse_architecture(trn_arch), paths, graph.schema(), g.seed), cfg.train,
                               graph, split);
      save_model(model, g.out);
      const auto f = evaluate(model, graph, split.test);
      Table t;
      t.columns = {"test_micro", "test_macro", "best_epoch", "epochs_run"};
      t.rows.push_back({f.micro, f.macro, static_cast<double>(model.best_epoch), static_cast<double>(model.epochs_run)});
      emit_table(g, "metrics", t);
    } else if (*dfd) {
      if (g.out.empty()) throw ConfigError("defend needs --out");
      const HeteroGraph graph = graph_of(g, cfg);
      const DataSplit split = split_of(g, cfg, graph);
      const PruneOptions opts{dfd_threshold, dfd_all};
      validate(opts);
      const auto paths = dfd_oracle.empty() ? defender_metapaths(graph)
                                            : std::vector<Metapath>{Metapath::parse(graph.schema(), dfd_oracle)};
      auto [defended, report] = parse_defense_method(dfd_method) == DefenseMethod::PruneLd
                                    ? prune_ld(graph, paths, split.train, opts)
                                    : prune(graph, paths, opts);
      save_graph(defended, g.out, split);
      emit(g, "report.json", report_to_json(report, graph.schema()));
    } else if (*easr || *snoise || *sdens) {
      const ModelInputs& in = *easr ? easr_in : (*snoise ? snoise_in : sdens_in);
      const HeteroGraph graph = graph_of(g, cfg);
      const DataSplit split = split_of(g, cfg, graph);
      const auto model = load_model(in.model_dir, graph.schema());
      const auto plan = plan_from_json(read_file(in.plan_file), graph.schema());
      const auto strategies = parse_strategies(in.strategies, plan);
      if (*easr) {
        Table t;
        if (easr_protocol == "one-at-a-time") {
          std::optional<NoiseConfig> noise;
          if (easr_noise > 0.0) noise = NoiseConfig{easr_noise, cfg.eval.noise_scope, g.seed};
          t = asr_table(model, graph, split.test, plan, strategies, noise);
        } else if (easr_protocol == "simultaneous") {
          t = sweep_density(model, graph, split.test, plan, std::vector<double>{easr_fraction}, strategies, g.seed);
        } else {
          throw ConfigError("unknown protocol '" + easr_protocol + "'");
        }
        emit_table(g, "asr", t);
      } else if (*snoise) {
        emit_table(g, "noise", sweep_noise(model, graph, split.test, plan, parse_list(snoise_list), strategies,
                                           cfg.eval.noise_scope, g.seed));
      } else {
        emit_table(g, "density", sweep_density(model, graph, split.test, plan, parse_list(sdens_list), strategies, g.seed));
      }
    } else if (*sbud) {
      ExperimentConfig c = cfg;
      if (!g.graph.empty()) c.graph.path = g.graph;
      emit_table(g, "budget_sweep", sweep_budget(c, parse_list(sbud_list)));
    } else if (*runc) {
      const auto summary = run(cfg);
      std::cout << summary.averaged.to_csv();
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
