#include "hgba/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "hgba/error.hpp"
#include "hgba/graph_io.hpp"
#include "json.hpp"

namespace hgba {
namespace {

using nlohmann::json;

// Runs `fn`, rethrowing any library failure as a PipelineError that names the stage.
template <class F>
auto stage(std::string_view name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError("stage " + std::string(name) + ": " + e.what());
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw PipelineError("cannot write " + file.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

void write_table(const std::filesystem::path& dir, const std::string& stem, const Table& t) {
  write_text(dir / (stem + ".csv"), t.to_csv());
  write_text(dir / (stem + ".json"), t.to_json());
}

// ---- config <-> json -------------------------------------------------------

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
    }
  }
}

template <class T>
void read(const json& j, std::string_view key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

json synth_json(const SynthConfig& s) {
  return {{"target_count", s.target_count}, {"aux_a_count", s.aux_a_count},
          {"aux_b_count", s.aux_b_count},   {"num_classes", s.num_classes},
          {"feature_dim", s.feature_dim},   {"aux_feature_dim", s.aux_feature_dim},
          {"separation", s.separation},     {"homophily", s.homophily},
          {"secondary_homophily", s.secondary_homophily},
          {"links_a", s.links_a},           {"links_b", s.links_b},
          {"skew_a", s.skew_a},             {"seed", s.seed}};
}

SynthConfig synth_from(const json& j) {
  check_keys(j, {"target_count", "aux_a_count", "aux_b_count", "num_classes", "feature_dim", "aux_feature_dim",
                 "separation", "homophily", "secondary_homophily", "links_a", "links_b", "skew_a", "seed"},
             "graph.synth");
  SynthConfig s;
  read(j, "target_count", s.target_count);
  read(j, "aux_a_count", s.aux_a_count);
  read(j, "aux_b_count", s.aux_b_count);
  read(j, "num_classes", s.num_classes);
  read(j, "feature_dim", s.feature_dim);
  read(j, "aux_feature_dim", s.aux_feature_dim);
  read(j, "separation", s.separation);
  read(j, "homophily", s.homophily);
  read(j, "secondary_homophily", s.secondary_homophily);
  read(j, "links_a", s.links_a);
  read(j, "links_b", s.links_b);
  read(j, "skew_a", s.skew_a);
  read(j, "seed", s.seed);
  return s;
}

std::string_view scope_name(NoiseScope s) { return s == NoiseScope::Node ? "node" : "node-and-neighbors"; }

NoiseScope parse_scope(std::string_view name) {
  if (name == "node") return NoiseScope::Node;
  if (name == "node-and-neighbors") return NoiseScope::NodeAndNeighbors;
  throw ConfigError("unknown noise scope '" + std::string(name) + "'");
}

std::vector<Metapath> resolve(const Schema& schema, std::span<const std::string> texts) {
  std::vector<Metapath> out;
  for (const auto& t : texts) out.push_back(Metapath::parse(schema, t));
  return out;
}

std::string column_for(Strategy s) {
  std::string name(to_string(s));
  std::replace(name.begin(), name.end(), '-', '_');
  return "asr_" + name;
}

// ---- per-seed execution ----------------------------------------------------

struct ArchOutcome {
  std::vector<std::string> columns;
  std::vector<double> values;
  std::optional<DefenseReport> defense;
  Table noise;
  Table density;
};

void append(ArchOutcome& o, const std::string& column, double v) {
  o.columns.push_back(column);
  o.values.push_back(v);
}

void append(ArchOutcome& o, const Table& t, std::string_view prefix = {}) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) append(o, std::string(prefix) + t.columns[i], t.rows.at(0)[i]);
}

ArchOutcome run_arch(const ExperimentConfig& cfg, const AttackSetup& s, Architecture arch) {
  const auto strategies = cfg.attack.strategies.empty() ? strategies_for(s.plan.variant) : cfg.attack.strategies;
  const auto model_cfg = victim_config(cfg, arch, s.candidates, s.clean.schema(), s.seed);
  const auto clean_model = stage("train-clean", [&] { return train(model_cfg, cfg.train, s.clean, s.split); });
  const auto model = stage("train-poisoned", [&] { return train(model_cfg, cfg.train, s.poisoned, s.split); });
  ArchOutcome o;
  stage("evaluate", [&] {
    const auto fc = evaluate(clean_model, s.clean, s.split.test);
    const auto fp = evaluate(model, s.poisoned, s.split.test);
    append(o, "clean_micro", fc.micro);
    append(o, "clean_macro", fc.macro);
    append(o, "poisoned_micro", fp.micro);
    append(o, "poisoned_macro", fp.macro);
    append(o, "micro_drop", fc.micro - fp.micro);
  });
  const Table asr = stage("eval-asr", [&] { return asr_table(model, s.poisoned, s.split.test, s.plan, strategies); });
  append(o, asr);

  if (cfg.defense.enabled) {
    stage("defend", [&] {
      const std::vector<Metapath> paths = cfg.defense.oracle ? std::vector<Metapath>{s.plan.p_b}
                                                             : defender_metapaths(s.poisoned);
      auto [defended, report] = cfg.defense.method == DefenseMethod::PruneLd
                                    ? prune_ld(s.poisoned, paths, s.split.train, cfg.defense.prune)
                                    : prune(s.poisoned, paths, cfg.defense.prune);
      const bool trainable = std::any_of(s.split.train.begin(), s.split.train.end(),
                                         [&](std::uint32_t v) { return defended.label(v) != kUnlabeled; });
      if (trainable) {
        const auto dmodel = train(model_cfg, cfg.train, defended, s.split);
        const auto fd = evaluate(dmodel, defended, s.split.test);
        append(o, "defended_micro", fd.micro);
        append(o, "defended_macro", fd.macro);
        append(o, asr_table(dmodel, defended, s.split.test, s.plan, strategies), "defended_");
      } else {
        // Every training label was discarded: the defended model cannot be fit.
        const double nan = std::numeric_limits<double>::quiet_NaN();
        append(o, "defended_micro", nan);
        append(o, "defended_macro", nan);
        for (auto st : strategies) append(o, "defended_" + column_for(st), nan);
      }
      append(o, "deleted_edges", static_cast<double>(report.deleted_edges.size()));
      append(o, "discarded_labels", static_cast<double>(report.discarded_labels.size()));
      o.defense = std::move(report);
    });
  }
  if (!cfg.eval.noise_levels.empty()) {
    o.noise = stage("sweep-noise", [&] {
      return sweep_noise(model, s.poisoned, s.split.test, s.plan, cfg.eval.noise_levels, strategies,
                         cfg.eval.noise_scope, s.seed);
    });
  }
  if (!cfg.eval.density_fractions.empty()) {
    o.density = stage("sweep-density", [&] {
      return sweep_density(model, s.poisoned, s.split.test, s.plan, cfg.eval.density_fractions, strategies, s.seed);
    });
  }
  return o;
}

}  // namespace

// ---- config ----------------------------------------------------------------

void validate(const ExperimentConfig& cfg) {
  if (cfg.graph.path.empty()) validate(cfg.graph.synth);
  const double sum = cfg.split.train + cfg.split.val + cfg.split.test;
  if (!(cfg.split.train >= 0 && cfg.split.val >= 0 && cfg.split.test >= 0) || std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be nonnegative and sum to 1");
  }
  if (cfg.model.architectures.empty()) throw ConfigError("model.architectures must not be empty");
  if (cfg.model.hidden == 0) throw ConfigError("model.hidden must be positive");
  if (cfg.model.dropout && !(*cfg.model.dropout >= 0.0 && *cfg.model.dropout < 1.0)) {
    throw ConfigError("model.dropout must lie in [0, 1)");
  }
  if (cfg.model.heads <= 0) throw ConfigError("model.heads must be positive");
  validate(cfg.train);
  validate(cfg.attack.budget);
  if (cfg.attack.variant != AttackVariant::Hgba) {
    validate(SbaConfig{cfg.attack.variant, cfg.attack.trigger_size, cfg.attack.edge_prob});
  }
  validate(cfg.defense.prune);
  if (cfg.eval.seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  for (double f : cfg.eval.budget_fractions) validate(BudgetConfig{f, std::nullopt});
  for (double l : cfg.eval.noise_levels) validate(NoiseConfig{l, cfg.eval.noise_scope, 0});
  for (double f : cfg.eval.density_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("eval.density_fractions must lie in (0, 1]");
  }
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["graph"] = {{"path", cfg.graph.path}, {"synth", synth_json(cfg.graph.synth)}, {"reseed", cfg.graph.reseed}};
  j["split"] = {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}};
  json archs = json::array();
  for (auto a : cfg.model.architectures) archs.push_back(std::string(to_string(a)));
  j["model"] = {{"architectures", archs},
                {"hidden", cfg.model.hidden},
                {"dropout", cfg.model.dropout ? json(*cfg.model.dropout) : json(nullptr)},
                {"heads", cfg.model.heads},
                {"metapaths", cfg.model.metapaths}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate}, {"weight_decay", cfg.train.weight_decay},
                {"max_epochs", cfg.train.max_epochs},       {"patience", cfg.train.patience},
                {"min_delta", cfg.train.min_delta}};
  json strategies = json::array();
  for (auto s : cfg.attack.strategies) strategies.push_back(std::string(to_string(s)));
  j["attack"] = {{"variant", std::string(to_string(cfg.attack.variant))},
                 {"budget", cfg.attack.budget.fraction},
                 {"budget_cap", cfg.attack.budget.cap ? json(*cfg.attack.budget.cap) : json(nullptr)},
                 {"candidates", cfg.attack.candidates},
                 {"proxy", std::string(to_string(cfg.attack.proxy))},
                 {"trigger_measure", std::string(to_string(cfg.attack.trigger.measure))},
                 {"trigger_minimize", cfg.attack.trigger.minimize},
                 {"target_class", cfg.attack.target_class ? json(*cfg.attack.target_class) : json("auto")},
                 {"strategies", strategies},
                 {"trigger_size", cfg.attack.trigger_size},
                 {"edge_prob", cfg.attack.edge_prob}};
  j["defense"] = {{"enabled", cfg.defense.enabled},
                  {"method", std::string(to_string(cfg.defense.method))},
                  {"threshold", cfg.defense.prune.threshold},
                  {"all_instances", cfg.defense.prune.all_instances},
                  {"oracle", cfg.defense.oracle}};
  j["eval"] = {{"seeds", cfg.eval.seeds},
               {"budget_fractions", cfg.eval.budget_fractions},
               {"noise_levels", cfg.eval.noise_levels},
               {"noise_scope", std::string(scope_name(cfg.eval.noise_scope))},
               {"density_fractions", cfg.eval.density_fractions}};
  j["output_dir"] = cfg.output_dir;
  return j.dump(2);
}

ExperimentConfig config_from_json(std::string_view text) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(text);
    check_keys(j, {"graph", "split", "model", "train", "attack", "defense", "eval", "output_dir"}, "config");
    if (auto g = j.find("graph"); g != j.end()) {
      check_keys(*g, {"path", "synth", "reseed"}, "graph");
      read(*g, "path", cfg.graph.path);
      read(*g, "reseed", cfg.graph.reseed);
      if (auto s = g->find("synth"); s != g->end()) cfg.graph.synth = synth_from(*s);
    }
    if (auto s = j.find("split"); s != j.end()) {
      check_keys(*s, {"train", "val", "test"}, "split");
      read(*s, "train", cfg.split.train);
      read(*s, "val", cfg.split.val);
      read(*s, "test", cfg.split.test);
    }
    if (auto m = j.find("model"); m != j.end()) {
      check_keys(*m, {"architectures", "hidden", "dropout", "heads", "metapaths"}, "model");
      if (auto a = m->find("architectures"); a != m->end()) {
        cfg.model.architectures.clear();
        for (const auto& name : *a) cfg.model.architectures.push_back(parse_architecture(name.get<std::string>()));
      }
      read(*m, "hidden", cfg.model.hidden);
      if (auto d = m->find("dropout"); d != m->end() && !d->is_null()) cfg.model.dropout = d->get<double>();
      read(*m, "heads", cfg.model.heads);
      read(*m, "metapaths", cfg.model.metapaths);
    }
    if (auto t = j.find("train"); t != j.end()) {
      check_keys(*t, {"learning_rate", "weight_decay", "max_epochs", "patience", "min_delta"}, "train");
      read(*t, "learning_rate", cfg.train.learning_rate);
      read(*t, "weight_decay", cfg.train.weight_decay);
      read(*t, "max_epochs", cfg.train.max_epochs);
      read(*t, "patience", cfg.train.patience);
      read(*t, "min_delta", cfg.train.min_delta);
    }
    if (auto a = j.find("attack"); a != j.end()) {
      check_keys(*a, {"variant", "budget", "budget_cap", "candidates", "proxy", "trigger_measure", "trigger_minimize",
                      "target_class", "strategies", "trigger_size", "edge_prob"},
                 "attack");
      if (auto v = a->find("variant"); v != a->end()) cfg.attack.variant = parse_attack_variant(v->get<std::string>());
      read(*a, "budget", cfg.attack.budget.fraction);
      if (auto c = a->find("budget_cap"); c != a->end() && !c->is_null()) cfg.attack.budget.cap = c->get<std::size_t>();
      read(*a, "candidates", cfg.attack.candidates);
      if (auto p = a->find("proxy"); p != a->end()) cfg.attack.proxy = parse_proxy(p->get<std::string>());
      if (auto m = a->find("trigger_measure"); m != a->end()) {
        cfg.attack.trigger.measure = parse_centrality(m->get<std::string>());
      }
      read(*a, "trigger_minimize", cfg.attack.trigger.minimize);
      if (auto y = a->find("target_class"); y != a->end()) {
        if (y->is_string()) {
          if (y->get<std::string>() != "auto") throw ConfigError("attack.target_class must be 'auto' or a class id");
          cfg.attack.target_class.reset();
        } else {
          cfg.attack.target_class = y->get<int>();
        }
      }
      if (auto s = a->find("strategies"); s != a->end()) {
        for (const auto& name : *s) cfg.attack.strategies.push_back(parse_strategy(name.get<std::string>()));
      }
      read(*a, "trigger_size", cfg.attack.trigger_size);
      read(*a, "edge_prob", cfg.attack.edge_prob);
    }
    if (auto d = j.find("defense"); d != j.end()) {
      check_keys(*d, {"enabled", "method", "threshold", "all_instances", "oracle"}, "defense");
      read(*d, "enabled", cfg.defense.enabled);
      if (auto m = d->find("method"); m != d->end()) cfg.defense.method = parse_defense_method(m->get<std::string>());
      read(*d, "threshold", cfg.defense.prune.threshold);
      read(*d, "all_instances", cfg.defense.prune.all_instances);
      read(*d, "oracle", cfg.defense.oracle);
    }
    if (auto e = j.find("eval"); e != j.end()) {
      check_keys(*e, {"seeds", "budget_fractions", "noise_levels", "noise_scope", "density_fractions"}, "eval");
      read(*e, "seeds", cfg.eval.seeds);
      read(*e, "budget_fractions", cfg.eval.budget_fractions);
      read(*e, "noise_levels", cfg.eval.noise_levels);
      if (auto s = e->find("noise_scope"); s != e->end()) cfg.eval.noise_scope = parse_scope(s->get<std::string>());
      read(*e, "density_fractions", cfg.eval.density_fractions);
    }
    read(j, "output_dir", cfg.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

// ---- helpers ---------------------------------------------------------------

std::vector<Metapath> default_candidates(const HeteroGraph& graph) {
  std::vector<Metapath> out;
  for (auto& p : symmetric_metapaths(graph.schema(), graph.target_type(), 4)) {
    const auto types = p.types();
    const auto steps = p.steps();
    const std::size_t l = steps.size();
    if (l % 2 != 0) continue;
    bool palindrome = true;
    for (std::size_t i = 0; i < l; ++i) {
      const auto& a = steps[i];
      const auto& b = steps[l - 1 - i];
      if (a.relation != b.relation || a.reverse == b.reverse) palindrome = false;
    }
    std::set<NodeTypeId> seen(types.begin(), types.begin() + static_cast<std::ptrdiff_t>(l / 2 + 1));
    if (palindrome && seen.size() == l / 2 + 1) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Strategy> strategies_for(AttackVariant v) {
  if (v == AttackVariant::Hgba) return {Strategy::SelfNode, Strategy::Indiscriminate};
  return {Strategy::BaselineTrigger};
}

std::string Table::to_csv() const {
  std::ostringstream os;
  bool first = true;
  auto cell = [&](const std::string& s) {
    if (!first) os << ',';
    os << s;
    first = false;
  };
  if (!label_column.empty()) cell(label_column);
  for (const auto& c : columns) cell(c);
  os << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    first = true;
    if (!label_column.empty()) cell(labels.at(r));
    for (double v : rows[r]) cell(format_number(v));
    os << '\n';
  }
  return os.str();
}

std::string Table::to_json() const {
  json out = json::array();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    json row = json::object();
    if (!label_column.empty()) row[label_column] = labels.at(r);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double v = rows[r].at(c);
      row[columns[c]] = std::isnan(v) ? json(nullptr) : json(v);
    }
    out.push_back(std::move(row));
  }
  return out.dump(2);
}

Table mean_table(std::span<const Table> tables) {
  if (tables.empty()) throw ValidationError("mean_table: no tables");
  Table out = tables[0];
  for (const auto& t : tables.subspan(1)) {
    if (t.columns != out.columns || t.rows.size() != out.rows.size() || t.labels != out.labels) {
      throw ShapeError("mean_table: tables differ in shape");
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      for (std::size_t c = 0; c < t.columns.size(); ++c) out.rows[r][c] += t.rows[r][c];
    }
  }
  const double n = static_cast<double>(tables.size());
  for (auto& row : out.rows) {
    for (double& v : row) v /= n;
  }
  return out;
}

HeteroGraph build_graph(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.graph.path.empty()) return load_graph(cfg.graph.path);
  SynthConfig s = cfg.graph.synth;
  if (cfg.graph.reseed) s.seed = seed;
  return synth_generate(s);
}

AttackSetup prepare_attack(const ExperimentConfig& cfg, std::uint64_t seed) {
  const HeteroGraph g = stage("load", [&] { return build_graph(cfg, seed); });
  return prepare_attack(cfg, g, seed);
}

AttackSetup prepare_attack(const ExperimentConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                           std::optional<double> budget_fraction) {
  AttackSetup s{seed, graph, {}, {}, {}, {}, 0, 0, graph, {}};
  BudgetConfig budget = cfg.attack.budget;
  if (budget_fraction) budget.fraction = *budget_fraction;
  s.split = stage("split", [&] {
    if (!cfg.graph.path.empty()) {
      if (auto stored = load_split(cfg.graph.path)) return *stored;
    }
    return make_split(graph, cfg.split, seed);
  });
  s.candidates = stage("select-metapath", [&] {
    return cfg.attack.candidates.empty() ? default_candidates(graph) : resolve(graph.schema(), cfg.attack.candidates);
  });
  if (s.candidates.empty()) throw PipelineError("stage select-metapath: no candidate metapaths");
  s.selection = stage("select-metapath",
                      [&] { return select_backdoor_metapath(graph, s.candidates, cfg.attack.proxy, s.split, seed, cfg.train); });
  s.v_t = stage("select-trigger", [&] { return select_trigger_node(graph, s.selection.chosen, cfg.attack.trigger).node; });
  s.y_t = stage("poison", [&] { return cfg.attack.target_class ? *cfg.attack.target_class : target_class(graph, s.split); });
  if (s.y_t < 0 || s.y_t >= graph.num_classes()) throw PipelineError("stage poison: target class out of range");
  s.budget = stage("poison", [&] { return attack_budget(graph, s.split, budget); });
  stage("poison", [&] {
    if (cfg.attack.variant == AttackVariant::Hgba) {
      const auto v_p = identify_poisoned_nodes(graph, s.v_t, s.selection.chosen, s.y_t, budget, s.split, seed);
      std::tie(s.poisoned, s.plan) = poison(graph, s.v_t, s.selection.chosen, v_p, s.y_t);
      s.plan.seed = seed;
    } else {
      const SbaConfig sba{cfg.attack.variant, cfg.attack.trigger_size, cfg.attack.edge_prob};
      std::tie(s.poisoned, s.plan) = sba_poison(graph, sba, s.v_t, s.selection.chosen, s.y_t, budget, s.split, seed);
    }
  });
  return s;
}

ModelConfig victim_config(const ExperimentConfig& cfg, Architecture arch, std::span<const Metapath> candidates,
                          const Schema& schema, std::uint64_t seed) {
  std::vector<Metapath> paths = cfg.model.metapaths.empty() ? std::vector<Metapath>(candidates.begin(), candidates.end())
                                                            : resolve(schema, cfg.model.metapaths);
  ModelConfig m = ModelConfig::defaults(arch, std::move(paths), seed);
  m.hidden = cfg.model.hidden;
  m.heads = cfg.model.heads;
  if (cfg.model.dropout) m.dropout = *cfg.model.dropout;
  return m;
}

Table asr_table(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> test,
                const PoisonPlan& plan, std::span<const Strategy> strategies, const std::optional<NoiseConfig>& noise) {
  Table t;
  std::vector<double> row;
  for (auto s : strategies) {
    t.columns.push_back(column_for(s));
    // An empty eligible set (e.g. after a defense isolates v_t) leaves the rate undefined.
    row.push_back(asr_eligible(graph, test, plan, s).empty()
                      ? std::numeric_limits<double>::quiet_NaN()
                      : asr_one_at_a_time(model, graph, test, plan, s, noise).asr);
  }
  t.rows.push_back(std::move(row));
  return t;
}

Table sweep_budget(const ExperimentConfig& cfg, std::span<const double> fractions) {
  std::vector<Table> per_seed;
  for (auto seed : cfg.eval.seeds) {
    const HeteroGraph g = stage("load", [&] { return build_graph(cfg, seed); });
    ExperimentConfig one = cfg;
    one.eval.seeds = {seed};
    per_seed.push_back(sweep_budget(one, g, fractions));
  }
  return mean_table(per_seed);
}

Table sweep_budget(const ExperimentConfig& cfg, const HeteroGraph& graph, std::span<const double> fractions) {
  const Architecture arch = cfg.model.architectures.at(0);
  std::vector<Table> per_seed;
  for (auto seed : cfg.eval.seeds) {
    Table t;
    for (double f : fractions) {
      const AttackSetup s = prepare_attack(cfg, graph, seed, f);
      const auto strategies = cfg.attack.strategies.empty() ? strategies_for(s.plan.variant) : cfg.attack.strategies;
      const auto model_cfg = victim_config(cfg, arch, s.candidates, graph.schema(), seed);
      const auto model = stage("train-poisoned", [&] { return train(model_cfg, cfg.train, s.poisoned, s.split); });
      const auto fp = stage("evaluate", [&] { return evaluate(model, s.poisoned, s.split.test); });
      const Table asr = stage("eval-asr", [&] { return asr_table(model, s.poisoned, s.split.test, s.plan, strategies); });
      t.columns = {"budget", "poisoned_nodes", "ledger_total", "poisoned_micro", "poisoned_macro"};
      t.columns.insert(t.columns.end(), asr.columns.begin(), asr.columns.end());
      std::vector<double> row{f, static_cast<double>(s.plan.v_p.size()), static_cast<double>(s.plan.ledger.total()),
                              fp.micro, fp.macro};
      row.insert(row.end(), asr.rows[0].begin(), asr.rows[0].end());
      t.rows.push_back(std::move(row));
    }
    per_seed.push_back(std::move(t));
  }
  return mean_table(per_seed);
}

Table sweep_noise(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> test,
                  const PoisonPlan& plan, std::span<const double> levels, std::span<const Strategy> strategies,
                  NoiseScope scope, std::uint64_t seed) {
  Table t;
  t.columns = {"level"};
  for (auto s : strategies) t.columns.push_back(column_for(s));
  for (double level : levels) {
    std::vector<double> row{level};
    const std::optional<NoiseConfig> noise =
        level == 0.0 ? std::nullopt : std::optional<NoiseConfig>(NoiseConfig{level, scope, seed});
    for (auto s : strategies) row.push_back(asr_one_at_a_time(model, graph, test, plan, s, noise).asr);
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table sweep_density(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> test,
                    const PoisonPlan& plan, std::span<const double> fractions, std::span<const Strategy> strategies,
                    std::uint64_t seed) {
  Table t;
  t.columns = {"fraction"};
  for (auto s : strategies) t.columns.push_back(column_for(s));
  for (double f : fractions) {
    std::vector<double> row{f};
    for (auto s : strategies) row.push_back(asr_simultaneous(model, graph, test, plan, s, f, seed).asr);
    t.rows.push_back(std::move(row));
  }
  return t;
}

RunSummary run(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path out = cfg.output_dir;
  stage("write", [&] {
    std::filesystem::create_directories(out);
    write_text(out / "INCOMPLETE", "run started\n");
  });

  RunSummary summary;
  summary.per_seed.label_column = "arch";
  summary.averaged.label_column = "arch";
  std::vector<std::vector<Table>> noise_by_arch(cfg.model.architectures.size());
  std::vector<std::vector<Table>> density_by_arch(cfg.model.architectures.size());
  for (auto seed : cfg.eval.seeds) {
    const AttackSetup s = prepare_attack(cfg, seed);
    const auto dir = out / ("seed_" + std::to_string(seed));
    stage("write", [&] {
      std::filesystem::create_directories(dir);
      write_text(dir / "plan.json", plan_to_json(s.plan, s.clean.schema()));
    });
    Table seed_table;
    seed_table.label_column = "arch";
    for (std::size_t a = 0; a < cfg.model.architectures.size(); ++a) {
      const Architecture arch = cfg.model.architectures[a];
      ArchOutcome o = run_arch(cfg, s, arch);
      std::vector<std::string> columns{"seed", "budget", "poisoned_nodes", "ledger_total", "v_t", "y_t"};
      std::vector<double> row{static_cast<double>(seed), static_cast<double>(s.budget),
                              static_cast<double>(s.plan.v_p.size()), static_cast<double>(s.plan.ledger.total()),
                              static_cast<double>(s.v_t.index), static_cast<double>(s.y_t)};
      columns.insert(columns.end(), o.columns.begin(), o.columns.end());
      row.insert(row.end(), o.values.begin(), o.values.end());
      seed_table.columns = columns;
      seed_table.labels.emplace_back(to_string(arch));
      seed_table.rows.push_back(row);
      summary.per_seed.columns = columns;
      summary.per_seed.labels.emplace_back(to_string(arch));
      summary.per_seed.rows.push_back(std::move(row));
      const std::string tag(to_string(arch));
      stage("write", [&] {
        if (o.defense) write_text(dir / ("defense_" + tag + ".json"), report_to_json(*o.defense, s.poisoned.schema()));
        if (!o.noise.columns.empty()) write_table(dir, "noise_" + tag, o.noise);
        if (!o.density.columns.empty()) write_table(dir, "density_" + tag, o.density);
      });
      if (!o.noise.columns.empty()) noise_by_arch[a].push_back(std::move(o.noise));
      if (!o.density.columns.empty()) density_by_arch[a].push_back(std::move(o.density));
    }
    stage("write", [&] { write_table(dir, "metrics", seed_table); });
  }

  summary.averaged.columns = summary.per_seed.columns;
  const std::size_t archs = cfg.model.architectures.size();
  for (std::size_t a = 0; a < archs; ++a) {
    std::vector<double> mean(summary.per_seed.columns.size(), 0.0);
    std::size_t n = 0;
    for (std::size_t r = a; r < summary.per_seed.rows.size(); r += archs, ++n) {
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += summary.per_seed.rows[r][c];
    }
    for (double& v : mean) v /= static_cast<double>(n);
    summary.averaged.labels.emplace_back(to_string(cfg.model.architectures[a]));
    summary.averaged.rows.push_back(std::move(mean));
  }
  if (!cfg.eval.budget_fractions.empty()) summary.budget = sweep_budget(cfg, cfg.eval.budget_fractions);

  stage("write", [&] {
    write_table(out, "per_seed", summary.per_seed);
    write_table(out, "summary", summary.averaged);
    if (!summary.budget.columns.empty()) write_table(out, "budget_sweep", summary.budget);
    for (std::size_t a = 0; a < archs; ++a) {
      const std::string tag(to_string(cfg.model.architectures[a]));
      if (!noise_by_arch[a].empty()) write_table(out, "noise_" + tag, mean_table(noise_by_arch[a]));
      if (!density_by_arch[a].empty()) write_table(out, "density_" + tag, mean_table(density_by_arch[a]));
    }
  });
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  stage("write", [&] {
    json manifest;
    manifest["config"] = json::parse(config_to_json(cfg));
    manifest["version"] = std::string(kVersion);
    manifest["wall_seconds"] = summary.wall_seconds;
    write_text(out / "manifest.json", manifest.dump(2));
    std::filesystem::remove(out / "INCOMPLETE");
  });
  return summary;
}

}  // namespace hgba
