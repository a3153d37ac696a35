#include "hgba/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include "hgba/error.hpp"
#include "hgba/graph_io.hpp"
#include "json.hpp"

namespace hgba {
namespace {

std::string message_suffix(RelationId r, bool reverse) {
  return std::to_string(r) + (reverse ? ".rev" : ".fwd");
}

DenseMatrix uniform_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(rows, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

void check_schema(const TrainedModel& model, const HeteroGraph& graph) {
  const auto& types = graph.schema().node_types;
  if (types.size() != model.input_dims.size() || graph.num_classes() != model.num_classes) {
    throw ValidationError("model/graph schema mismatch");
  }
  for (std::size_t t = 0; t < types.size(); ++t) {
    if (types[t].feature_dim != model.input_dims[t]) {
      throw ValidationError("model/graph schema mismatch: feature width of '" + types[t].name + "'");
    }
  }
  for (const auto& p : model.config.metapaths) {
    for (NodeTypeId t : p.types()) {
      if (t >= types.size()) throw ValidationError("model/graph schema mismatch: metapath type");
    }
    for (const auto& s : p.steps()) {
      if (s.relation >= graph.schema().relations.size()) {
        throw ValidationError("model/graph schema mismatch: metapath relation");
      }
    }
  }
}

// Inverted dropout: the kept entries are scaled by 1 / (1 - rate).
Var dropout(Var x, double rate, std::mt19937_64* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  DenseMatrix mask(x.rows(), x.cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = u(*rng) < rate ? 0.0 : keep;
  return ad::mul_const(x, mask);
}

class ParamIndex {
 public:
  ParamIndex(const TrainedModel& model, std::span<const Var> vars) : vars_(vars) {
    if (vars.size() != model.params.size()) throw Error("forward: parameter count mismatch");
    for (std::size_t i = 0; i < model.params.size(); ++i) index_[model.params[i].name] = i;
  }
  Var operator[](const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("forward: missing parameter '" + name + "'");
    return vars_[it->second];
  }

 private:
  std::span<const Var> vars_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::Gcn: return "gcn";
    case Architecture::Rgcn: return "rgcn";
    case Architecture::Han: return "han";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view name) {
  for (auto a : {Architecture::Gcn, Architecture::Rgcn, Architecture::Han}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

ModelConfig ModelConfig::defaults(Architecture arch, std::vector<Metapath> metapaths, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.arch = arch;
  cfg.dropout = arch == Architecture::Han ? 0.6 : 0.0;
  cfg.metapaths = std::move(metapaths);
  if (arch == Architecture::Gcn && cfg.metapaths.size() > 1) cfg.metapaths.resize(1);
  if (arch == Architecture::Rgcn) cfg.metapaths.clear();
  cfg.seed = seed;
  return cfg;
}

void validate(const ModelConfig& cfg) {
  if (cfg.hidden == 0) throw ConfigError("model: hidden dimension must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("model: dropout must lie in [0, 1)");
  if (cfg.heads <= 0) throw ConfigError("model: heads must be positive");
  if (cfg.arch == Architecture::Gcn && cfg.metapaths.size() != 1) {
    throw ConfigError("model: gcn needs exactly one metapath");
  }
  if (cfg.arch == Architecture::Han && cfg.metapaths.empty()) throw ConfigError("model: han needs metapaths");
  for (const auto& p : cfg.metapaths) {
    if (!p.symmetric_endpoints()) throw ConfigError("model: metapath '" + p.name() + "' is asymmetric");
  }
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || cfg.weight_decay < 0.0 || cfg.max_epochs == 0 || cfg.min_delta < 0.0) {
    throw ConfigError("train: learning rate and epochs must be positive; decay and min-delta non-negative");
  }
  if (cfg.patience > cfg.max_epochs) throw ConfigError("train: patience exceeds max epochs");
}

const DenseMatrix& TrainedModel::param(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p.value;
  }
  throw Error("model has no parameter '" + std::string(name) + "'");
}

TrainedModel init_model(const ModelConfig& cfg, const HeteroGraph& graph) {
  validate(cfg);
  TrainedModel model;
  model.config = cfg;
  model.num_classes = graph.num_classes();
  for (const auto& t : graph.schema().node_types) model.input_dims.push_back(t.feature_dim);
  std::mt19937_64 rng(cfg.seed);
  const std::size_t h = cfg.hidden;
  const auto classes = static_cast<std::size_t>(graph.num_classes());
  const NodeTypeId target = graph.target_type();
  const std::size_t f = graph.schema().node_types[target].feature_dim;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols, bool bias) {
    model.params.push_back({std::move(name), bias ? DenseMatrix(rows, cols) : uniform_init(rows, cols, rng)});
  };
  switch (cfg.arch) {
    case Architecture::Gcn:
      add("W1", f, h, false);
      add("b1", 1, h, true);
      add("W2", h, h, false);
      add("b2", 1, h, true);
      break;
    case Architecture::Rgcn: {
      const auto& schema = graph.schema();
      for (std::size_t t = 0; t < schema.node_types.size(); ++t) {
        add("self1." + std::to_string(t), schema.node_types[t].feature_dim, h, false);
        add("bias1." + std::to_string(t), 1, h, true);
      }
      for (std::size_t r = 0; r < schema.relations.size(); ++r) {
        const auto& rel = schema.relations[r];
        add("msg1." + message_suffix(static_cast<RelationId>(r), false), schema.node_types[rel.src].feature_dim, h,
            false);
        add("msg1." + message_suffix(static_cast<RelationId>(r), true), schema.node_types[rel.dst].feature_dim, h,
            false);
      }
      add("self2", h, h, false);
      add("bias2", 1, h, true);
      for (std::size_t r = 0; r < schema.relations.size(); ++r) {
        const auto& rel = schema.relations[r];
        if (rel.dst == target) add("msg2." + message_suffix(static_cast<RelationId>(r), false), h, h, false);
        if (rel.src == target) add("msg2." + message_suffix(static_cast<RelationId>(r), true), h, h, false);
      }
      break;
    }
    case Architecture::Han:
      for (std::size_t m = 0; m < cfg.metapaths.size(); ++m) {
        add("W." + std::to_string(m), f, h, false);
        add("b." + std::to_string(m), 1, h, true);
      }
      add("sem.W", h, h, false);
      add("sem.b", 1, h, true);
      add("sem.q", h, 1, false);
      break;
  }
  add("Wc", h, classes, false);
  add("bc", 1, classes, true);
  return model;
}

GraphInputs prepare_inputs(const ModelConfig& cfg, const HeteroGraph& graph) {
  GraphInputs in;
  if (cfg.arch == Architecture::Rgcn) {
    const auto& schema = graph.schema();
    for (std::size_t r = 0; r < schema.relations.size(); ++r) {
      const auto& rel = schema.relations[r];
      const auto rid = static_cast<RelationId>(r);
      // Messages along the declared direction arrive at dst; reverse messages at src.
      in.messages.push_back({rid, false, rel.src, rel.dst, row_normalize(graph.adjacency(rid, true))});
      in.messages.push_back({rid, true, rel.dst, rel.src, row_normalize(graph.adjacency(rid, false))});
    }
  } else {
    for (const auto& p : cfg.metapaths) in.propagation.push_back(sym_normalize(compose_adjacency(graph, p), true));
  }
  return in;
}

ForwardResult forward_on_tape(Tape& tape, const TrainedModel& model, std::span<const Var> params,
                              const HeteroGraph& graph, const GraphInputs& inputs, std::mt19937_64* dropout_rng) {
  check_schema(model, graph);
  const ParamIndex P(model, params);
  const auto& cfg = model.config;
  const NodeTypeId target = graph.target_type();
  ForwardResult out;
  Var h;
  switch (cfg.arch) {
    case Architecture::Gcn: {
      const SparseMatrix& a = inputs.propagation.at(0);
      Var x = dropout(tape.constant(graph.features(target)), cfg.dropout, dropout_rng);
      Var h1 = ad::relu(ad::add_bias(ad::spmm(a, ad::matmul(x, P["W1"])), P["b1"]));
      h1 = dropout(h1, cfg.dropout, dropout_rng);
      h = ad::relu(ad::add_bias(ad::spmm(a, ad::matmul(h1, P["W2"])), P["b2"]));
      break;
    }
    case Architecture::Rgcn: {
      const auto& types = graph.schema().node_types;
      std::vector<Var> x;
      for (std::size_t t = 0; t < types.size(); ++t) {
        x.push_back(dropout(tape.constant(graph.features(static_cast<NodeTypeId>(t))), cfg.dropout, dropout_rng));
      }
      std::vector<Var> h1;
      for (std::size_t t = 0; t < types.size(); ++t) {
        const std::string ts = std::to_string(t);
        Var acc = ad::add_bias(ad::matmul(x[t], P["self1." + ts]), P["bias1." + ts]);
        for (const auto& m : inputs.messages) {
          if (m.to != t) continue;
          acc = ad::add(acc, ad::spmm(m.mean, ad::matmul(x[m.from], P["msg1." + message_suffix(m.relation, m.reverse)])));
        }
        h1.push_back(dropout(ad::relu(acc), cfg.dropout, dropout_rng));
      }
      Var acc = ad::add_bias(ad::matmul(h1[target], P["self2"]), P["bias2"]);
      for (const auto& m : inputs.messages) {
        if (m.to != target) continue;
        acc = ad::add(acc, ad::spmm(m.mean, ad::matmul(h1[m.from], P["msg2." + message_suffix(m.relation, m.reverse)])));
      }
      h = ad::relu(acc);
      break;
    }
    case Architecture::Han: {
      Var x = dropout(tape.constant(graph.features(target)), cfg.dropout, dropout_rng);
      std::vector<Var> z;
      std::vector<Var> scores;
      for (std::size_t m = 0; m < cfg.metapaths.size(); ++m) {
        const std::string ms = std::to_string(m);
        Var zm = ad::elu(ad::add_bias(ad::spmm(inputs.propagation.at(m), ad::matmul(x, P["W." + ms])), P["b." + ms]));
        Var proj = ad::tanh(ad::add_bias(ad::matmul(zm, P["sem.W"]), P["sem.b"]));
        scores.push_back(ad::matmul(ad::mean_rows(proj), P["sem.q"]));
        z.push_back(zm);
      }
      Var beta = ad::softmax_rows(ad::concat_cols(scores));
      h = ad::scale(z[0], ad::element(beta, 0, 0));
      for (std::size_t m = 1; m < z.size(); ++m) h = ad::add(h, ad::scale(z[m], ad::element(beta, 0, m)));
      out.attention = beta;
      break;
    }
  }
  h = dropout(h, cfg.dropout, dropout_rng);
  out.logits = ad::add_bias(ad::matmul(h, P["Wc"]), P["bc"]);
  return out;
}

namespace {

std::vector<Var> as_constants(Tape& tape, const TrainedModel& model) {
  std::vector<Var> vars;
  vars.reserve(model.params.size());
  for (const auto& p : model.params) vars.push_back(tape.constant(p.value));
  return vars;
}

}  // namespace

DenseMatrix forward(const TrainedModel& model, const HeteroGraph& graph) {
  check_schema(model, graph);
  const GraphInputs inputs = prepare_inputs(model.config, graph);
  Tape tape;
  const auto vars = as_constants(tape, model);
  return forward_on_tape(tape, model, vars, graph, inputs, nullptr).logits.value();
}

std::vector<int> predict(const TrainedModel& model, const HeteroGraph& graph) {
  const DenseMatrix logits = forward(model, graph);
  std::vector<int> pred(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    pred[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return pred;
}

std::vector<double> semantic_attention(const TrainedModel& model, const HeteroGraph& graph) {
  if (model.config.arch != Architecture::Han) throw ConfigError("semantic attention requires a han model");
  const GraphInputs inputs = prepare_inputs(model.config, graph);
  Tape tape;
  const auto vars = as_constants(tape, model);
  const auto beta = forward_on_tape(tape, model, vars, graph, inputs, nullptr).attention.value();
  return {beta.values().begin(), beta.values().end()};
}

Var training_loss(Tape& tape, const TrainedModel& model, std::span<const Var> params, const HeteroGraph& graph,
                  std::span<const std::uint32_t> nodes) {
  const GraphInputs inputs = prepare_inputs(model.config, graph);
  Var logits = forward_on_tape(tape, model, params, graph, inputs, nullptr).logits;
  return ad::masked_cross_entropy(logits, graph.labels(), nodes);
}

std::vector<std::pair<std::string, double>> get_metapath_attention(const TrainedModel& model) {
  if (model.config.arch != Architecture::Han) throw ConfigError("metapath attention requires a han model");
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t m = 0; m < model.config.metapaths.size(); ++m) {
    out.emplace_back(model.config.metapaths[m].name(), model.attention.at(m));
  }
  return out;
}

F1Scores f1_scores(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
  if (predicted.size() != truth.size()) throw ShapeError("f1_scores: size mismatch");
  if (truth.empty()) throw ValidationError("f1_scores: empty node set");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<double> tp(k, 0.0), fp(k, 0.0), fn(k, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto y = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (y >= k || p >= k) throw ValidationError("f1_scores: class id out of range");
    if (y == p) {
      ++correct;
      tp[y] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[y] += 1.0;
    }
  }
  double macro = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    macro += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return {static_cast<double>(correct) / static_cast<double>(truth.size()), macro / static_cast<double>(k)};
}

F1Scores evaluate_predictions(std::span<const int> predicted, const HeteroGraph& graph,
                              std::span<const std::uint32_t> nodes) {
  if (nodes.empty()) throw ValidationError("evaluate: empty node set");
  std::vector<int> p, y;
  for (std::uint32_t v : nodes) {
    const int label = graph.label(v);
    if (label == kUnlabeled) throw ValidationError("evaluate: node " + std::to_string(v) + " has no label");
    p.push_back(predicted[v]);
    y.push_back(label);
  }
  return f1_scores(p, y, graph.num_classes());
}

F1Scores evaluate(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> nodes) {
  if (nodes.empty()) throw ValidationError("evaluate: empty node set");
  return evaluate_predictions(predict(model, graph), graph, nodes);
}

TrainedModel train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const HeteroGraph& graph,
                   const DataSplit& split) {
  validate(model_cfg);
  validate(train_cfg);
  validate_split(graph, split);
  auto observed = [&](std::span<const std::uint32_t> nodes) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t v : nodes) {
      if (graph.label(v) != kUnlabeled) out.push_back(v);
    }
    return out;
  };
  const auto train_nodes = observed(split.train);
  const auto val_nodes = observed(split.val);
  if (train_nodes.empty()) throw ValidationError("train: no labeled training nodes");

  TrainedModel model = init_model(model_cfg, graph);
  const GraphInputs inputs = prepare_inputs(model_cfg, graph);
  const auto& monitor = val_nodes.empty() ? train_nodes : val_nodes;
  std::mt19937_64 dropout_rng(model_cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<DenseMatrix> m1, m2;
  for (const auto& p : model.params) {
    m1.emplace_back(p.value.rows(), p.value.cols());
    m2.emplace_back(p.value.rows(), p.value.cols());
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  auto best = model.params;
  double best_loss = std::numeric_limits<double>::infinity();
  double reference = best_loss;
  std::size_t best_epoch = 0;
  std::size_t wait = 0;
  std::size_t epoch = 0;
  while (epoch < train_cfg.max_epochs) {
    ++epoch;
    {
      Tape tape;
      std::vector<Var> vars;
      for (const auto& p : model.params) vars.push_back(tape.leaf(p.value));
      Var logits = forward_on_tape(tape, model, vars, graph, inputs, &dropout_rng).logits;
      Var loss = ad::masked_cross_entropy(logits, graph.labels(), train_nodes);
      if (!std::isfinite(loss.value()(0, 0))) {
        throw PipelineError("train: non-finite training loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
      for (std::size_t i = 0; i < vars.size(); ++i) {
        auto w = model.params[i].value.values();
        const auto g = vars[i].grad().values();
        auto a = m1[i].values();
        auto b = m2[i].values();
        for (std::size_t k = 0; k < w.size(); ++k) {
          const double gk = g[k] + train_cfg.weight_decay * w[k];
          a[k] = beta1 * a[k] + (1.0 - beta1) * gk;
          b[k] = beta2 * b[k] + (1.0 - beta2) * gk * gk;
          w[k] -= train_cfg.learning_rate * (a[k] / c1) / (std::sqrt(b[k] / c2) + eps);
        }
      }
    }
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : model.params) vars.push_back(tape.constant(p.value));
    const DenseMatrix logits = forward_on_tape(tape, model, vars, graph, inputs, nullptr).logits.value();
    const double val_loss = masked_cross_entropy(logits, graph.labels(), monitor);
    if (!std::isfinite(val_loss)) {
      throw PipelineError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = model.params;
      best_epoch = epoch;
    }
    if (val_loss < reference - train_cfg.min_delta) {
      reference = val_loss;
      wait = 0;
    } else {
      ++wait;
    }
    if (wait >= train_cfg.patience) break;
  }
  model.params = std::move(best);
  model.best_epoch = best_epoch;
  model.epochs_run = epoch;
  model.best_val_loss = best_loss;
  if (model_cfg.arch == Architecture::Han) model.attention = semantic_attention(model, graph);
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json j;
  const auto& cfg = model.config;
  j["architecture"] = std::string(to_string(cfg.arch));
  j["hidden"] = cfg.hidden;
  j["dropout"] = cfg.dropout;
  j["heads"] = cfg.heads;
  j["seed"] = cfg.seed;
  j["metapaths"] = nlohmann::json::array();
  for (const auto& p : cfg.metapaths) j["metapaths"].push_back(p.text());
  j["input_dims"] = model.input_dims;
  j["num_classes"] = model.num_classes;
  j["best_epoch"] = model.best_epoch;
  j["epochs_run"] = model.epochs_run;
  j["best_val_loss"] = model.best_val_loss;
  j["attention"] = model.attention;
  j["params"] = nlohmann::json::array();
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& p = model.params[i];
    const std::string file = "param_" + std::to_string(i) + ".txt";
    std::ofstream out(dir / file);
    if (!out) throw Error("cannot write " + (dir / file).string());
    write_matrix(out, p.value);
    j["params"].push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"file", file}});
  }
  std::ofstream out(dir / "model.json");
  if (!out) throw Error("cannot write " + (dir / "model.json").string());
  out << j.dump(2) << '\n';
}

TrainedModel load_model(const std::filesystem::path& dir, const Schema& schema) {
  std::ifstream in(dir / "model.json");
  if (!in) throw ValidationError("missing file " + (dir / "model.json").string());
  TrainedModel model;
  try {
    const auto j = nlohmann::json::parse(in);
    auto& cfg = model.config;
    cfg.arch = parse_architecture(j.at("architecture").get<std::string>());
    cfg.hidden = j.at("hidden").get<std::size_t>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.heads = j.at("heads").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("metapaths")) cfg.metapaths.push_back(Metapath::parse(schema, t.get<std::string>()));
    model.input_dims = j.at("input_dims").get<std::vector<std::size_t>>();
    model.num_classes = j.at("num_classes").get<int>();
    model.best_epoch = j.at("best_epoch").get<std::size_t>();
    model.epochs_run = j.at("epochs_run").get<std::size_t>();
    model.best_val_loss = j.at("best_val_loss").get<double>();
    model.attention = j.at("attention").get<std::vector<double>>();
    for (const auto& p : j.at("params")) {
      const auto file = dir / p.at("file").get<std::string>();
      std::ifstream pin(file);
      if (!pin) throw ValidationError("missing file " + file.string());
      const auto name = p.at("name").get<std::string>();
      model.params.push_back(
          {name, read_matrix(pin, p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>(), name)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model checkpoint: ") + e.what());
  }
  validate(model.config);
  return model;
}

}  // namespace hgba
