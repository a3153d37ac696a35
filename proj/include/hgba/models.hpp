#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hgba/autodiff.hpp"
#include "hgba/hetgraph.hpp"
#include "hgba/matrix.hpp"
#include "hgba/metapath.hpp"

namespace hgba {

enum class Architecture { Gcn, Rgcn, Han };

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view name);

struct ModelConfig {
  Architecture arch = Architecture::Gcn;
  std::size_t hidden = 128;
  double dropout = 0.0;
  /// Recorded for HAN; node-level heads are folded into one propagation.
  int heads = 8;
  /// gcn: exactly one projection metapath; han: every candidate; rgcn: unused.
  std::vector<Metapath> metapaths;
  std::uint64_t seed = 0;

  /// Defaults for an architecture: hidden 128, dropout 0.0 (gcn, rgcn) or 0.6 (han).
  static ModelConfig defaults(Architecture arch, std::vector<Metapath> metapaths, std::uint64_t seed);
};

void validate(const ModelConfig& cfg);

struct TrainConfig {
  double learning_rate = 0.003;
  double weight_decay = 1e-4;
  std::size_t max_epochs = 200;
  std::size_t patience = 30;
  double min_delta = 1e-3;
};

void validate(const TrainConfig& cfg);

struct NamedMatrix {
  std::string name;
  DenseMatrix value;

  friend bool operator==(const NamedMatrix&, const NamedMatrix&) = default;
};

/// Parameters plus the bookkeeping needed to rebuild and audit a run.
struct TrainedModel {
  ModelConfig config;
  std::vector<NamedMatrix> params;
  /// Feature width of every node type and the class count the model was built for.
  std::vector<std::size_t> input_dims;
  int num_classes = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_val_loss = 0.0;
  /// HAN only: semantic attention per configured metapath (sums to 1).
  std::vector<double> attention;

  const DenseMatrix& param(std::string_view name) const;
};

/// Freshly initialised parameters: weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
TrainedModel init_model(const ModelConfig& cfg, const HeteroGraph& graph);

/// Inputs derived from the graph structure, reusable across forward passes.
struct GraphInputs {
  std::vector<SparseMatrix> propagation;  // gcn/han: one per metapath
  struct Message {
    RelationId relation;
    bool reverse;
    NodeTypeId from;
    NodeTypeId to;
    SparseMatrix mean;  // rows: receiving type, cols: sending type
  };
  std::vector<Message> messages;  // rgcn
};

GraphInputs prepare_inputs(const ModelConfig& cfg, const HeteroGraph& graph);

/// Records the forward pass on `tape`; `params` are the tape leaves in model order.
/// `dropout_rng` enables dropout (training); nullptr means inference.
struct ForwardResult {
  Var logits;
  Var attention;  // 1 x M for han, default otherwise
};
ForwardResult forward_on_tape(Tape& tape, const TrainedModel& model, std::span<const Var> params,
                              const HeteroGraph& graph, const GraphInputs& inputs, std::mt19937_64* dropout_rng);

/// Inference logits (target nodes x classes). Throws ValidationError on schema mismatch.
DenseMatrix forward(const TrainedModel& model, const HeteroGraph& graph);
std::vector<int> predict(const TrainedModel& model, const HeteroGraph& graph);

/// Semantic attention weights of a HAN model on `graph`.
std::vector<double> semantic_attention(const TrainedModel& model, const HeteroGraph& graph);

/// Training loss on `graph` for the given nodes (labels taken from the graph); used by gradient checks.
Var training_loss(Tape& tape, const TrainedModel& model, std::span<const Var> params, const HeteroGraph& graph,
                  std::span<const std::uint32_t> nodes);

/// Adam with coupled L2 weight decay and early stopping on validation loss.
/// Nodes without an observed label are skipped. Throws PipelineError on divergence.
TrainedModel train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const HeteroGraph& graph,
                   const DataSplit& split);

/// Metapath name -> weight. Throws ConfigError for non-HAN models.
std::vector<std::pair<std::string, double>> get_metapath_attention(const TrainedModel& model);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

/// Micro-F1 (accuracy for single-label) and macro-F1 (mean per-class F1; classes
/// absent from both predictions and truth contribute 0).
F1Scores f1_scores(std::span<const int> predicted, std::span<const int> truth, int num_classes);

/// Scores predictions on `nodes` against the graph's labels.
F1Scores evaluate(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> nodes);
F1Scores evaluate_predictions(std::span<const int> predicted, const HeteroGraph& graph,
                              std::span<const std::uint32_t> nodes);

void save_model(const TrainedModel& model, const std::filesystem::path& dir);
TrainedModel load_model(const std::filesystem::path& dir, const Schema& schema);

}  // namespace hgba
