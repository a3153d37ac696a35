#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgba/attack.hpp"
#include "hgba/centrality.hpp"
#include "hgba/defense.hpp"
#include "hgba/eval.hpp"
#include "hgba/hetgraph.hpp"
#include "hgba/models.hpp"

namespace hgba {

struct GraphSource {
  /// HG-TSV directory; empty means synthetic.
  std::string path;
  SynthConfig synth;
  /// Synthetic graphs are regenerated per seed (synth.seed = run seed).
  bool reseed = true;
};

struct ModelSection {
  std::vector<Architecture> architectures{Architecture::Gcn};
  std::size_t hidden = 128;
  /// Unset: per-architecture default.
  std::optional<double> dropout;
  int heads = 8;
  /// Metapath texts for gcn/han; empty means the attack candidates.
  std::vector<std::string> metapaths;
};

struct AttackSection {
  AttackVariant variant = AttackVariant::Hgba;
  BudgetConfig budget;
  /// Metapath texts; empty means default_candidates().
  std::vector<std::string> candidates;
  ProxyKind proxy = ProxyKind::HomoGnn;
  TriggerCriterion trigger;
  std::optional<int> target_class;
  /// Empty means the variant's own strategies.
  std::vector<Strategy> strategies;
  std::size_t trigger_size = 3;
  double edge_prob = 0.8;
};

struct DefenseSection {
  bool enabled = false;
  DefenseMethod method = DefenseMethod::PruneLd;
  PruneOptions prune;
  /// Prune only along the backdoor metapath instead of every defender metapath.
  bool oracle = false;
};

struct EvalSection {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> budget_fractions;
  std::vector<double> noise_levels;
  NoiseScope noise_scope = NoiseScope::NodeAndNeighbors;
  std::vector<double> density_fractions;
};

struct ExperimentConfig {
  GraphSource graph;
  SplitRatios split;
  ModelSection model;
  TrainConfig train;
  AttackSection attack;
  DefenseSection defense;
  EvalSection eval;
  std::string output_dir = "hgba-out";
};

void validate(const ExperimentConfig& cfg);
std::string config_to_json(const ExperimentConfig& cfg);
/// Throws ConfigError on malformed text, unknown keys or invalid values.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Palindromic metapaths of at most four relations that start at the target type and do
/// not revisit a type before the turning point (e.g. PAP, PSP, APCPA).
std::vector<Metapath> default_candidates(const HeteroGraph& graph);

std::vector<Strategy> strategies_for(AttackVariant v);

/// Numeric rows with an optional leading text column; the common shape of every result file.
struct Table {
  std::string label_column;         // empty: no text column
  std::vector<std::string> labels;  // one per row when label_column is set
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Element-wise mean of equally shaped tables.
Table mean_table(std::span<const Table> tables);

/// Everything the attack stages produce for one seed.
struct AttackSetup {
  std::uint64_t seed = 0;
  HeteroGraph clean;
  DataSplit split;
  std::vector<Metapath> candidates;
  MetapathSelection selection;
  NodeRef v_t;
  int y_t = 0;
  std::size_t budget = 0;
  HeteroGraph poisoned;
  PoisonPlan plan;
};

HeteroGraph build_graph(const ExperimentConfig& cfg, std::uint64_t seed);
/// Loads or generates the graph and runs selection and poisoning.
AttackSetup prepare_attack(const ExperimentConfig& cfg, std::uint64_t seed);
/// Same on a given graph; `budget_fraction` overrides the configured fraction.
AttackSetup prepare_attack(const ExperimentConfig& cfg, const HeteroGraph& graph, std::uint64_t seed,
                           std::optional<double> budget_fraction = std::nullopt);

ModelConfig victim_config(const ExperimentConfig& cfg, Architecture arch, std::span<const Metapath> candidates,
                          const Schema& schema, std::uint64_t seed);

/// One-at-a-time ASR for each strategy, columns "asr_<strategy>"; NaN where no node is eligible.
Table asr_table(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> test,
                const PoisonPlan& plan, std::span<const Strategy> strategies,
                const std::optional<NoiseConfig>& noise = std::nullopt);

/// Per budget fraction: poison, train, measure; averaged over cfg.eval.seeds for the first architecture.
Table sweep_budget(const ExperimentConfig& cfg, std::span<const double> fractions);
Table sweep_budget(const ExperimentConfig& cfg, const HeteroGraph& graph, std::span<const double> fractions);
/// Rows (level, asr_<strategy>...) under feature perturbation of each triggered node.
Table sweep_noise(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> test,
                  const PoisonPlan& plan, std::span<const double> levels, std::span<const Strategy> strategies,
                  NoiseScope scope, std::uint64_t seed);
/// Rows (fraction, asr_<strategy>...) under the simultaneous protocol.
Table sweep_density(const TrainedModel& model, const HeteroGraph& graph, std::span<const std::uint32_t> test,
                    const PoisonPlan& plan, std::span<const double> fractions, std::span<const Strategy> strategies,
                    std::uint64_t seed);

struct RunSummary {
  /// One row per (seed, architecture).
  Table per_seed;
  /// One row per architecture.
  Table averaged;
  Table budget;
  double wall_seconds = 0.0;
};

/// Runs every seed and writes per-seed and averaged results plus a manifest into
/// cfg.output_dir. A file named INCOMPLETE marks a directory whose run failed.
/// Stage failures surface as PipelineError naming the stage.
RunSummary run(const ExperimentConfig& cfg);

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace hgba
