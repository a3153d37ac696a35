#pragma once

#include <memory>
#include <vector>

#include "hgba/hetgraph.hpp"
#include "hgba/matrix.hpp"
#include "hgba/models.hpp"

namespace hgba {

/// Edits that turn one graph into another: appended nodes, added edges and
/// changed feature rows. `compatible` is false when nodes or edges were removed
/// or the schemas differ.
struct GraphDiff {
  bool compatible = true;
  std::vector<std::size_t> old_counts;
  std::vector<std::size_t> new_counts;
  std::vector<std::vector<Edge>> added_edges;          // per relation
  std::vector<std::vector<std::uint32_t>> dirty_rows;  // per type, sorted: edited or appended feature rows
};

GraphDiff diff_graphs(const HeteroGraph& before, const HeteroGraph& after);

/// Inference for graphs obtained from `base` by small edits. Activations of rows the
/// edit cannot reach are reused from a cached pass over `base`; the rest are recomputed.
/// Falls back to a full forward pass when the edit is not append-only.
class DeltaInference {
 public:
  DeltaInference(const TrainedModel& model, const HeteroGraph& base);

  DenseMatrix logits(const HeteroGraph& graph) const;
  std::vector<int> predict(const HeteroGraph& graph) const;

 private:
  struct State;
  std::shared_ptr<const State> state_;
};

}  // namespace hgba
