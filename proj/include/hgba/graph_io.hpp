#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "hgba/hetgraph.hpp"
#include "hgba/matrix.hpp"

namespace hgba {

/// Featureless node types get one-hot rows of this many columns at most
/// (row i is hot at i mod width).
inline constexpr std::size_t kMaxOneHotDim = 512;

/// Reads an HG-TSV directory (manifest.json plus the files it names) and
/// validates the result. Throws ValidationError on any inconsistency.
HeteroGraph load_graph(const std::filesystem::path& root);

/// The split stored alongside a graph, if the manifest names a split_file.
std::optional<DataSplit> load_split(const std::filesystem::path& root);

/// Writes `graph` (and optionally `split`) as an HG-TSV directory, creating it if needed.
/// Reals are written in shortest round-trip form, so load(save(g)) == g bit for bit.
void save_graph(const HeteroGraph& graph, const std::filesystem::path& root,
                const std::optional<DataSplit>& split = std::nullopt);

/// Whitespace-separated decimal matrix text, one row per line.
void write_matrix(std::ostream& out, const DenseMatrix& m);
/// Reads `rows` rows of `cols` reals; throws ValidationError on a shape mismatch.
DenseMatrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols, const std::string& what);

void write_split(std::ostream& out, const DataSplit& split);
DataSplit read_split(std::istream& in);

}  // namespace hgba
