#include "hgba/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "hgba/error.hpp"

namespace hgba {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("missing file: " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + p.string());
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_real(std::string_view tok, const std::string& what) {
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [end, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size()) {
    throw ValidationError(what + ": cannot parse real '" + std::string(tok) + "'");
  }
  return v;
}

long long parse_int(std::string_view tok, const std::string& what) {
  long long v = 0;
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || end != tok.data() + tok.size()) {
    throw ValidationError(what + ": cannot parse integer '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + ": bad value for '" + key + "': " + e.what());
  }
}

NodeTypeId type_by_name(const Schema& s, const std::string& name, const std::string& where) {
  auto t = s.find_type(name);
  if (!t) throw ValidationError(where + ": unknown node type '" + name + "'");
  return *t;
}

std::vector<std::uint32_t> parse_index_line(std::string_view line) {
  std::vector<std::uint32_t> out;
  for (auto tok : tokens(line)) {
    const long long v = parse_int(tok, "split file");
    if (v < 0) throw ValidationError("split file: negative index");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

}  // namespace

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  std::string line;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    line.clear();
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line.push_back(' ');
      line += format_real(row[c]);
    }
    line.push_back('\n');
    out << line;
  }
}

DenseMatrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols, const std::string& what) {
  DenseMatrix m(rows, cols);
  std::string line;
  std::size_t r = 0;
  while (std::getline(in, line)) {
    auto toks = tokens(line);
    if (toks.empty()) continue;
    if (r >= rows) throw ValidationError(what + ": more rows than the declared " + std::to_string(rows));
    if (toks.size() != cols) {
      throw ValidationError(what + ": dimension mismatch on row " + std::to_string(r) + " (" +
                            std::to_string(toks.size()) + " values, expected " + std::to_string(cols) + ")");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = parse_real(toks[c], what);
    ++r;
  }
  if (r != rows) {
    throw ValidationError(what + ": dimension mismatch (" + std::to_string(r) + " rows, expected " +
                          std::to_string(rows) + ")");
  }
  return m;
}

void write_split(std::ostream& out, const DataSplit& split) {
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      if (i) out << ' ';
      out << (*part)[i];
    }
    out << '\n';
  }
}

DataSplit read_split(std::istream& in) {
  DataSplit split;
  std::string line;
  std::vector<std::uint32_t>* parts[] = {&split.train, &split.val, &split.test};
  for (auto* part : parts) {
    if (!std::getline(in, line)) throw ValidationError("split file must have three lines");
    *part = parse_index_line(line);
  }
  return split;
}

HeteroGraph load_graph(const fs::path& root) {
  json manifest;
  {
    auto in = open_in(root / "manifest.json");
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw ValidationError("manifest.json: " + std::string(e.what()));
    }
  }
  Schema schema;
  std::vector<DenseMatrix> features;
  for (const auto& jt : required<json>(manifest, "node_types", "manifest")) {
    NodeTypeInfo info;
    info.name = required<std::string>(jt, "name", "node type");
    info.count = required<std::size_t>(jt, "count", info.name);
    info.feature_dim = jt.value("feature_dim", std::size_t{0});
    const std::string where = "features of '" + info.name + "'";
    if (jt.contains("feature_file") && !jt["feature_file"].is_null()) {
      auto in = open_in(root / jt["feature_file"].get<std::string>());
      features.push_back(read_matrix(in, info.count, info.feature_dim, where));
    } else {
      const std::size_t dim = std::min(info.count, kMaxOneHotDim);
      DenseMatrix f(info.count, dim);
      for (std::size_t i = 0; i < info.count; ++i) f(i, i % dim) = 1.0;
      info.feature_dim = dim;
      features.push_back(std::move(f));
    }
    schema.node_types.push_back(std::move(info));
  }
  std::vector<std::vector<Edge>> edges;
  for (const auto& jr : required<json>(manifest, "relations", "manifest")) {
    RelationInfo rel;
    rel.name = required<std::string>(jr, "name", "relation");
    rel.src = type_by_name(schema, required<std::string>(jr, "src_type", rel.name), rel.name);
    rel.dst = type_by_name(schema, required<std::string>(jr, "dst_type", rel.name), rel.name);
    auto in = open_in(root / required<std::string>(jr, "edge_file", rel.name));
    std::vector<Edge> list;
    std::string line;
    while (std::getline(in, line)) {
      auto toks = tokens(line);
      if (toks.empty()) continue;
      if (toks.size() != 2) throw ValidationError("edge file of '" + rel.name + "': expected two indices per line");
      const long long s = parse_int(toks[0], rel.name);
      const long long d = parse_int(toks[1], rel.name);
      if (s < 0 || d < 0) throw ValidationError("out-of-range edge index in relation '" + rel.name + "'");
      list.emplace_back(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(d));
    }
    edges.push_back(std::move(list));
    schema.relations.push_back(std::move(rel));
  }
  const NodeTypeId target = type_by_name(schema, required<std::string>(manifest, "target_type", "manifest"), "manifest");
  const int num_classes = required<int>(manifest, "num_classes", "manifest");
  std::vector<int> labels;
  {
    auto in = open_in(root / required<std::string>(manifest, "label_file", "manifest"));
    std::string line;
    while (std::getline(in, line)) {
      auto toks = tokens(line);
      if (toks.empty()) continue;
      if (toks.size() != 1) throw ValidationError("label file: one integer per line expected");
      labels.push_back(static_cast<int>(parse_int(toks[0], "label file")));
    }
  }
  return HeteroGraph(std::move(schema), std::move(features), std::move(edges), std::move(labels), target,
                     num_classes);
}

std::optional<DataSplit> load_split(const fs::path& root) {
  json manifest;
  {
    auto in = open_in(root / "manifest.json");
    in >> manifest;
  }
  if (!manifest.contains("split_file") || manifest["split_file"].is_null()) return std::nullopt;
  auto in = open_in(root / manifest["split_file"].get<std::string>());
  return read_split(in);
}

void save_graph(const HeteroGraph& graph, const fs::path& root, const std::optional<DataSplit>& split) {
  fs::create_directories(root);
  const Schema& s = graph.schema();
  json manifest;
  manifest["node_types"] = json::array();
  for (std::size_t t = 0; t < s.node_types.size(); ++t) {
    const auto& info = s.node_types[t];
    const std::string file = "features_" + std::to_string(t) + ".txt";
    manifest["node_types"].push_back(
        {{"name", info.name}, {"count", info.count}, {"feature_dim", info.feature_dim}, {"feature_file", file}});
    auto out = open_out(root / file);
    write_matrix(out, graph.features(static_cast<NodeTypeId>(t)));
  }
  manifest["relations"] = json::array();
  for (std::size_t r = 0; r < s.relations.size(); ++r) {
    const auto& rel = s.relations[r];
    const std::string file = "edges_" + std::to_string(r) + ".tsv";
    manifest["relations"].push_back({{"name", rel.name},
                                     {"src_type", s.node_types[rel.src].name},
                                     {"dst_type", s.node_types[rel.dst].name},
                                     {"edge_file", file}});
    auto out = open_out(root / file);
    for (const auto& [a, b] : graph.edges(static_cast<RelationId>(r))) out << a << '\t' << b << '\n';
  }
  manifest["target_type"] = s.node_types[graph.target_type()].name;
  manifest["num_classes"] = graph.num_classes();
  manifest["label_file"] = "labels.txt";
  {
    auto out = open_out(root / "labels.txt");
    for (int y : graph.labels()) out << y << '\n';
  }
  if (split) {
    manifest["split_file"] = "split.txt";
    auto out = open_out(root / "split.txt");
    write_split(out, *split);
  }
  auto out = open_out(root / "manifest.json");
  out << manifest.dump(2) << '\n';
}

}  // namespace hgba
