#include "dirpoly/dataset.hpp"

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dirpoly/error.hpp"

namespace dirpoly {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view task_name(Task task) {
  return task == Task::kBinaryRocAuc ? "binary-rocauc" : "multiclass-accuracy";
}

Task parse_task(std::string_view name) {
  if (name == "multiclass-accuracy") return Task::kMulticlassAccuracy;
  if (name == "binary-rocauc") return Task::kBinaryRocAuc;
  throw FormatError("unknown task '" + std::string(name) + "'");
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw FormatError("cannot format double");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw FormatError("malformed number '" + std::string(text) + "'");
  }
  return value;
}

namespace {

template <typename Int>
Int parse_int(std::string_view text, const std::string& where) {
  Int value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw FormatError(where + ": malformed integer '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << content;
}

const char* partition_name(int p) {
  static const char* names[] = {"train", "val", "test"};
  return names[p];
}

}  // namespace

std::vector<NodeId> mask_indices(const Mask& mask) {
  std::vector<NodeId> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) idx.push_back(static_cast<NodeId>(i));
  }
  return idx;
}

void Dataset::validate() const {
  const std::size_t n = graph.num_nodes();
  if (features.rows() != n) {
    throw FormatError("features has " + std::to_string(features.rows()) + " rows, expected " +
                      std::to_string(n));
  }
  if (labels.size() != n) {
    throw FormatError("labels has " + std::to_string(labels.size()) + " entries, expected " +
                      std::to_string(n));
  }
  if (features.cols() == 0) throw FormatError("feature_dim must be positive");
  if (num_classes < 1) throw FormatError("num_classes must be positive");
  if (task == Task::kBinaryRocAuc && num_classes != 2) {
    throw FormatError("binary-rocauc task requires exactly 2 classes, got " +
                      std::to_string(num_classes));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw FormatError("label " + std::to_string(labels[i]) + " of node " + std::to_string(i) +
                        " outside class range [0," + std::to_string(num_classes) + ")");
    }
  }
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const Split& sp = splits[s];
    if (sp.train.size() != n || sp.val.size() != n || sp.test.size() != n) {
      throw FormatError("split " + std::to_string(s) + " masks do not cover " +
                        std::to_string(n) + " nodes");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (sp.train[i] + sp.val[i] + sp.test[i] > 1) {
        throw FormatError("split " + std::to_string(s) + ": node " + std::to_string(i) +
                          " assigned to more than one partition");
      }
    }
  }
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw FormatError("missing file " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(manifest_in);
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest.json: " + std::string(e.what()));
  }

  std::size_t n, m, d, num_splits;
  Dataset ds;
  try {
    n = manifest.at("num_nodes").get<std::size_t>();
    m = manifest.at("num_edges").get<std::size_t>();
    d = manifest.at("feature_dim").get<std::size_t>();
    ds.num_classes = manifest.at("num_classes").get<int>();
    ds.task = parse_task(manifest.at("task").get<std::string>());
    num_splits = manifest.at("num_splits").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }

  auto edge_lines = read_lines(dir / "edges.csv");
  if (edge_lines.size() != m) {
    throw FormatError("edges.csv has " + std::to_string(edge_lines.size()) +
                      " rows but manifest num_edges is " + std::to_string(m));
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (const auto& line : edge_lines) {
    auto f = split_fields(line);
    if (f.size() != 2) throw FormatError("edges.csv: malformed line '" + line + "'");
    edges.emplace_back(parse_int<NodeId>(f[0], "edges.csv"), parse_int<NodeId>(f[1], "edges.csv"));
  }
  ds.graph = DirectedGraph(n, edges);
  if (ds.graph.num_edges() != m) {
    throw FormatError("edges.csv contains duplicate edges");
  }

  auto feature_lines = read_lines(dir / "features.csv");
  if (feature_lines.size() != n) {
    throw FormatError("features.csv has " + std::to_string(feature_lines.size()) +
                      " rows but manifest num_nodes is " + std::to_string(n));
  }
  ds.features = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto f = split_fields(feature_lines[i]);
    if (f.size() != d) {
      throw FormatError("features.csv row " + std::to_string(i) + " has " +
                        std::to_string(f.size()) + " columns, expected " + std::to_string(d));
    }
    for (std::size_t k = 0; k < d; ++k) ds.features(i, k) = parse_double(f[k]);
  }

  auto label_lines = read_lines(dir / "labels.csv");
  if (label_lines.size() != n) {
    throw FormatError("labels.csv has " + std::to_string(label_lines.size()) +
                      " rows but manifest num_nodes is " + std::to_string(n));
  }
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = parse_int<int>(label_lines[i], "labels.csv");
    if (ds.labels[i] < 0 || ds.labels[i] >= ds.num_classes) {
      throw FormatError("labels.csv: label " + label_lines[i] + " of node " + std::to_string(i) +
                        " out of class range [0," + std::to_string(ds.num_classes) + ")");
    }
  }

  ds.splits.assign(num_splits, Split{Mask(n, 0), Mask(n, 0), Mask(n, 0)});
  auto split_lines = fs::exists(dir / "splits.csv") || num_splits > 0
                         ? read_lines(dir / "splits.csv")
                         : std::vector<std::string>{};
  for (const auto& line : split_lines) {
    auto f = split_fields(line);
    if (f.size() != 3) throw FormatError("splits.csv: malformed line '" + line + "'");
    auto s = parse_int<std::size_t>(f[0], "splits.csv");
    auto v = parse_int<std::size_t>(f[1], "splits.csv");
    if (s >= num_splits) throw FormatError("splits.csv: split id " + std::to_string(s) + " out of range");
    if (v >= n) throw FormatError("splits.csv: node " + std::to_string(v) + " out of range");
    Split& sp = ds.splits[s];
    if (f[2] == "train") {
      sp.train[v] = 1;
    } else if (f[2] == "val") {
      sp.val[v] = 1;
    } else if (f[2] == "test") {
      sp.test[v] = 1;
    } else {
      throw FormatError("splits.csv: unknown partition '" + std::string(f[2]) + "'");
    }
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  const std::size_t n = ds.num_nodes();

  json manifest = {{"num_nodes", n},
                   {"num_edges", ds.graph.num_edges()},
                   {"feature_dim", ds.features.cols()},
                   {"num_classes", ds.num_classes},
                   {"task", std::string(task_name(ds.task))},
                   {"num_splits", ds.splits.size()}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::string buf;
  for (const auto& [u, v] : ds.graph.edges()) {
    buf += std::to_string(u);
    buf += ',';
    buf += std::to_string(v);
    buf += '\n';
  }
  write_file(dir / "edges.csv", buf);

  buf.clear();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < ds.features.cols(); ++k) {
      if (k) buf += ',';
      buf += format_double(ds.features(i, k));
    }
    buf += '\n';
  }
  write_file(dir / "features.csv", buf);

  buf.clear();
  for (int y : ds.labels) {
    buf += std::to_string(y);
    buf += '\n';
  }
  write_file(dir / "labels.csv", buf);

  buf.clear();
  for (std::size_t s = 0; s < ds.splits.size(); ++s) {
    const Mask* masks[] = {&ds.splits[s].train, &ds.splits[s].val, &ds.splits[s].test};
    for (std::size_t v = 0; v < n; ++v) {
      for (int p = 0; p < 3; ++p) {
        if ((*masks[p])[v]) {
          buf += std::to_string(s) + "," + std::to_string(v) + "," + partition_name(p) + "\n";
        }
      }
    }
  }
  write_file(dir / "splits.csv", buf);
}

Dataset permute_dataset(const Dataset& ds, std::span<const NodeId> perm) {
  Dataset out;
  out.graph = permute(ds.graph, perm);
  out.num_classes = ds.num_classes;
  out.task = ds.task;
  const std::size_t n = ds.num_nodes();
  out.features = Matrix(n, ds.features.cols());
  out.labels.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto src = ds.features.row(v);
    std::copy(src.begin(), src.end(), out.features.row(perm[v]).begin());
    out.labels[perm[v]] = ds.labels[v];
  }
  for (const Split& sp : ds.splits) {
    Split q{Mask(n), Mask(n), Mask(n)};
    for (std::size_t v = 0; v < n; ++v) {
      q.train[perm[v]] = sp.train[v];
      q.val[perm[v]] = sp.val[v];
      q.test[perm[v]] = sp.test[v];
    }
    out.splits.push_back(std::move(q));
  }
  return out;
}

}  // namespace dirpoly
