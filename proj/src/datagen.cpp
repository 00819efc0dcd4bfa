#include "dirpoly/datagen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "dirpoly/error.hpp"
#include "dirpoly/random.hpp"

namespace dirpoly {

using nlohmann::json;

std::string_view label_mode_name(LabelMode mode) {
  return mode == LabelMode::kIntrinsic ? "intrinsic" : "in_neighbor_majority";
}

LabelMode parse_label_mode(std::string_view name) {
  if (name == "intrinsic") return LabelMode::kIntrinsic;
  if (name == "in_neighbor_majority") return LabelMode::kInNeighborMajority;
  throw ConfigError("unknown label_mode '" + std::string(name) +
                    "' (expected intrinsic, in_neighbor_majority)");
}

void GenSpec::validate() const {
  if (num_nodes == 0) throw ConfigError("gen spec: num_nodes must be positive");
  if (num_classes < 2) throw ConfigError("gen spec: num_classes must be at least 2");
  if (feature_dim == 0) throw ConfigError("gen spec: feature_dim must be positive");
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) {
    throw ConfigError("gen spec: feature_noise must be a finite non-negative number");
  }
  if (!(expected_out_degree > 0.0) || !std::isfinite(expected_out_degree)) {
    throw ConfigError("gen spec: expected_out_degree must be positive");
  }
  const auto c = static_cast<std::size_t>(num_classes);
  if (affinity.size() != c) throw ConfigError("gen spec: affinity must have num_classes rows");
  bool any = false;
  for (const auto& row : affinity) {
    if (row.size() != c) throw ConfigError("gen spec: affinity must be num_classes x num_classes");
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("gen spec: affinity entries must lie in [0, 1]");
      any = any || v > 0.0;
    }
  }
  if (!any) throw ConfigError("gen spec: affinity is all zero");
  double total = 0.0;
  for (double f : split_fractions) {
    if (!(f >= 0.0)) throw ConfigError("gen spec: split fractions must be non-negative");
    total += f;
  }
  if (total > 1.0 + 1e-12) throw ConfigError("gen spec: split fractions sum above 1");
  if (num_splits == 0) throw ConfigError("gen spec: num_splits must be positive");
}

GenSpec parse_gen_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("gen spec: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("gen spec: expected a JSON object");
  static const char* kKeys[] = {"num_nodes",      "num_classes",         "feature_dim",
                                "feature_noise",  "affinity",            "expected_out_degree",
                                "label_mode",     "split_fractions",     "num_splits",
                                "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw ConfigError("gen spec: unknown key '" + key + "'");
    }
  }
  GenSpec s;
  try {
    for (const char* req : {"num_nodes", "num_classes", "feature_dim", "affinity"}) {
      if (!j.contains(req)) throw ConfigError(std::string("gen spec: missing key '") + req + "'");
    }
    s.num_nodes = j.at("num_nodes").get<std::size_t>();
    s.num_classes = j.at("num_classes").get<int>();
    s.feature_dim = j.at("feature_dim").get<std::size_t>();
    s.affinity = j.at("affinity").get<std::vector<std::vector<double>>>();
    if (j.contains("feature_noise")) s.feature_noise = j["feature_noise"].get<double>();
    if (j.contains("expected_out_degree")) s.expected_out_degree = j["expected_out_degree"].get<double>();
    if (j.contains("label_mode")) s.label_mode = parse_label_mode(j["label_mode"].get<std::string>());
    if (j.contains("split_fractions")) {
      auto f = j["split_fractions"].get<std::vector<double>>();
      if (f.size() != 3) throw ConfigError("gen spec: split_fractions needs 3 entries");
      std::copy(f.begin(), f.end(), s.split_fractions.begin());
    }
    if (j.contains("num_splits")) s.num_splits = j["num_splits"].get<std::size_t>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("gen spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string gen_spec_json(const GenSpec& s) {
  nlohmann::ordered_json j;
  j["num_nodes"] = s.num_nodes;
  j["num_classes"] = s.num_classes;
  j["feature_dim"] = s.feature_dim;
  j["feature_noise"] = s.feature_noise;
  j["affinity"] = s.affinity;
  j["expected_out_degree"] = s.expected_out_degree;
  j["label_mode"] = label_mode_name(s.label_mode);
  j["split_fractions"] = s.split_fractions;
  j["num_splits"] = s.num_splits;
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

std::vector<double> class_code(int c, int num_classes, std::size_t dim) {
  const auto period = std::bit_ceil(static_cast<unsigned>(num_classes));
  std::vector<double> code(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const unsigned m = static_cast<unsigned>(k % period);
    code[k] = std::popcount(static_cast<unsigned>(c) & m) % 2 == 0 ? 1.0 : -1.0;
  }
  return code;
}

namespace {

// Appends Bernoulli(p) edges over the pair grid sources x targets, skipping
// geometrically between successes.
void sample_block(const std::vector<NodeId>& sources, const std::vector<NodeId>& targets, double p,
                  Rng& rng, std::vector<Edge>& out) {
  if (p <= 0.0) return;
  const std::size_t cells = sources.size() * targets.size();
  if (p >= 1.0) {
    for (NodeId u : sources)
      for (NodeId v : targets)
        if (u != v) out.emplace_back(u, v);
    return;
  }
  const double log_q = std::log1p(-p);
  std::size_t k = 0;
  while (true) {
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    const double skip = std::floor(std::log(u) / log_q);
    if (skip >= static_cast<double>(cells - k)) break;
    k += static_cast<std::size_t>(skip);
    const NodeId a = sources[k / targets.size()], b = targets[k % targets.size()];
    if (a != b) out.emplace_back(a, b);
    if (++k >= cells) break;
  }
}

}  // namespace

Generated generate_with_latent(const GenSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_nodes;
  const int c = spec.num_classes;
  Rng rng(spec.seed);

  std::vector<int> latent(n);
  std::vector<std::vector<NodeId>> members(c);
  for (std::size_t v = 0; v < n; ++v) {
    latent[v] = static_cast<int>(uniform01(rng) * c);
    members[latent[v]].push_back(static_cast<NodeId>(v));
  }

  double pairs = 0.0;
  for (int a = 0; a < c; ++a)
    for (int b = 0; b < c; ++b) {
      const double na = static_cast<double>(members[a].size());
      const double nb = static_cast<double>(members[b].size()) - (a == b ? 1.0 : 0.0);
      pairs += na * std::max(nb, 0.0) * spec.affinity[a][b];
    }
  if (pairs <= 0.0) throw ConfigError("gen spec: affinity admits no edges for the drawn classes");
  const double scale = spec.expected_out_degree * static_cast<double>(n) / pairs;
  std::vector<Edge> edges;
  for (int a = 0; a < c; ++a)
    for (int b = 0; b < c; ++b)
      sample_block(members[a], members[b], std::min(1.0, spec.affinity[a][b] * scale), rng, edges);

  Dataset d;
  d.graph = DirectedGraph(n, edges);
  d.num_classes = c;
  d.task = Task::kMulticlassAccuracy;

  d.features = Matrix(n, spec.feature_dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> codes;
  for (int k = 0; k < c; ++k) codes.push_back(class_code(k, c, spec.feature_dim));
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t k = 0; k < spec.feature_dim; ++k)
      d.features(v, k) = codes[latent[v]][k] + spec.feature_noise * noise(rng);

  d.labels = latent;
  if (spec.label_mode == LabelMode::kInNeighborMajority) {
    std::vector<int> count(c);
    for (std::size_t v = 0; v < n; ++v) {
      auto in = d.graph.in_neighbors(static_cast<NodeId>(v));
      if (in.empty()) continue;
      std::fill(count.begin(), count.end(), 0);
      for (NodeId u : in) ++count[latent[u]];
      d.labels[v] = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
    }
  }

  const auto n_train = static_cast<std::size_t>(spec.split_fractions[0] * n);
  const auto n_val = static_cast<std::size_t>(spec.split_fractions[1] * n);
  const auto n_test = std::min(n - n_train - n_val, static_cast<std::size_t>(spec.split_fractions[2] * n));
  std::vector<NodeId> order(n);
  for (std::size_t s = 0; s < spec.num_splits; ++s) {
    for (std::size_t v = 0; v < n; ++v) order[v] = static_cast<NodeId>(v);
    std::shuffle(order.begin(), order.end(), rng);
    Split sp{Mask(n, 0), Mask(n, 0), Mask(n, 0)};
    for (std::size_t i = 0; i < n_train + n_val + n_test; ++i) {
      Mask& m = i < n_train ? sp.train : i < n_train + n_val ? sp.val : sp.test;
      m[order[i]] = 1;
    }
    d.splits.push_back(std::move(sp));
  }
  d.validate();
  return {std::move(d), std::move(latent)};
}

Dataset generate(const GenSpec& spec) { return generate_with_latent(spec).dataset; }

GenSpec directional_benchmark_spec(std::uint64_t seed) {
  GenSpec s;
  s.num_nodes = 3000;
  s.num_classes = 4;
  s.feature_dim = 16;
  s.feature_noise = 0.2;
  s.affinity = {{0.5, 0.1, 0.5, 0.5},
                {0.02, 0.02, 0.0, 0.5},
                {0.0, 0.5, 0.0, 0.02},
                {0.1, 0.5, 0.1, 0.1}};
  s.expected_out_degree = 4.0;
  s.label_mode = LabelMode::kInNeighborMajority;
  s.num_splits = 10;
  s.seed = seed;
  return s;
}

DatasetPair directional_benchmark(std::uint64_t seed) {
  DatasetPair p;
  p.directed = generate(directional_benchmark_spec(seed));
  p.symmetrized = p.directed;
  p.symmetrized.graph = symmetrize(p.directed.graph);
  return p;
}

GenSpec heterophilic_benchmark_spec(std::uint64_t seed) {
  GenSpec s;
  s.num_nodes = 3000;
  s.num_classes = 4;
  s.feature_dim = 16;
  s.feature_noise = 2.0;
  s.affinity = {{0.0, 1.0, 0.2, 0.2},
                {0.2, 0.0, 1.0, 0.2},
                {0.2, 0.2, 0.0, 1.0},
                {1.0, 0.2, 0.2, 0.0}};
  s.expected_out_degree = 4.0;
  s.label_mode = LabelMode::kIntrinsic;
  s.num_splits = 10;
  s.seed = seed;
  return s;
}

}  // namespace dirpoly
