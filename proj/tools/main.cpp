#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dirpoly/checkpoint.hpp"
#include "dirpoly/datagen.hpp"
#include "dirpoly/error.hpp"
#include "dirpoly/gradcheck.hpp"
#include "dirpoly/homophily.hpp"
#include "dirpoly/polycheck.hpp"
#include "dirpoly/run_config.hpp"
#include "dirpoly/training.hpp"

namespace fs = std::filesystem;
using namespace dirpoly;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

int cmd_dataset_gen(const std::string& spec_path, const std::string& out,
                    std::optional<std::uint64_t> seed) {
  GenSpec spec = parse_gen_spec(read_file(spec_path));
  if (seed) spec.seed = *seed;
  Dataset d = generate(spec);
  save_dataset(d, out);
  std::cout << fmt::format("wrote {} nodes, {} edges to {}\n", d.num_nodes(), d.graph.num_edges(), out);
  return 0;
}

int cmd_dataset_inspect(const std::string& dir) {
  Dataset d = load_dataset(dir);
  std::cout << fmt::format("num_nodes={}\nnum_edges={}\nfeature_dim={}\nnum_classes={}\ntask={}\nnum_splits={}\n",
                           d.num_nodes(), d.graph.num_edges(), d.features.cols(), d.num_classes,
                           task_name(d.task), d.splits.size());
  std::cout << homophily_csv(homophily_report(d));
  return 0;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed, bool parallel) {
  RunConfig c = load_run_config(path);
  if (seed) c.train.seeds = {*seed};
  if (parallel) c.train.parallel_seeds = true;
  return c;
}

int cmd_train(const std::string& config_path, const std::string& out_override,
              std::optional<std::uint64_t> seed, bool parallel) {
  RunConfig c = load_config(config_path, seed, parallel);
  if (!out_override.empty()) c.out = out_override;
  if (c.dataset.empty()) throw ConfigError("config key 'dataset' is required for train");
  Dataset d = load_dataset(c.dataset);
  const fs::path out = c.out;
  fs::create_directories(out);
  write_file(out / "config.resolved", format_run_config(c));
  std::ofstream log(out / "run.log", std::ios::app);
  log << timestamp() << " start train " << config_path << "\n";

  std::unique_ptr<Model> trained;
  TrainReport report = run_protocol(d, c.train, fs::path(c.dataset).filename().string(), &trained);
  write_file(out / "report.json", report.to_json());
  write_file(out / "report.csv", TrainReport::csv_header() + report.csv_row());
  save_checkpoint(*trained, out / "checkpoint.json");
  log << timestamp() << " done " << report.summary() << "\n";
  std::cout << fmt::format("{} {} {}: {}\n", report.model, report.dataset, report.metric, report.summary());
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, std::size_t split) {
  auto model = load_checkpoint(checkpoint);
  Dataset d = load_dataset(data);
  check_compatible(model->config(), d);
  if (split >= d.splits.size()) {
    throw ConfigError(fmt::format("split {} does not exist (dataset has {})", split, d.splits.size()));
  }
  const GraphContext ctx(d.graph);
  Tape tape;
  Rng unused(0);
  const Matrix logits = model->forward(tape, ctx, Tensor::constant(d.features), false, unused).value();
  const auto rows = mask_indices(d.splits[split].test);
  std::cout << fmt::format("{}={}\n", metric_name(d.task),
                           format_double(evaluate_metric(d.task, logits, d.labels, rows)));
  return 0;
}

DirectedGraph check_graph(const RunConfig& c) {
  Rng rng(c.check_seed);
  std::vector<Edge> edges;
  if (c.check_nodes > 1) {
    while (edges.size() < c.check_edges) {
      const auto u = static_cast<NodeId>(rng() % c.check_nodes);
      const auto v = static_cast<NodeId>(rng() % c.check_nodes);
      if (u != v) edges.emplace_back(u, v);
    }
  }
  return DirectedGraph(c.check_nodes, edges);
}

int cmd_polycheck(const std::string& config_path) {
  RunConfig c = load_run_config(config_path);
  const auto rows = degree_table(check_graph(c), c.train.model.hidden, c.train.model.heads, c.check_seed);
  std::cout << "model,degree,claim,within_claim\n";
  bool ok = true;
  for (const auto& r : rows) {
    const auto& m = r.measurement;
    std::cout << fmt::format("{},{},{},{}\n", r.model, m.resolved ? std::to_string(m.degree) : "unresolved",
                             m.claim, m.within_claim ? "true" : "false");
    ok = ok && m.within_claim;
  }
  if (!ok) throw NumericError("a measured degree exceeds its claim");
  return 0;
}

int cmd_gradcheck(const std::string& config_path) {
  RunConfig c = load_run_config(config_path);
  constexpr std::size_t kInputDim = 4, kClasses = 3;
  const DirectedGraph g = check_graph(c);
  Rng rng(c.check_seed);
  Matrix x(g.num_nodes(), kInputDim);
  for (double& v : x.values()) v = uniform(rng, -1.0, 1.0);
  std::vector<int> labels(g.num_nodes());
  for (int& y : labels) y = static_cast<int>(rng() % kClasses);
  ModelConfig mc = c.train.model;
  mc.input_dim = kInputDim;
  mc.output_dim = kClasses;
  auto model = make_model(mc);
  model->init_parameters(rng);
  GradCheckOptions options;
  options.max_entries = c.check_entries;
  const GradCheckResult r = gradient_check(*model, g, x, labels, options);
  std::cout << "parameter,max_relative_error\n";
  for (const auto& [name, err] : r.per_parameter) std::cout << fmt::format("{},{:.3e}\n", name, err);
  std::cout << fmt::format("max,{:.3e}\n", r.max_error);
  if (!(r.max_error < 1e-4)) throw NumericError(fmt::format("max relative error {:.3e} >= 1e-4", r.max_error));
  return 0;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const FormatError*>(&e)) return "format";
  if (dynamic_cast<const GraphError*>(&e)) return "graph";
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  return "runtime";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directed polynomial graph networks"};
  app.require_subcommand(1);

  std::string spec, out, dir, config, checkpoint, data;
  std::size_t split = 0;
  std::optional<std::uint64_t> seed_override;
  bool parallel = false;

  auto* dataset = app.add_subcommand("dataset", "Generate or inspect datasets");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Generate a dataset from a JSON spec");
  gen->add_option("--spec", spec, "GenSpec JSON file")->required();
  gen->add_option("--out", out, "Output container directory")->required();
  gen->add_option("--seed-override", seed_override, "Replace the spec seed");
  auto* inspect = dataset->add_subcommand("inspect", "Print manifest summary and homophily table");
  inspect->add_option("dir", dir, "Container directory")->required();

  auto* train = app.add_subcommand("train", "Train over the configured seeds");
  train->add_option("--config", config, "key=value run config")->required();
  train->add_option("--out", out, "Override the output directory");
  train->add_option("--seed-override", seed_override, "Train this single seed only");
  train->add_flag("--parallel-seeds", parallel, "Train seeds on parallel threads");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split's test mask");
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json")->required();
  eval->add_option("--data", data, "Container directory")->required();
  eval->add_option("--split", split, "Split id");

  auto* poly = app.add_subcommand("polycheck", "Measure polynomial degree under the frozen harness");
  poly->add_option("--config", config, "key=value run config")->required();

  auto* grad = app.add_subcommand("gradcheck", "Compare gradients with finite differences");
  grad->add_option("--config", config, "key=value run config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen) return cmd_dataset_gen(spec, out, seed_override);
    if (*inspect) return cmd_dataset_inspect(dir);
    if (*train) return cmd_train(config, out, seed_override, parallel);
    if (*eval) return cmd_eval(checkpoint, data, split);
    if (*poly) return cmd_polycheck(config);
    if (*grad) return cmd_gradcheck(config);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error[" << error_kind(e) << "]: " << msg << "\n";
    return 1;
  }
  return 1;
}
