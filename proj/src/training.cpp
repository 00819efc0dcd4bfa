#include "dirpoly/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "dirpoly/error.hpp"

namespace dirpoly {

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamOptions& o) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw ShapeError("adam: parameter " + std::to_string(i) + " has shape " +
                       params[i]->shape_string() + " but gradient " + grads[i].shape_string());
    }
  }
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam: state holds " + std::to_string(state.m.size()) + " moments");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  const double decay = 1.0 - o.learning_rate * o.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i]->values();
    const auto& g = grads[i].values();
    auto& m = state.m[i].values();
    auto& v = state.v[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (o.weight_decay != 0.0) p[k] *= decay;
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
      p[k] -= o.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + o.epsilon);
    }
  }
}

namespace {

void check_rows(std::span<const NodeId> rows, std::size_t n, std::size_t labels) {
  if (rows.empty()) throw Error("metric over an empty mask");
  if (labels != n) throw ShapeError("labels do not match score rows");
  for (NodeId r : rows) {
    if (r >= n) throw ShapeError("mask row " + std::to_string(r) + " out of range");
  }
}

}  // namespace

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const NodeId> rows) {
  check_rows(rows, logits.rows(), labels.size());
  std::size_t hits = 0;
  for (NodeId r : rows) {
    auto row = logits.row(r);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[r]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double roc_auc(const Matrix& scores, std::span<const int> labels, std::span<const NodeId> rows) {
  check_rows(rows, scores.rows(), labels.size());
  std::vector<std::pair<double, int>> s;
  s.reserve(rows.size());
  for (NodeId r : rows) s.emplace_back(scores(r, 0), labels[r] != 0);
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j].first == s[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (s[k].second) {
        pos_rank_sum += midrank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = s.size() - pos;
  if (pos == 0 || neg == 0) throw Error("AUC undefined: mask contains a single class");
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double evaluate_metric(Task task, const Matrix& logits, std::span<const int> labels,
                       std::span<const NodeId> rows) {
  return task == Task::kBinaryRocAuc ? roc_auc(logits, labels, rows)
                                     : accuracy(logits, labels, rows);
}

std::string_view metric_name(Task task) {
  return task == Task::kBinaryRocAuc ? "roc_auc" : "accuracy";
}

void TrainConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (patience > max_epochs) {
    throw ConfigError("patience " + std::to_string(patience) + " exceeds max_epochs " +
                      std::to_string(max_epochs));
  }
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (adam.weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (model.hidden == 0 || model.layers == 0 || model.heads == 0) {
    throw ConfigError("hidden, layers and heads must be positive");
  }
  if (model.hidden % model.heads != 0) {
    throw ConfigError("hidden " + std::to_string(model.hidden) + " is not divisible by " +
                      std::to_string(model.heads) + " heads");
  }
}

ModelConfig fit_model_config(ModelConfig config, const Dataset& dataset) {
  config.input_dim = dataset.features.cols();
  config.output_dim = dataset.task == Task::kBinaryRocAuc ? 1 : static_cast<std::size_t>(dataset.num_classes);
  return config;
}

SeedRecord train_one(const Dataset& dataset, std::size_t split, const TrainConfig& config,
                     std::uint64_t seed, std::unique_ptr<Model>* trained) {
  config.validate();
  if (split >= dataset.splits.size()) {
    throw ConfigError("split " + std::to_string(split) + " does not exist (dataset has " +
                      std::to_string(dataset.splits.size()) + ")");
  }
  const Split& sp = dataset.splits[split];
  const auto train_rows = mask_indices(sp.train);
  const auto val_rows = mask_indices(sp.val);
  const auto test_rows = mask_indices(sp.test);
  if (train_rows.empty() || val_rows.empty() || test_rows.empty()) {
    throw ConfigError("split " + std::to_string(split) + " has an empty partition");
  }

  auto model = make_model(fit_model_config(config.model, dataset));
  Rng rng(seed);
  model->init_parameters(rng);
  const GraphContext ctx(dataset.graph);
  const Tensor x = Tensor::constant(dataset.features);
  auto params = model->parameters();
  std::vector<Matrix*> values;
  for (auto& p : params) values.push_back(&p.tensor.mutable_value());
  std::vector<Matrix> grads(params.size());
  AdamState adam;

  SeedRecord rec;
  rec.seed = seed;
  rec.split = split;
  std::vector<Matrix> best;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double loss_value;
    {
      Tape tape;
      for (auto& p : params) p.tensor.zero_grad();
      Tensor logits = model->forward(tape, ctx, x, true, rng);
      Tensor loss = dataset.task == Task::kBinaryRocAuc
                        ? tape.bce_logits(logits, dataset.labels, train_rows)
                        : tape.cross_entropy_logits(logits, dataset.labels, train_rows);
      loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           " (seed " + std::to_string(seed) + ")");
      }
      tape.backward(loss);
      for (std::size_t i = 0; i < params.size(); ++i) grads[i] = params[i].tensor.grad();
    }
    adam_step(values, grads, adam, config.adam);
    rec.loss_curve.push_back(loss_value);
    rec.epochs_run = epoch;

    Tape tape;
    const Matrix logits = model->forward(tape, ctx, x, false, rng).value();
    const double val = evaluate_metric(dataset.task, logits, dataset.labels, val_rows);
    if (best.empty() || val > rec.best_val) {
      rec.best_val = val;
      rec.best_epoch = epoch;
      rec.test = evaluate_metric(dataset.task, logits, dataset.labels, test_rows);
      best = model->snapshot();
      stale = 0;
    } else {
      ++stale;
    }
    if (stale >= config.patience) break;
  }
  model->restore(best);
  if (trained) *trained = std::move(model);
  return rec;
}

std::string TrainReport::summary() const {
  return fmt::format("{:.2f} ± {:.2f}", 100.0 * mean, 100.0 * std);
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["dataset"] = dataset;
  j["metric"] = metric;
  j["mean"] = mean;
  j["std"] = std;
  j["summary"] = summary();
  auto& arr = j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json e;
    e["seed"] = r.seed;
    e["split"] = r.split;
    e["best_epoch"] = r.best_epoch;
    e["epochs_run"] = r.epochs_run;
    e["best_val"] = r.best_val;
    e["test"] = r.test;
    e["loss_curve"] = r.loss_curve;
    arr.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string TrainReport::csv_header() { return "model,dataset,metric,mean,std,seeds\n"; }

std::string TrainReport::csv_row() const {
  return fmt::format("{},{},{},{},{},{}\n", model, dataset, metric, format_double(mean),
                     format_double(std), runs.size());
}

void aggregate(TrainReport& report) {
  const std::size_t n = report.runs.size();
  if (n == 0) throw Error("cannot aggregate an empty report");
  double sum = 0.0;
  for (const auto& r : report.runs) sum += r.test;
  report.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& r : report.runs) ss += (r.test - report.mean) * (r.test - report.mean);
  report.std = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
}

TrainReport run_protocol(const Dataset& dataset, const TrainConfig& config,
                         const std::string& dataset_name, std::unique_ptr<Model>* trained) {
  config.validate();
  if (dataset.splits.empty()) throw ConfigError("dataset has no splits");
  const std::size_t n = config.seeds.size();
  TrainReport report;
  report.model = std::string(model_kind_name(config.model.kind));
  report.dataset = dataset_name;
  report.metric = std::string(metric_name(dataset.task));
  report.runs.resize(n);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t k) {
    try {
      report.runs[k] = train_one(dataset, k % dataset.splits.size(), config, config.seeds[k],
                                 k == 0 ? trained : nullptr);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (config.parallel_seeds && n > 1) {
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < n; k += workers) run(k);
      });
    }
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t k = 0; k < n; ++k) run(k);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  aggregate(report);
  return report;
}

}  // namespace dirpoly
