#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dirpoly/dataset.hpp"
#include "dirpoly/model.hpp"

namespace dirpoly {

struct AdamOptions {
  double learning_rate = 3e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t step = 0;
};

// One Adam update with decoupled weight decay (p *= 1 - lr*wd first).
// Moments are allocated on the first call.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamOptions& options);

// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const NodeId> rows);

// Probability that a positive outranks a negative, ties counting one half.
// Uses column 0 of scores. Throws Error("AUC undefined ...") without both classes.
double roc_auc(const Matrix& scores, std::span<const int> labels, std::span<const NodeId> rows);

double evaluate_metric(Task task, const Matrix& logits, std::span<const int> labels,
                       std::span<const NodeId> rows);
std::string_view metric_name(Task task);

struct TrainConfig {
  ModelConfig model;
  AdamOptions adam;
  std::size_t max_epochs = 1000;
  std::size_t patience = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  bool parallel_seeds = false;

  void validate() const;
};

// Model dimensions implied by a dataset: input = feature_dim, output = C (or 1 for binary).
ModelConfig fit_model_config(ModelConfig config, const Dataset& dataset);

struct SeedRecord {
  std::uint64_t seed = 0;
  std::size_t split = 0;
  std::size_t best_epoch = 0;  // 1-based
  std::size_t epochs_run = 0;
  double best_val = 0.0;
  double test = 0.0;
  std::vector<double> loss_curve;
};

// Full-batch training from a seeded initialization; keeps the best-validation
// parameters. When `trained` is non-null it receives the restored model.
SeedRecord train_one(const Dataset& dataset, std::size_t split, const TrainConfig& config,
                     std::uint64_t seed, std::unique_ptr<Model>* trained = nullptr);

struct TrainReport {
  std::string model;
  std::string dataset;
  std::string metric;
  std::vector<SeedRecord> runs;
  double mean = 0.0;  // of test metric, as a fraction
  double std = 0.0;   // sample standard deviation, 0 for one run

  // "mm.mm ± s.ss" in percent.
  std::string summary() const;
  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

void aggregate(TrainReport& report);

// Seed k trains on split k mod num_splits. Runs are joined in seed order.
// `trained` (optional) receives the model of the first seed.
TrainReport run_protocol(const Dataset& dataset, const TrainConfig& config,
                         const std::string& dataset_name,
                         std::unique_ptr<Model>* trained = nullptr);

}  // namespace dirpoly
