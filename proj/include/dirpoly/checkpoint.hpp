#pragma once

#include <filesystem>
#include <memory>

#include "dirpoly/dataset.hpp"
#include "dirpoly/model.hpp"

namespace dirpoly {

// <path> holds a JSON manifest (architecture, parameter names and shapes);
// <path>.bin holds the parameter values as little-endian float64 in manifest order.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path);

// Throws ConfigError when the model cannot consume the dataset.
void check_compatible(const ModelConfig& config, const Dataset& dataset);

}  // namespace dirpoly
