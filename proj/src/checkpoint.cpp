#include "dirpoly/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dirpoly/error.hpp"

namespace dirpoly {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {


void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_le(const unsigned char* b) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

fs::path bin_path(const fs::path& path) { return fs::path(path.string() + ".bin"); }

ordered_json config_json(const ModelConfig& c) {
  ordered_json j;
  j["architecture"] = model_kind_name(c.kind);
  j["input_dim"] = c.input_dim;
  j["output_dim"] = c.output_dim;
  j["hidden"] = c.hidden;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["sigma"] = activation_name(c.sigma);
  j["dropout"] = c.dropout;
  j["direction"] = direction_name(c.direction);
  return j;
}

}  // namespace

void save_checkpoint(const Model& model, const fs::path& path) {
  ordered_json j;
  j["model"] = config_json(model.config());
  auto& params = j["parameters"] = ordered_json::array();
  std::ofstream bin(bin_path(path), std::ios::binary);
  if (!bin) throw Error("cannot write " + bin_path(path).string());
  for (const auto& p : model.parameters()) {
    const Matrix& v = p.tensor.value();
    params.push_back({{"name", p.name}, {"rows", v.rows()}, {"cols", v.cols()}});
    for (double x : v.values()) put_le(bin, x);
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::unique_ptr<Model> load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("missing checkpoint " + path.string());
  ordered_json j;
  ModelConfig c;
  try {
    j = ordered_json::parse(in);
    const auto& m = j.at("model");
    c.kind = parse_model_kind(m.at("architecture").get<std::string>());
    c.input_dim = m.at("input_dim").get<std::size_t>();
    c.output_dim = m.at("output_dim").get<std::size_t>();
    c.hidden = m.at("hidden").get<std::size_t>();
    c.layers = m.at("layers").get<std::size_t>();
    c.heads = m.at("heads").get<std::size_t>();
    c.sigma = parse_activation(m.at("sigma").get<std::string>());
    c.dropout = m.at("dropout").get<double>();
    c.direction = parse_direction(m.at("direction").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path.string() + ": " + e.what());
  }
  auto model = make_model(c);
  const auto params = model->parameters();
  const auto& listed = j.at("parameters");
  if (listed.size() != params.size()) {
    throw ConfigError("checkpoint lists " + std::to_string(listed.size()) +
                      " parameters but the architecture has " + std::to_string(params.size()));
  }
  std::ifstream bin(bin_path(path), std::ios::binary);
  if (!bin) throw FormatError("missing checkpoint data " + bin_path(path).string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), {});
  std::size_t offset = 0;
  std::vector<Matrix> values;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& shape = params[i].tensor.value();
    const auto name = listed[i].at("name").get<std::string>();
    const auto rows = listed[i].at("rows").get<std::size_t>();
    const auto cols = listed[i].at("cols").get<std::size_t>();
    if (name != params[i].name || rows != shape.rows() || cols != shape.cols()) {
      throw ConfigError("checkpoint parameter " + name + " (" + std::to_string(rows) + "x" +
                        std::to_string(cols) + ") does not match architecture parameter " +
                        params[i].name + " " + shape.shape_string());
    }
    Matrix v(rows, cols);
    if (offset + 8 * v.size() > bytes.size()) throw FormatError("checkpoint data is truncated");
    for (double& x : v.values()) {
      x = get_le(bytes.data() + offset);
      offset += 8;
    }
    values.push_back(std::move(v));
  }
  if (offset != bytes.size()) throw FormatError("checkpoint data has trailing bytes");
  model->restore(values);
  return model;
}

void check_compatible(const ModelConfig& c, const Dataset& d) {
  const std::size_t out = d.task == Task::kBinaryRocAuc ? 1 : static_cast<std::size_t>(d.num_classes);
  if (c.input_dim != d.features.cols() || c.output_dim != out) {
    throw ConfigError("checkpoint architecture expects " + std::to_string(c.input_dim) +
                      " features and " + std::to_string(c.output_dim) + " outputs; dataset has " +
                      std::to_string(d.features.cols()) + " and " + std::to_string(out));
  }
}

}  // namespace dirpoly
