#include "dirpoly/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dirpoly/dataset.hpp"
#include "dirpoly/error.hpp"

namespace dirpoly {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key " + std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    throw ConfigError("config key " + std::string(key) + ": expected a number, got '" +
                      std::string(v) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config key " + std::string(key) + ": expected true or false");
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"model", [](RunConfig& c, auto, auto v) { c.train.model.kind = parse_model_kind(v); }},
      {"dataset", [](RunConfig& c, auto, auto v) { c.dataset = std::string(v); }},
      {"out", [](RunConfig& c, auto, auto v) { c.out = std::string(v); }},
      {"learning_rate", [](RunConfig& c, auto k, auto v) { c.train.adam.learning_rate = parse_real(k, v); }},
      {"weight_decay", [](RunConfig& c, auto k, auto v) { c.train.adam.weight_decay = parse_real(k, v); }},
      {"max_epochs", [](RunConfig& c, auto k, auto v) { c.train.max_epochs = parse_unsigned<std::size_t>(k, v); }},
      {"patience", [](RunConfig& c, auto k, auto v) { c.train.patience = parse_unsigned<std::size_t>(k, v); }},
      {"seeds",
       [](RunConfig& c, auto k, auto v) {
         c.train.seeds.clear();
         std::size_t start = 0;
         while (start <= v.size()) {
           const auto comma = v.find(',', start);
           const auto item = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
           c.train.seeds.push_back(parse_unsigned<std::uint64_t>(k, item));
           if (comma == std::string_view::npos) break;
           start = comma + 1;
         }
       }},
      {"parallel_seeds", [](RunConfig& c, auto k, auto v) { c.train.parallel_seeds = parse_bool(k, v); }},
      {"hidden", [](RunConfig& c, auto k, auto v) { c.train.model.hidden = parse_unsigned<std::size_t>(k, v); }},
      {"layers", [](RunConfig& c, auto k, auto v) { c.train.model.layers = parse_unsigned<std::size_t>(k, v); }},
      {"heads", [](RunConfig& c, auto k, auto v) { c.train.model.heads = parse_unsigned<std::size_t>(k, v); }},
      {"dropout", [](RunConfig& c, auto k, auto v) { c.train.model.dropout = parse_real(k, v); }},
      {"sigma", [](RunConfig& c, auto, auto v) { c.train.model.sigma = parse_activation(v); }},
      {"direction", [](RunConfig& c, auto, auto v) { c.train.model.direction = parse_direction(v); }},
      {"check_nodes", [](RunConfig& c, auto k, auto v) { c.check_nodes = parse_unsigned<std::size_t>(k, v); }},
      {"check_edges", [](RunConfig& c, auto k, auto v) { c.check_edges = parse_unsigned<std::size_t>(k, v); }},
      {"check_seed", [](RunConfig& c, auto k, auto v) { c.check_seed = parse_unsigned<std::uint64_t>(k, v); }},
      {"check_entries", [](RunConfig& c, auto k, auto v) { c.check_entries = parse_unsigned<std::size_t>(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  RunConfig c;
  c.train.model.kind = ModelKind::kDirPoly;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = setters();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("config key '" + std::string(key) + "' given twice");
    }
    it->second(c, key, value);
  }
  c.train.validate();
  if (c.check_nodes == 0) throw ConfigError("check_nodes must be positive");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string format_run_config(const RunConfig& c) {
  const auto& m = c.train.model;
  std::string seeds;
  for (std::size_t i = 0; i < c.train.seeds.size(); ++i) {
    if (i) seeds += ",";
    seeds += std::to_string(c.train.seeds[i]);
  }
  std::ostringstream out;
  out << "model=" << model_kind_name(m.kind) << "\n"
      << "dataset=" << c.dataset << "\n"
      << "out=" << c.out << "\n"
      << "learning_rate=" << format_double(c.train.adam.learning_rate) << "\n"
      << "weight_decay=" << format_double(c.train.adam.weight_decay) << "\n"
      << "max_epochs=" << c.train.max_epochs << "\n"
      << "patience=" << c.train.patience << "\n"
      << "seeds=" << seeds << "\n"
      << "parallel_seeds=" << (c.train.parallel_seeds ? "true" : "false") << "\n"
      << "hidden=" << m.hidden << "\n"
      << "layers=" << m.layers << "\n"
      << "heads=" << m.heads << "\n"
      << "dropout=" << format_double(m.dropout) << "\n"
      << "sigma=" << activation_name(m.sigma) << "\n"
      << "direction=" << direction_name(m.direction) << "\n"
      << "check_nodes=" << c.check_nodes << "\n"
      << "check_edges=" << c.check_edges << "\n"
      << "check_seed=" << c.check_seed << "\n"
      << "check_entries=" << c.check_entries << "\n";
  return out.str();
}

}  // namespace dirpoly
