#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dirpoly/training.hpp"

namespace dirpoly {

// Flat key=value run description. Blank lines and lines starting with '#'
// are ignored; unknown or repeated keys are errors.
//
//   key             default
//   model           dir-poly        gcn | gat | poly | dir-poly
//   dataset         (none)          container directory
//   out             run             output directory
//   learning_rate   0.003
//   weight_decay    0
//   max_epochs      1000
//   patience        100
//   seeds           0,1,2,3,4,5,6,7,8,9
//   parallel_seeds  false
//   hidden          64
//   layers          3
//   heads           1
//   dropout         0.2
//   sigma           relu            relu | sigmoid | identity
//   direction       in              in | out (single-direction convolutions)
//   check_nodes     12              random digraph used by gradcheck / polycheck
//   check_edges     36
//   check_seed      0
//   check_entries   64              entries per parameter probed by gradcheck (0 = all)
struct RunConfig {
  TrainConfig train;
  std::string dataset;
  std::string out = "run";
  std::size_t check_nodes = 12;
  std::size_t check_edges = 36;
  std::uint64_t check_seed = 0;
  std::size_t check_entries = 64;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);
// Every key with its resolved value, in the order documented above.
std::string format_run_config(const RunConfig& config);

}  // namespace dirpoly
