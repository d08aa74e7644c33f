#pragma once

#include <string>

#include "mbcnn/losses.hpp"
#include "mbcnn/model.hpp"
#include "mbcnn/train.hpp"

namespace mbcnn {

std::string arch_to_json(const ArchConfig& cfg);
ArchConfig arch_from_json(const std::string& text);

// Top-level run description. Data comes either from directories of paired
// images or from the procedural generator.
struct RunConfig {
  ArchConfig arch;
  TrainConfig train;
  std::string train_dir;
  std::string val_dir;
  int procedural_n = 0;      // > 0 selects procedural data
  int procedural_val_n = 8;
  int procedural_size = 128;
  std::string out_dir = "out";
};

// Strict parse: unknown keys anywhere are an error. Accepted shape:
// {
//   "preset": "mbcnn" | "arch": {"p","n_g","n_d","k","dilations"},
//   "loss":  {"variant","lambda"},
//   "train": {"lr","batch","patch","epochs_max","seed","stage2"},
//   "data":  {"train_dir","val_dir"} | {"procedural_n","val_n","size"},
//   "out_dir": "..."
// }
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace mbcnn
