#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcpn/trainer.hpp"

namespace rcpn {

// Flat key=value configuration; command-line flags (kebab-case) override
// config-file lines which override defaults.
struct CliConfig {
  std::string command;  // synth | train | infer | eval | diag

  std::string out;
  std::string images_dir;
  std::string labels_dir;
  std::string features_dir;
  std::string pred_dir;
  std::string model;

  std::uint64_t seed = 42;
  int classes = 0;  // 0 = infer from the labels
  int void_value = 255;

  std::string superpixel_method = "grid";  // grid | slic
  int superpixel_count = 100;
  double slic_compactness = 10.0;
  int slic_iters = 10;

  int d_sem = 60;
  std::string activation = "tanh";  // tanh | relu
  int r_train = 4;
  int r_test = 20;
  int epochs = 10;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double clip_norm = 5.0;
  std::string loss_mode = "pure_node";  // rcpn | pure_node
  bool balanced = false;
  std::string tree_policy = "balanced";  // balanced | uniform
  bool plain_nn = false;

  bool mrf = false;
  int mrf_k = 9;
  bool overlay = false;
  std::string iou_subset;  // comma-separated class indices, empty = off

  int synth_count = 10;
  int synth_cells_x = 4;
  int synth_cells_y = 4;
  int synth_cell_size = 8;
  int synth_classes = 4;
  double synth_ambiguity = 0.3;
  double synth_noise = 0.03;

  TrainConfig train_config() const;
  Activation activation_kind() const;
  LossMode loss_mode_kind() const;
  TreePolicy tree_policy_kind() const;
};

// argv without the program name. Throws ConfigError on unknown keys,
// unparsable values, or missing required fields.
CliConfig parse_config(const std::vector<std::string>& args);

// `key = value` lines for every effective setting, parseable back.
std::string resolved_config(const CliConfig& cfg);

}  // namespace rcpn
