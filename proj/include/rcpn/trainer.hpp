#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcpn/net.hpp"

namespace rcpn {

struct TrainConfig {
  int r_train = 4;
  int r_test = 20;
  int epochs = 10;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 42;
  LossMode mode = LossMode::PureNode;
  bool balanced = false;
  TreePolicy policy = TreePolicy::Balanced;
  bool plain_nn = false;  // context-free baseline (mapper + categorizer)
  int d_sem = 60;
  Activation act = Activation::Tanh;
};

struct DiagnosticsRow {
  int iteration = 0;
  double loss = 0.0;
  // sqrt(raw squared gradient norm / parameter count) per module
  double g_sem = 0.0, g_com = 0.0, g_dec = 0.0, g_cat = 0.0;
};

struct TrainResult {
  RcpnParams params;
  std::vector<DiagnosticsRow> diagnostics;
  std::vector<double> epoch_loss;
};

using Dataset = std::vector<SuperpixelGraph>;

// Inverse super-pixel-frequency weights rescaled to mean 1 over present
// classes; absent classes get 0. Unbalanced mode returns all ones.
Vec class_weights(const Dataset& dataset, int classes, bool balanced);

struct Velocity {
  Gradients v;
};

// Momentum SGD with global-norm clipping and weight decay.
void sgd_step(RcpnParams& params, const Gradients& grads, Velocity& velocity,
              const TrainConfig& config);

DiagnosticsRow gradient_strengths(const Gradients& grads);

TrainResult train(const Dataset& dataset, const TrainConfig& config, int d_vis, int classes);

void save_checkpoint(const RcpnParams& params, const std::string& path);
RcpnParams load_checkpoint(const std::string& path);

// Shape check against a session's expected dimensions.
void check_checkpoint_dims(const RcpnParams& params, int d_vis, int d_sem, int classes);

}  // namespace rcpn
