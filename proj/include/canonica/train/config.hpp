#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canonica/fields/scene_model.hpp"
#include "canonica/kv.hpp"

namespace canonica::train {

struct TrainConfig {
  int batch_correspondences = 256;
  int pairs_per_batch = 8;
  int n_samples = 32;
  double lr_color = 3e-4;  // base Adam rate
  double lr_flow = 1e-4;   // realized as a flow-loss scale of lr_flow / lr_color
  double lambda = 1.0;     // color-loss weight
  double w_class = 1.0;
  int iterations = 10000;
  std::uint64_t seed = 0;
  double smooth_weight = 1e-3;
  double entropy_weight = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int log_every = 100;
  int checkpoint_every = 0;  // 0 = final checkpoint only
  std::vector<std::string> instrument_labels{"instrument"};
  // Geometry and frame count are taken from the clip at train time.
  fields::ModelConfig model;

  double flow_scale() const { return lr_flow / lr_color; }
};

// Throws ConfigError naming the offending field.
void validate(const TrainConfig& cfg);

// Keys `train.*` plus the `model.*` keys of the embedded ModelConfig.
KeyValues to_kv(const TrainConfig& cfg);
TrainConfig train_config_from_kv(const KeyValues& kv, const TrainConfig& base = {});

// Small networks and batches sized for minutes of single-core training.
TrainConfig desk_train_config();

}  // namespace canonica::train
