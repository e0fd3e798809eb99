#pragma once

#include <random>

#include "canonica/fields/scene_model.hpp"

namespace canonica::testing {

inline fields::ModelConfig small_model_config(int frames = 4, int size = 16) {
  fields::ModelConfig cfg;
  cfg.camera.height = size;
  cfg.camera.width = size;
  cfg.frames = frames;
  cfg.field.layers = 3;
  cfg.field.width = 16;
  cfg.field.pe_bands = 2;
  cfg.mapping.latent_dim = 4;
  cfg.mapping.hidden_width = 8;
  cfg.mapping.hidden_layers = 1;
  cfg.mapping.pe_bands = 2;
  return cfg;
}

// Adds N(0, std) noise to every parameter, including zero-initialized ones.
inline void perturb(fields::SceneModel& model, double std, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std);
  for (auto& p : model.params.all()) {
    for (Eigen::Index k = 0; k < p.value.size(); ++k) p.value(k) += n(rng);
  }
}

}  // namespace canonica::testing
