#pragma once

#include <cstdint>

#include "canonica/autodiff/param_store.hpp"
#include "canonica/fields/canonical_field.hpp"
#include "canonica/fields/mapping_network.hpp"
#include "canonica/kv.hpp"
#include "canonica/render/camera.hpp"

namespace canonica::fields {

struct ModelConfig {
  render::Intrinsics camera;
  int frames = 8;
  FieldConfig field;
  MappingConfig mapping;
  std::uint64_t init_seed = 0;
};

KeyValues to_kv(const ModelConfig& cfg);
// Reads `model.*` keys, falling back to `base` for absent ones.
ModelConfig model_config_from_kv(const KeyValues& kv, const ModelConfig& base = {});

// Everything learned for one clip: canonical field, per-frame mappings and
// the optimizer state that travels with them.
struct SceneModel {
  ModelConfig config;
  ad::ParamStore params;
  CanonicalField field;
  MappingNetwork mapping;
  std::int64_t iteration = 0;

  static SceneModel create(const ModelConfig& cfg);
};

}  // namespace canonica::fields
