#include "canonica/fields/scene_model.hpp"

#include <random>

namespace canonica::fields {

KeyValues to_kv(const ModelConfig& cfg) {
  KeyValues kv;
  kv.set("model.height", cfg.camera.height);
  kv.set("model.width", cfg.camera.width);
  kv.set("model.focal", cfg.camera.focal);
  kv.set("model.near", cfg.camera.near);
  kv.set("model.far", cfg.camera.far);
  kv.set("model.frames", cfg.frames);
  kv.set("model.field_pe_bands", cfg.field.pe_bands);
  kv.set("model.field_layers", cfg.field.layers);
  kv.set("model.field_width", cfg.field.width);
  kv.set("model.coupling_layers", cfg.mapping.coupling_layers);
  kv.set("model.latent_dim", cfg.mapping.latent_dim);
  kv.set("model.map_hidden_width", cfg.mapping.hidden_width);
  kv.set("model.map_hidden_layers", cfg.mapping.hidden_layers);
  kv.set("model.map_pe_bands", cfg.mapping.pe_bands);
  kv.set("model.scale_bound", cfg.mapping.scale_bound);
  kv.set("model.latent_init_std", cfg.mapping.latent_init_std);
  kv.set("model.init_seed", cfg.init_seed);
  return kv;
}

ModelConfig model_config_from_kv(const KeyValues& kv, const ModelConfig& base) {
  ModelConfig c = base;
  c.camera.height = static_cast<int>(kv.get_int("model.height", c.camera.height));
  c.camera.width = static_cast<int>(kv.get_int("model.width", c.camera.width));
  c.camera.focal = kv.get_double("model.focal", c.camera.focal);
  c.camera.near = kv.get_double("model.near", c.camera.near);
  c.camera.far = kv.get_double("model.far", c.camera.far);
  c.frames = static_cast<int>(kv.get_int("model.frames", c.frames));
  c.field.pe_bands = static_cast<int>(kv.get_int("model.field_pe_bands", c.field.pe_bands));
  c.field.layers = static_cast<int>(kv.get_int("model.field_layers", c.field.layers));
  c.field.width = static_cast<int>(kv.get_int("model.field_width", c.field.width));
  c.mapping.coupling_layers =
      static_cast<int>(kv.get_int("model.coupling_layers", c.mapping.coupling_layers));
  c.mapping.latent_dim = static_cast<int>(kv.get_int("model.latent_dim", c.mapping.latent_dim));
  c.mapping.hidden_width =
      static_cast<int>(kv.get_int("model.map_hidden_width", c.mapping.hidden_width));
  c.mapping.hidden_layers =
      static_cast<int>(kv.get_int("model.map_hidden_layers", c.mapping.hidden_layers));
  c.mapping.pe_bands = static_cast<int>(kv.get_int("model.map_pe_bands", c.mapping.pe_bands));
  c.mapping.scale_bound = kv.get_double("model.scale_bound", c.mapping.scale_bound);
  c.mapping.latent_init_std = kv.get_double("model.latent_init_std", c.mapping.latent_init_std);
  c.init_seed = kv.get_uint("model.init_seed", c.init_seed);
  return c;
}

SceneModel SceneModel::create(const ModelConfig& cfg) {
  render::validate(cfg.camera);
  SceneModel m;
  m.config = cfg;
  std::mt19937_64 rng(cfg.init_seed);
  m.field = CanonicalField::create(m.params, cfg.field, rng);
  m.mapping = MappingNetwork::create(m.params, cfg.mapping, cfg.frames, rng);
  return m;
}

}  // namespace canonica::fields
