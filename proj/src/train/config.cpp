#include "canonica/train/config.hpp"

#include "canonica/errors.hpp"

namespace canonica::train {

void validate(const TrainConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("train: ") + what);
  };
  require(cfg.batch_correspondences >= 1, "batch_correspondences must be >= 1");
  require(cfg.pairs_per_batch >= 1, "pairs_per_batch must be >= 1");
  require(cfg.n_samples >= 1, "n_samples must be >= 1");
  require(cfg.lr_color > 0.0, "lr_color must be > 0");
  require(cfg.lr_flow > 0.0, "lr_flow must be > 0");
  require(cfg.lambda >= 0.0, "lambda must be >= 0");
  require(cfg.w_class >= 1.0, "w_class must be >= 1");
  require(cfg.iterations >= 0, "iterations must be >= 0");
  require(cfg.smooth_weight >= 0.0 && cfg.entropy_weight >= 0.0, "regularizer weights must be >= 0");
  require(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0, "adam_beta1 must be in [0, 1)");
  require(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0, "adam_beta2 must be in [0, 1)");
  require(cfg.adam_eps > 0.0, "adam_eps must be > 0");
  require(cfg.log_every >= 1, "log_every must be >= 1");
  require(cfg.checkpoint_every >= 0, "checkpoint_every must be >= 0");
}

KeyValues to_kv(const TrainConfig& cfg) {
  KeyValues kv;
  kv.set("train.batch_correspondences", cfg.batch_correspondences);
  kv.set("train.pairs_per_batch", cfg.pairs_per_batch);
  kv.set("train.n_samples", cfg.n_samples);
  kv.set("train.lr_color", cfg.lr_color);
  kv.set("train.lr_flow", cfg.lr_flow);
  kv.set("train.lambda", cfg.lambda);
  kv.set("train.w_class", cfg.w_class);
  kv.set("train.iterations", cfg.iterations);
  kv.set("train.seed", cfg.seed);
  kv.set("train.smooth_weight", cfg.smooth_weight);
  kv.set("train.entropy_weight", cfg.entropy_weight);
  kv.set("train.adam_beta1", cfg.adam_beta1);
  kv.set("train.adam_beta2", cfg.adam_beta2);
  kv.set("train.adam_eps", cfg.adam_eps);
  kv.set("train.log_every", cfg.log_every);
  kv.set("train.checkpoint_every", cfg.checkpoint_every);
  std::string labels;
  for (const auto& l : cfg.instrument_labels) labels += (labels.empty() ? "" : ",") + l;
  kv.set("train.instrument_labels", labels);
  kv.merge(fields::to_kv(cfg.model));
  return kv;
}

TrainConfig train_config_from_kv(const KeyValues& kv, const TrainConfig& base) {
  TrainConfig c = base;
  c.batch_correspondences =
      static_cast<int>(kv.get_int("train.batch_correspondences", c.batch_correspondences));
  c.pairs_per_batch = static_cast<int>(kv.get_int("train.pairs_per_batch", c.pairs_per_batch));
  c.n_samples = static_cast<int>(kv.get_int("train.n_samples", c.n_samples));
  c.lr_color = kv.get_double("train.lr_color", c.lr_color);
  c.lr_flow = kv.get_double("train.lr_flow", c.lr_flow);
  c.lambda = kv.get_double("train.lambda", c.lambda);
  c.w_class = kv.get_double("train.w_class", c.w_class);
  c.iterations = static_cast<int>(kv.get_int("train.iterations", c.iterations));
  c.seed = kv.get_uint("train.seed", c.seed);
  c.smooth_weight = kv.get_double("train.smooth_weight", c.smooth_weight);
  c.entropy_weight = kv.get_double("train.entropy_weight", c.entropy_weight);
  c.adam_beta1 = kv.get_double("train.adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("train.adam_beta2", c.adam_beta2);
  c.adam_eps = kv.get_double("train.adam_eps", c.adam_eps);
  c.log_every = static_cast<int>(kv.get_int("train.log_every", c.log_every));
  c.checkpoint_every = static_cast<int>(kv.get_int("train.checkpoint_every", c.checkpoint_every));
  c.instrument_labels = kv.get_strings("train.instrument_labels", c.instrument_labels);
  c.model = fields::model_config_from_kv(kv, c.model);
  return c;
}

TrainConfig desk_train_config() {
  TrainConfig c;
  c.batch_correspondences = 128;
  c.pairs_per_batch = 8;
  c.n_samples = 16;
  c.lr_color = 3e-3;
  c.lr_flow = 3e-3;
  c.model.field.layers = 4;
  c.model.field.width = 64;
  c.model.field.pe_bands = 4;
  c.model.mapping.latent_dim = 16;
  c.model.mapping.hidden_width = 32;
  c.model.mapping.hidden_layers = 2;
  c.model.mapping.pe_bands = 3;
  return c;
}

}  // namespace canonica::train
