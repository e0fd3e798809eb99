#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "canonica/fields/scene_model.hpp"
#include "canonica/scene/video_clip.hpp"
#include "canonica/train/config.hpp"

namespace canonica::train {

struct LossRecord {
  std::int64_t iteration = 0;
  double flow = 0.0;
  double color = 0.0;
  double other = 0.0;
  double total = 0.0;
};

struct TrainHooks {
  // Called every checkpoint_every steps with the model after the update.
  std::function<void(const fields::SceneModel&)> checkpoint;
  std::function<void(const LossRecord&)> log;
};

struct TrainResult {
  fields::SceneModel model;
  std::vector<LossRecord> history;
};

// Model config for a clip: cfg.model with the clip's geometry and frame count.
fields::ModelConfig model_config_for(const scene::VideoClip& clip, const TrainConfig& cfg);

// Runs cfg.iterations steps in total; a resumed model continues from its
// stored iteration. Step k draws its batch and sample jitter from a
// generator seeded with (seed, k), so a resumed run matches an
// uninterrupted one. Throws NumericError on a non-finite loss before the
// update is applied.
TrainResult train(const scene::VideoClip& clip, const TrainConfig& cfg,
                  std::optional<fields::SceneModel> resume = std::nullopt,
                  const TrainHooks& hooks = {});

std::mt19937_64 step_rng(std::uint64_t seed, std::int64_t iteration);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history);
std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path);

}  // namespace canonica::train
