#include "canonica/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "canonica/errors.hpp"
#include "canonica/kv.hpp"
#include "canonica/render/renderer.hpp"
#include "canonica/train/batch.hpp"
#include "canonica/train/losses.hpp"

namespace canonica::train {

fields::ModelConfig model_config_for(const scene::VideoClip& clip, const TrainConfig& cfg) {
  fields::ModelConfig m = cfg.model;
  m.camera.height = clip.height();
  m.camera.width = clip.width();
  m.frames = clip.frame_count();
  return m;
}

std::mt19937_64 step_rng(std::uint64_t seed, std::int64_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32)};
  return std::mt19937_64(seq);
}

TrainResult train(const scene::VideoClip& clip, const TrainConfig& cfg,
                  std::optional<fields::SceneModel> resume, const TrainHooks& hooks) {
  validate(cfg);
  clip.validate();
  const fields::ModelConfig mcfg = model_config_for(clip, cfg);
  TrainResult result{resume ? std::move(*resume) : fields::SceneModel::create(mcfg), {}};
  fields::SceneModel& model = result.model;
  if (model.config.frames != clip.frame_count() || model.config.camera.height != clip.height() ||
      model.config.camera.width != clip.width()) {
    throw ConfigError("checkpoint geometry (" + std::to_string(model.config.frames) + " frames, " +
                      std::to_string(model.config.camera.height) + "x" +
                      std::to_string(model.config.camera.width) + ") does not match the clip");
  }
  if (cfg.iterations > 0 && !clip.has_flows()) {
    throw DataError("clip without flows: generate one with `canonica synth` or supply flows/");
  }
  const LossOptions opt = loss_options(cfg);

  for (std::int64_t it = model.iteration; it < cfg.iterations; ++it) {
    std::mt19937_64 rng = step_rng(cfg.seed, it);
    const CorrespondenceBatch batch = sample_batch(clip, cfg, rng);
    const ad::Matrix depths = render::sample_depth_matrix(
        model.config.camera, batch.entries.size(), cfg.n_samples, render::SampleMode::kTrain, &rng);
    std::vector<ad::Matrix> grads;
    const LossTerms terms = evaluate_loss(model, batch, depths, opt, &grads);
    if (terms.usable == 0) {
      throw NumericError("iteration " + std::to_string(it) + ": every ray in the batch is empty");
    }
    if (!std::isfinite(terms.total)) {
      throw NumericError("non-finite loss at iteration " + std::to_string(it));
    }
    if (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
      const LossRecord rec{it, terms.flow, terms.color, terms.other, terms.total};
      result.history.push_back(rec);
      if (hooks.log) hooks.log(rec);
    }
    model.params.zero_grad();
    model.params.add_grads(grads);
    ad::adam_step(model.params, cfg.lr_color, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    model.iteration = it + 1;
    if (hooks.checkpoint && cfg.checkpoint_every > 0 && model.iteration % cfg.checkpoint_every == 0) {
      hooks.checkpoint(model);
    }
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "iteration,L_flow,L_color,L_other,total\n";
  for (const auto& r : history) {
    out << r.iteration << ',' << format_double(r.flow) << ',' << format_double(r.color) << ','
        << format_double(r.other) << ',' << format_double(r.total) << '\n';
  }
}

std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<LossRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw DataError(path.string() + ": malformed loss row '" + line + "'");
    out.push_back(LossRecord{std::stoll(cells[0]), std::stod(cells[1]), std::stod(cells[2]),
                             std::stod(cells[3]), std::stod(cells[4])});
  }
  return out;
}

}  // namespace canonica::train
