#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "canonica/scene/video_clip.hpp"
#include "canonica/train/config.hpp"

namespace canonica::eval {

struct AblationCell {
  std::string video;
  std::string label;
  double w_class = 1.0;
  double fraction = 1.0;
  int frames = 0;
  double mean_acc = 0.0;  // percent
  double std = 0.0;       // across videos; 0 for a single video
};

struct AblationOptions {
  std::vector<double> fractions{1.0};
  std::vector<double> w_classes{1.0};
  std::vector<std::string> labels;  // empty: every label with a start mask
  int start_frame = 0;
  std::string video = "clip";
};

// Trains one model per (fraction, w_class) cell on the subsampled clip and
// reports mean tracking accuracy per label. All w_class values of a
// fraction share one derived seed so columns differ only by the weight.
std::vector<AblationCell> run_ablation(const scene::VideoClip& clip, const train::TrainConfig& cfg,
                                       const AblationOptions& options);

// Long format: video,label,w_class,fraction,frames,mean_acc,std
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationCell>& cells);
// Wide format, one row per (label, fraction) and one column per w_class.
void write_ablation_table(const std::filesystem::path& path, const std::vector<AblationCell>& cells);

}  // namespace canonica::eval
