#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "canonica/scene/video_clip.hpp"
#include "canonica/train/config.hpp"

namespace canonica::train {

enum class PixelClass { kBackground, kInstrument };

struct Correspondence {
  int i = 0;
  int j = 0;
  int row = 0;  // p_i
  int col = 0;
  Eigen::Vector2d flow = Eigen::Vector2d::Zero();  // supervision (drow, dcol)
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // C_i(p_i)
  PixelClass label = PixelClass::kBackground;
};

// Entries are grouped by pair, in sampling order.
struct CorrespondenceBatch {
  std::vector<Correspondence> entries;
  std::vector<scene::FramePair> pairs;
};

// Draws pairs_per_batch frame pairs (distinct when the clip has enough,
// otherwise with replacement) and splits batch_correspondences evenly over
// them; pixels are drawn uniformly among the pair's valid flow pixels.
// Throws DataError for a clip without flows.
CorrespondenceBatch sample_batch(const scene::VideoClip& clip, const TrainConfig& cfg,
                                 std::mt19937_64& rng);

// Instrument if any instrument-label mask of frame i covers the pixel.
PixelClass classify_pixel(const scene::VideoClip& clip, const TrainConfig& cfg, int frame, int row,
                          int col);

}  // namespace canonica::train
