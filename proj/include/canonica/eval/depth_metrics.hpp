#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <span>
#include <vector>

#include "canonica/fields/scene_model.hpp"
#include "canonica/scene/raster.hpp"

namespace canonica::eval {

struct ScaleShift {
  double scale = 1.0;
  double shift = 0.0;
};

// Least-squares (s, t) minimizing sum over valid pixels of (s pred + t - gt)^2.
// Throws NumericError for fewer than 2 valid pixels or constant pred.
ScaleShift align_scale_shift(std::span<const double> pred, std::span<const double> gt,
                             std::span<const std::uint8_t> valid);

struct DepthFrameMetrics {
  double mae = 0.0;
  double abs_rel = 0.0;   // percent
  double delta125 = 0.0;  // percent
  ScaleShift fit;
};

// Metrics of the aligned prediction s pred + t. Throws NumericError for a
// non-positive ground truth on a valid pixel.
DepthFrameMetrics depth_metrics(std::span<const double> pred, std::span<const double> gt,
                                std::span<const std::uint8_t> valid);
// Metrics of a prediction taken as already aligned.
DepthFrameMetrics aligned_depth_metrics(std::span<const double> aligned, std::span<const double> gt,
                                        std::span<const std::uint8_t> valid);

struct DepthReport {
  std::vector<std::pair<int, DepthFrameMetrics>> frames;
  DepthFrameMetrics mean;  // equal-weight average of the per-frame metrics
};

struct RenderedDepth {
  scene::DepthMap depth;
  std::vector<std::uint8_t> valid;  // 0 where the ray is empty
};

RenderedDepth render_depth_map(const fields::SceneModel& model, int frame, int n_samples);

// Per-frame metrics for every frame of `rendered` that has ground truth.
DepthReport depth_report(const std::vector<std::pair<int, RenderedDepth>>& rendered,
                         const std::map<int, scene::DepthMap>& gt);

// video,frame,MAE,AbsRel,delta125,s,t
void write_depth_csv(const std::filesystem::path& path, const std::string& video,
                     const DepthReport& report);

}  // namespace canonica::eval
