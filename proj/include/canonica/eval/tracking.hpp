#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "canonica/fields/scene_model.hpp"
#include "canonica/render/camera.hpp"
#include "canonica/scene/video_clip.hpp"

namespace canonica::eval {

// Mask-propagated tracks: every pixel of the start mask carried to every
// frame of the clip.
struct TrackSet {
  std::string label;
  int start_frame = 0;
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<render::PixelCoord> sources;  // p_1 per track
  // [track * frames + frame]
  std::vector<render::PixelCoord> positions;
  std::vector<Eigen::Vector3d> points;
  std::vector<std::uint8_t> in_bounds;

  std::size_t size() const { return sources.size(); }
  std::size_t index(std::size_t track, int frame) const {
    return track * static_cast<std::size_t>(frames) + static_cast<std::size_t>(frame);
  }
};

// Throws DataError if the clip has no mask for label at start_frame (the
// message lists the labels that do exist).
TrackSet track_from_mask(const fields::SceneModel& model, const scene::VideoClip& clip,
                         const std::string& label, int start_frame, int n_samples);

// Tracks rendered from given source pixels (used for ground-truth checks).
TrackSet track_pixels(const fields::SceneModel& model, std::vector<render::PixelCoord> sources,
                      int start_frame, int n_samples);

struct TrackingAccuracy {
  std::map<int, double> per_frame;  // evaluated frames only
  double mean = 0.0;
};

// Per frame j != start: fraction of in-image predictions whose rounded pixel
// lies inside the frame-j mask. Frames without a mask (or with an empty
// one) are discarded and
// out-of-image predictions excluded. Throws DataError("no evaluable
// predictions") if nothing remains.
TrackingAccuracy tracking_accuracy(const TrackSet& tracks, const scene::VideoClip& clip,
                                   const std::string& label);

// Median endpoint error against the clip's ground-truth tracks over frames
// j != start where the ground truth is visible. Requires tracks to start at
// the ground truth's start frame.
double median_endpoint_error(const TrackSet& tracks, const scene::GroundTruthTracks& gt);

// Mean and population standard deviation across videos of per-video means.
struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
  int videos = 0;
};
Aggregate aggregate_videos(const std::vector<double>& per_video);

// Track CSV: track_id,frame,row,col,x,y,z,in_bounds
void write_tracks_csv(const std::filesystem::path& path, const TrackSet& tracks);

// Copies of the clip frames with track points splatted in red (in-bounds only).
std::vector<scene::RgbImage> overlay_tracks(const scene::VideoClip& clip, const TrackSet& tracks);

}  // namespace canonica::eval
