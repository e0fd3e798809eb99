#pragma once

// Clip directory layout:
//
//   clip.cfg                      fps = ..., labels = a,b,...
//   frames/%05d.ppm               RGB frames
//   masks/<label>/%05d.pgm        optional binary masks
//   flows/%05d_%05d.flo2          optional flow i -> j
//   depth/%05d.f32                optional ground-truth depth
//   tracks/gt_tracks.trk          optional ground-truth tracks
//   synth.cfg                     generator config and frame times (synthetic clips)
//
// Frame numbers need not be contiguous; frames are sorted by number and
// renumbered from 0, and every other file follows the same renumbering.

#include <filesystem>

#include "canonica/scene/video_clip.hpp"

namespace canonica::scene {

struct LoadOptions {
  // Center-crop to a square and resize (nearest neighbor) to size x size.
  // 0 keeps the stored geometry.
  int size = 0;
};

VideoClip load_clip(const std::filesystem::path& dir, const LoadOptions& options = {});
void save_clip(const VideoClip& clip, const std::filesystem::path& dir);

// Center crop to the largest square, then nearest-neighbor resize. Flow
// vectors are rescaled; ground-truth tracks are dropped since their
// start-frame pixel grid no longer exists.
VideoClip crop_resize(const VideoClip& clip, int size);

}  // namespace canonica::scene
