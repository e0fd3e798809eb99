#pragma once

#include "canonica/scene/video_clip.hpp"

namespace canonica::scene {

// Keeps every (1 / keep_fraction)-th frame starting at frame 0. keep_fraction
// must be 1 / 2^k. Synthetic clips get exact flows recomputed for the
// surviving frames; otherwise stored flows between surviving frames are
// kept. Throws ConfigError for a bad fraction, DataError for < 2 frames left.
VideoClip temporal_subsample(const VideoClip& clip, double keep_fraction);

// 1 / keep_fraction as an integer stride; throws ConfigError if not a power of two.
int subsample_stride(double keep_fraction);

}  // namespace canonica::scene
