#include "canonica/scene/subsample.hpp"

#include <cmath>

#include "canonica/errors.hpp"
#include "canonica/scene/synth.hpp"

namespace canonica::scene {

int subsample_stride(double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw ConfigError("keep fraction must be in (0, 1], got " + format_double(keep_fraction));
  }
  const double inv = 1.0 / keep_fraction;
  const long stride = std::lround(inv);
  if (std::abs(inv - static_cast<double>(stride)) > 1e-9 || (stride & (stride - 1)) != 0) {
    throw ConfigError("keep fraction must be 1/2^k, got " + format_double(keep_fraction));
  }
  return static_cast<int>(stride);
}

VideoClip temporal_subsample(const VideoClip& clip, double keep_fraction) {
  const int stride = subsample_stride(keep_fraction);
  if (stride == 1) return clip;
  std::vector<int> kept;
  for (int f = 0; f < clip.frame_count(); f += stride) kept.push_back(f);
  if (kept.size() < 2) {
    throw DataError("subsampling " + std::to_string(clip.frame_count()) + " frames with stride " +
                    std::to_string(stride) + " leaves fewer than 2 frames");
  }
  std::map<int, int> new_index;
  for (std::size_t k = 0; k < kept.size(); ++k) new_index.emplace(kept[k], static_cast<int>(k));

  VideoClip out;
  out.labels = clip.labels;
  out.fps = clip.fps / stride;
  for (int f : kept) out.frames.push_back(clip.frames[static_cast<std::size_t>(f)]);
  for (const auto& [label, per_frame] : clip.masks) {
    auto& dst = out.masks[label];
    for (const auto& [f, m] : per_frame) {
      if (auto it = new_index.find(f); it != new_index.end()) dst.emplace(it->second, m);
    }
  }
  for (const auto& [f, d] : clip.depth) {
    if (auto it = new_index.find(f); it != new_index.end()) out.depth.emplace(it->second, d);
  }
  if (clip.gt_tracks && clip.gt_tracks->start_frame == 0) {
    const GroundTruthTracks& src = *clip.gt_tracks;
    GroundTruthTracks t;
    t.start_frame = 0;
    t.height = src.height;
    t.width = src.width;
    const int pixels = src.height * src.width;
    for (int f : kept) {
      if (f >= src.frames) break;
      ++t.frames;
      for (int p = 0; p < pixels; ++p) {
        const std::size_t k = src.index(f, p);
        t.row.push_back(src.row[k]);
        t.col.push_back(src.col[k]);
        t.visible.push_back(src.visible[k]);
      }
    }
    out.gt_tracks = std::move(t);
  }

  if (clip.synth_source) {
    const SynthConfig cfg = synth_config_from_kv(KeyValues::parse(clip.synth_source->config_text, "synth provenance"));
    std::vector<double> times;
    for (int f : kept) times.push_back(clip.synth_source->times.at(static_cast<std::size_t>(f)));
    const int n = static_cast<int>(kept.size());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || (cfg.pair_window > 0 && std::abs(i - j) > cfg.pair_window)) continue;
        out.flows.emplace(FramePair{i, j}, synth_flow(cfg, times, i, j));
      }
    }
    out.synth_source = SynthProvenance{clip.synth_source->config_text, times};
  } else {
    for (const auto& [pair, flow] : clip.flows) {
      auto a = new_index.find(pair.first);
      auto b = new_index.find(pair.second);
      if (a != new_index.end() && b != new_index.end()) out.flows.emplace(FramePair{a->second, b->second}, flow);
    }
  }
  return out;
}

}  // namespace canonica::scene
