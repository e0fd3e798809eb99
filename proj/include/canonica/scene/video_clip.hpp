#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "canonica/scene/raster.hpp"

namespace canonica::scene {

// Dense ground-truth trajectories of every pixel of start_frame.
struct GroundTruthTracks {
  int start_frame = 0;
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<float> row;  // [frame][pixel]
  std::vector<float> col;
  std::vector<std::uint8_t> visible;

  std::size_t index(int frame, int pixel) const {
    return static_cast<std::size_t>(frame) * static_cast<std::size_t>(height * width) +
           static_cast<std::size_t>(pixel);
  }
  friend bool operator==(const GroundTruthTracks&, const GroundTruthTracks&) = default;
};

// Generator provenance of a synthetic clip: frame k was rendered at
// generator time times[k]. Lets derived clips recompute exact flows.
struct SynthProvenance {
  std::string config_text;  // serialized SynthConfig
  std::vector<double> times;
  friend bool operator==(const SynthProvenance&, const SynthProvenance&) = default;
};

using FramePair = std::pair<int, int>;

struct VideoClip {
  std::vector<RgbImage> frames;
  std::vector<std::string> labels;                       // declared label set
  std::map<std::string, std::map<int, Mask>> masks;      // label -> frame -> mask
  std::map<FramePair, FlowField> flows;                  // (i, j) -> flow i -> j
  std::map<int, DepthMap> depth;                         // frame -> depth
  std::optional<GroundTruthTracks> gt_tracks;
  double fps = 25.0;
  std::optional<SynthProvenance> synth_source;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }

  const Mask* mask(const std::string& label, int frame) const;
  bool has_flows() const { return !flows.empty(); }
  std::vector<FramePair> flow_pairs() const;

  // Checks the structural invariants; throws DataError on violation.
  void validate() const;
};

}  // namespace canonica::scene
