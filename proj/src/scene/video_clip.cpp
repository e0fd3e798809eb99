#include "canonica/scene/video_clip.hpp"

#include <algorithm>

#include "canonica/errors.hpp"

namespace canonica::scene {

const Mask* VideoClip::mask(const std::string& label, int frame) const {
  auto it = masks.find(label);
  if (it == masks.end()) return nullptr;
  auto jt = it->second.find(frame);
  return jt == it->second.end() ? nullptr : &jt->second;
}

std::vector<FramePair> VideoClip::flow_pairs() const {
  std::vector<FramePair> out;
  out.reserve(flows.size());
  for (const auto& [pair, flow] : flows) out.push_back(pair);
  return out;
}

void VideoClip::validate() const {
  const int h = height();
  const int w = width();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].height != h || frames[k].width != w || frames[k].channels != 3) {
      throw DataError("frame " + std::to_string(k) + " is " + std::to_string(frames[k].height) +
                      "x" + std::to_string(frames[k].width) + ", expected " + std::to_string(h) +
                      "x" + std::to_string(w) + " RGB");
    }
  }
  for (const auto& [label, per_frame] : masks) {
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
      throw DataError("mask label '" + label + "' is not in the declared label set");
    }
    for (const auto& [f, m] : per_frame) {
      if (f < 0 || f >= frame_count()) throw DataError("mask for nonexistent frame " + std::to_string(f));
      if (m.height != h || m.width != w) {
        throw DataError("mask " + label + "/" + std::to_string(f) + " does not match the frame size");
      }
    }
  }
  for (const auto& [pair, flow] : flows) {
    const auto [i, j] = pair;
    if (i < 0 || j < 0 || i >= frame_count() || j >= frame_count() || i == j) {
      throw DataError("flow for invalid pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    if (flow.height != h || flow.width != w) {
      throw DataError("flow (" + std::to_string(i) + ", " + std::to_string(j) +
                      ") shape mismatch: " + std::to_string(flow.height) + "x" +
                      std::to_string(flow.width) + " vs frames " + std::to_string(h) + "x" +
                      std::to_string(w));
    }
  }
  for (const auto& [f, d] : depth) {
    if (f < 0 || f >= frame_count()) throw DataError("depth for nonexistent frame " + std::to_string(f));
    if (d.height != h || d.width != w) throw DataError("depth " + std::to_string(f) + " shape mismatch");
  }
}

}  // namespace canonica::scene
