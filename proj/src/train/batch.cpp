#include "canonica/train/batch.hpp"

#include <algorithm>

#include "canonica/errors.hpp"

namespace canonica::train {

namespace {

// Uniform index in [0, n) from raw generator output; same on every platform.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

}  // namespace

PixelClass classify_pixel(const scene::VideoClip& clip, const TrainConfig& cfg, int frame, int row,
                          int col) {
  for (const auto& label : cfg.instrument_labels) {
    const scene::Mask* m = clip.mask(label, frame);
    if (m != nullptr && m->at(row, col) != 0) return PixelClass::kInstrument;
  }
  return PixelClass::kBackground;
}

CorrespondenceBatch sample_batch(const scene::VideoClip& clip, const TrainConfig& cfg,
                                 std::mt19937_64& rng) {
  if (clip.frame_count() < 2) throw DataError("training needs a clip with at least 2 frames");
  if (!clip.has_flows()) {
    throw DataError("clip without flows: generate one with `canonica synth` or supply flows/");
  }
  // Pairs with at least one valid correspondence, with their valid pixels.
  std::vector<scene::FramePair> pairs;
  std::vector<std::vector<int>> valid_pixels;
  for (const auto& [pair, flow] : clip.flows) {
    std::vector<int> pix;
    for (std::size_t k = 0; k < flow.valid.size(); ++k) {
      if (flow.valid[k] != 0) pix.push_back(static_cast<int>(k));
    }
    if (pix.empty()) continue;
    pairs.push_back(pair);
    valid_pixels.push_back(std::move(pix));
  }
  if (pairs.empty()) throw DataError("clip flows contain no valid correspondences");

  const auto want = static_cast<std::size_t>(cfg.pairs_per_batch);
  std::vector<std::size_t> chosen;
  if (pairs.size() >= want) {
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    for (std::size_t k = 0; k < want; ++k) {
      std::swap(order[k], order[k + uniform_index(rng, order.size() - k)]);
      chosen.push_back(order[k]);
    }
  } else {
    for (std::size_t k = 0; k < want; ++k) chosen.push_back(uniform_index(rng, pairs.size()));
  }

  CorrespondenceBatch batch;
  const auto total = static_cast<std::size_t>(cfg.batch_correspondences);
  const int w = clip.width();
  for (std::size_t p = 0; p < chosen.size(); ++p) {
    const std::size_t count = total / want + (p < total % want ? 1 : 0);
    if (count == 0) continue;
    const auto [i, j] = pairs[chosen[p]];
    batch.pairs.push_back(pairs[chosen[p]]);
    const scene::FlowField& flow = clip.flows.at(pairs[chosen[p]]);
    const auto& pix = valid_pixels[chosen[p]];
    const scene::RgbImage& frame = clip.frames[static_cast<std::size_t>(i)];
    for (std::size_t n = 0; n < count; ++n) {
      const int k = pix[uniform_index(rng, pix.size())];
      Correspondence c;
      c.i = i;
      c.j = j;
      c.row = k / w;
      c.col = k % w;
      c.flow = Eigen::Vector2d(flow.drow[static_cast<std::size_t>(k)], flow.dcol[static_cast<std::size_t>(k)]);
      for (int ch = 0; ch < 3; ++ch) c.color[ch] = frame.at(c.row, c.col, ch);
      c.label = classify_pixel(clip, cfg, i, c.row, c.col);
      batch.entries.push_back(c);
    }
  }
  return batch;
}

}  // namespace canonica::train
