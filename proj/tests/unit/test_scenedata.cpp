#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "canonica/errors.hpp"
#include "canonica/scene/clip_io.hpp"
#include "canonica/scene/raster_io.hpp"
#include "canonica/scene/subsample.hpp"
#include "canonica/scene/synth.hpp"

using namespace canonica;
using namespace canonica::scene;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("canonica_scene_" + name);
  fs::remove_all(p);
  return p;
}

SynthConfig one_sprite(double vcol, double vrow = 0.0) {
  SynthConfig cfg;
  cfg.background_motion.row0 = 15.5;
  cfg.background_motion.col0 = 15.5;
  SpriteSpec sp;
  sp.label = "sprite";
  sp.half_height = 5;
  sp.half_width = 5;
  sp.depth = 1.0;
  sp.motion.row0 = 15.5;
  sp.motion.col0 = 8;
  sp.motion.vcol = vcol;
  sp.motion.vrow = vrow;
  cfg.sprites.push_back(sp);
  return cfg;
}

}  // namespace

TEST(Synth, DefaultConfigHasTwoSprites) {
  const VideoClip clip = synth_generate(default_synth_config(0));
  EXPECT_EQ(clip.frame_count(), 8);
  EXPECT_EQ(clip.height(), 32);
  EXPECT_EQ(clip.width(), 32);
  EXPECT_EQ(clip.labels.size(), 2u);
  EXPECT_TRUE(clip.gt_tracks.has_value());
  EXPECT_EQ(clip.depth.size(), 8u);
  EXPECT_EQ(clip.flows.size(), 8u * 7u);
}

TEST(Synth, StaticSpriteHasZeroFlowAndConstantTracks) {
  const VideoClip clip = synth_generate(one_sprite(0.0));
  for (const auto& [pair, flow] : clip.flows) {
    for (std::size_t k = 0; k < flow.drow.size(); ++k) {
      ASSERT_EQ(flow.drow[k], 0.0f);
      ASSERT_EQ(flow.dcol[k], 0.0f);
      ASSERT_EQ(flow.valid[k], 1);
    }
  }
  const auto& gt = *clip.gt_tracks;
  for (int f = 0; f < gt.frames; ++f) {
    for (int p = 0; p < 32 * 32; ++p) {
      ASSERT_EQ(gt.row[gt.index(f, p)], static_cast<float>(p / 32));
      ASSERT_EQ(gt.col[gt.index(f, p)], static_cast<float>(p % 32));
    }
  }
}

TEST(Synth, TranslatingSpriteFlowInsideSprite) {
  const VideoClip clip = synth_generate(one_sprite(3.0));
  for (int i = 0; i + 1 < clip.frame_count(); ++i) {
    const FlowField& f = clip.flows.at({i, i + 1});
    const Mask& m = *clip.mask("sprite", i);
    int inside = 0;
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) {
        if (!m.at(r, c)) continue;
        const auto k = f.index(r, c);
        if (!f.valid[k]) continue;
        ++inside;
        ASSERT_EQ(f.drow[k], 0.0f);
        ASSERT_EQ(f.dcol[k], 3.0f);
      }
    }
    EXPECT_GT(inside, 0);
  }
}

TEST(Synth, OccludedLowerLayerHasInvalidFlow) {
  SynthConfig cfg = one_sprite(0.0);
  SpriteSpec top = cfg.sprites[0];
  top.label = "top";
  top.depth = 0.8;
  top.motion.col0 = 2;
  top.motion.vcol = 2;
  top.texture_seed = 9;
  cfg.sprites.push_back(top);
  const VideoClip clip = synth_generate(cfg);
  // A point of the lower sprite visible at frame 0 but covered by the top
  // sprite at frame 4.
  const FlowField& f = clip.flows.at({0, 4});
  const Mask& lower0 = *clip.mask("sprite", 0);
  const Mask& top4 = *clip.mask("top", 4);
  int checked = 0;
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      if (lower0.at(r, c) && top4.at(r, c)) {
        EXPECT_EQ(f.valid[f.index(r, c)], 0);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Synth, FlowsComposeAtMutuallyVisiblePixels) {
  SynthConfig cfg = default_synth_config(3);
  cfg.background_motion.angular_velocity = 0.01;
  cfg.background_motion.wobble_amplitude = 0.5;
  cfg.background_motion.wobble_frequency = 0.3;
  cfg.background_motion.wobble_speed = 0.2;
  const VideoClip clip = synth_generate(cfg);
  const std::vector<double> times = clip.synth_source->times;
  for (auto [i, j, k] : {std::tuple{0, 3, 6}, std::tuple{5, 1, 2}}) {
    const FlowField& ij = clip.flows.at({i, j});
    const FlowField& ik = clip.flows.at({i, k});
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) {
        const auto idx = ij.index(r, c);
        if (!ij.valid[idx] || !ik.valid[idx]) continue;
        const MotionProgram::Point pj{r + ij.drow[idx], c + ij.dcol[idx]};
        // Continue from the continuous position in frame j to frame k.
        const auto t = synth_transport(cfg, pj, times[j], times[k]);
        if (!t || !t->visible) continue;
        EXPECT_NEAR(t->position.row, r + ik.drow[idx], 1e-4);
        EXPECT_NEAR(t->position.col, c + ik.dcol[idx], 1e-4);
      }
    }
  }
}

TEST(Synth, DepthOrderingMatchesMasks) {
  const SynthConfig cfg = default_synth_config(5);
  const VideoClip clip = synth_generate(cfg);
  for (int f = 0; f < clip.frame_count(); ++f) {
    const DepthMap& d = clip.depth.at(f);
    for (std::size_t s = 0; s < cfg.sprites.size(); ++s) {
      const Mask& m = *clip.mask(cfg.sprites[s].label, f);
      for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
          if (!m.at(r, c)) continue;
          // Visible label is the nearest layer covering the pixel.
          for (std::size_t o = 0; o < cfg.sprites.size(); ++o) {
            if (o != s && clip.mask(cfg.sprites[o].label, f)->at(r, c)) FAIL() << "overlapping masks";
          }
          const double dir = std::sqrt(1 + std::pow((c - 15.5) / 16.0, 2) + std::pow((r - 15.5) / 16.0, 2));
          EXPECT_NEAR(d.at(r, c), cfg.sprites[s].depth * dir, 1e-5);
        }
      }
    }
  }
}

TEST(Synth, DeterministicForSeed) {
  EXPECT_TRUE(synth_generate(default_synth_config(4)).frames == synth_generate(default_synth_config(4)).frames);
  EXPECT_FALSE(synth_generate(default_synth_config(4)).frames == synth_generate(default_synth_config(5)).frames);
}

TEST(Synth, ZeroSpritesWithTrackingIsAnError) {
  SynthConfig cfg;
  cfg.tracking = true;
  EXPECT_THROW(synth_generate(cfg), ConfigError);
}

TEST(Synth, EqualDepthsRejected) {
  SynthConfig cfg = one_sprite(1.0);
  cfg.sprites.push_back(cfg.sprites[0]);
  cfg.sprites[1].label = "other";
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Synth, ConfigKeyValueRoundTrip) {
  SynthConfig cfg = default_synth_config(11);
  cfg.sprites[1].instrument = true;
  cfg.sprites[1].label = "instrument";
  cfg.pair_window = 2;
  const SynthConfig back = synth_config_from_kv(to_kv(cfg));
  EXPECT_EQ(to_kv(back).to_text(), to_kv(cfg).to_text());
}

TEST(ClipIo, SaveLoadIsLossless) {
  const VideoClip clip = synth_generate(default_synth_config(2));
  const fs::path dir = temp_dir("roundtrip");
  save_clip(clip, dir);
  const VideoClip back = load_clip(dir);
  EXPECT_TRUE(back.frames == clip.frames);
  EXPECT_EQ(back.labels, clip.labels);
  EXPECT_TRUE(back.masks == clip.masks);
  EXPECT_TRUE(back.flows == clip.flows);
  EXPECT_TRUE(back.depth == clip.depth);
  EXPECT_TRUE(back.gt_tracks == clip.gt_tracks);
  EXPECT_EQ(back.fps, clip.fps);
  EXPECT_TRUE(back.synth_source == clip.synth_source);
  fs::remove_all(dir);
}

TEST(ClipIo, FramesOnlyDirectory) {
  const VideoClip clip = synth_generate(default_synth_config(2));
  const fs::path dir = temp_dir("frames_only");
  fs::create_directories(dir / "frames");
  // Non-contiguous numbering is renumbered in order.
  for (int f = 0; f < clip.frame_count(); ++f) {
    write_ppm(dir / "frames" / (std::to_string(10000 + 3 * f) + ".ppm"), clip.frames[f]);
  }
  const VideoClip back = load_clip(dir);
  EXPECT_EQ(back.frame_count(), clip.frame_count());
  EXPECT_TRUE(back.frames == clip.frames);
  EXPECT_TRUE(back.masks.empty());
  EXPECT_FALSE(back.has_flows());
  fs::remove_all(dir);
}

TEST(ClipIo, SingleStartMask) {
  VideoClip clip = synth_generate(default_synth_config(2));
  const fs::path dir = temp_dir("single_mask");
  for (auto& [label, per_frame] : clip.masks) {
    for (auto it = per_frame.begin(); it != per_frame.end();) {
      it = it->first == 0 ? std::next(it) : per_frame.erase(it);
    }
  }
  save_clip(clip, dir);
  const VideoClip back = load_clip(dir);
  EXPECT_NE(back.mask(clip.labels[0], 0), nullptr);
  EXPECT_EQ(back.mask(clip.labels[0], 1), nullptr);
  fs::remove_all(dir);
}

TEST(ClipIo, InconsistentFrameSizeIsDataError) {
  const VideoClip clip = synth_generate(default_synth_config(2));
  const fs::path dir = temp_dir("bad_size");
  save_clip(clip, dir);
  write_ppm(dir / "frames" / "00003.ppm", RgbImage(16, 16, 3, 0.5f));
  EXPECT_THROW(load_clip(dir), DataError);
  fs::remove_all(dir);
}

TEST(ClipIo, UnreadableFileIsDataError) {
  const VideoClip clip = synth_generate(default_synth_config(2));
  const fs::path dir = temp_dir("garbage");
  save_clip(clip, dir);
  std::ofstream(dir / "flows" / "00000_00001.flo2") << "garbage";
  EXPECT_THROW(load_clip(dir), DataError);
  fs::remove_all(dir);
}

TEST(ClipIo, CropResize) {
  const VideoClip clip = synth_generate(default_synth_config(2));
  const VideoClip small = crop_resize(clip, 16);
  EXPECT_EQ(small.height(), 16);
  EXPECT_EQ(small.width(), 16);
  EXPECT_EQ(small.frame_count(), clip.frame_count());
  EXPECT_FALSE(small.gt_tracks.has_value());
  const FlowField& f = clip.flows.at({0, 1});
  const FlowField& g = small.flows.at({0, 1});
  EXPECT_FLOAT_EQ(g.dcol[g.index(3, 5)], 0.5f * f.dcol[f.index(6, 10)]);
}

TEST(RasterIo, DepthScaleHeader) {
  const fs::path dir = temp_dir("depth");
  fs::create_directories(dir);
  DepthMap d(2, 3, 1, 1.5f);
  d.at(1, 2) = 4.0f;
  write_depth(dir / "d.f32", d, 2.0f);
  const DepthMap back = read_depth(dir / "d.f32");
  EXPECT_TRUE(back == d);
  fs::remove_all(dir);
}

TEST(Subsample, StridesAndFrameCounts) {
  SynthConfig cfg = default_synth_config(1);
  cfg.frames = 80;
  cfg.tracking = true;
  const VideoClip clip = synth_generate(cfg);
  ASSERT_EQ(clip.frame_count(), 80);
  const VideoClip half = temporal_subsample(clip, 0.5);
  EXPECT_EQ(half.frame_count(), 40);
  EXPECT_TRUE(half.frames[1] == clip.frames[2]);
  EXPECT_DOUBLE_EQ(half.fps, clip.fps / 2);
  EXPECT_EQ(temporal_subsample(clip, 0.0625).frame_count(), 5);
  const VideoClip same = temporal_subsample(clip, 1.0);
  EXPECT_TRUE(same.frames == clip.frames);
  EXPECT_TRUE(same.flows == clip.flows);
}

TEST(Subsample, FlowsRecomputedForSurvivingFrames) {
  const VideoClip clip = synth_generate(one_sprite(1.0));
  const VideoClip sub = temporal_subsample(clip, 0.25);
  ASSERT_EQ(sub.frame_count(), 2);
  // New frame 1 is old frame 4: four frames of motion.
  EXPECT_TRUE(sub.flows.at({0, 1}) == clip.flows.at({0, 4}));
  EXPECT_TRUE(*sub.mask("sprite", 1) == *clip.mask("sprite", 4));
  EXPECT_TRUE(sub.depth.at(1) == clip.depth.at(4));
}

TEST(Subsample, StoredFlowsRemappedWithoutProvenance) {
  VideoClip clip = synth_generate(one_sprite(1.0));
  clip.synth_source.reset();
  const VideoClip sub = temporal_subsample(clip, 0.5);
  EXPECT_TRUE(sub.flows.at({1, 3}) == clip.flows.at({2, 6}));
}

TEST(Subsample, Errors) {
  const VideoClip clip = synth_generate(one_sprite(1.0));
  EXPECT_THROW(temporal_subsample(clip, 0.3), ConfigError);
  EXPECT_THROW(temporal_subsample(clip, 0.125), DataError);
}
