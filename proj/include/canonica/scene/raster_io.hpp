#pragma once

// On-disk raster formats (all multi-byte fields little-endian):
//
//   .ppm   binary P6, maxval 255; colors are v / 255.
//   .pgm   binary P5, maxval 255; masks store 0 / 255 and load as value >= 128.
//   .f32   depth: "DPT1", u32 height, u32 width, f32 scale, then height*width
//          f32 raw values row-major; loaded depth = raw * scale.
//   .flo2  flow:  "FLO2", u32 height, u32 width, then height*width (f32 drow,
//          f32 dcol) pairs row-major, then height*width u8 validity flags.
//   .trk   tracks: "TRK1", u32 start_frame, u32 frames, u32 height, u32 width,
//          then per frame height*width (f32 row, f32 col) pairs, then
//          frames*height*width u8 visibility flags.

#include <filesystem>

#include "canonica/scene/raster.hpp"

namespace canonica::scene {

struct GroundTruthTracks;

RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

Mask read_mask_pgm(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);

DepthMap read_depth(const std::filesystem::path& path);
void write_depth(const std::filesystem::path& path, const DepthMap& depth, float scale = 1.0f);

FlowField read_flow(const std::filesystem::path& path);
void write_flow(const std::filesystem::path& path, const FlowField& flow);

GroundTruthTracks read_tracks(const std::filesystem::path& path);
void write_tracks(const std::filesystem::path& path, const GroundTruthTracks& tracks);

// Quantizes to the 8-bit grid the PPM format stores.
float quantize_unit(double v);

}  // namespace canonica::scene
