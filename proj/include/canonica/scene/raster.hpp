#pragma once

#include <cstdint>
#include <vector>

namespace canonica::scene {

// Row-major, channel-interleaved image.
template <typename T>
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<T> data;

  Raster() = default;
  Raster(int h, int w, int c = 1, T fill = T{})
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c), fill) {}

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
            static_cast<std::size_t>(col)) * static_cast<std::size_t>(channels) +
           static_cast<std::size_t>(ch);
  }
  T& at(int row, int col, int ch = 0) { return data[index(row, col, ch)]; }
  const T& at(int row, int col, int ch = 0) const { return data[index(row, col, ch)]; }
  bool contains(int row, int col) const { return row >= 0 && row < height && col >= 0 && col < width; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }

  friend bool operator==(const Raster&, const Raster&) = default;
};

using RgbImage = Raster<float>;        // 3 channels in [0, 1]
using Mask = Raster<std::uint8_t>;     // 1 channel, 0 or 1
using DepthMap = Raster<float>;        // 1 channel

// Dense displacement field from frame i to frame j, in pixels.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> drow;
  std::vector<float> dcol;
  std::vector<std::uint8_t> valid;  // 0 where occluded or leaving the image

  FlowField() = default;
  FlowField(int h, int w)
      : height(h), width(w), drow(static_cast<std::size_t>(h * w), 0.0f),
        dcol(static_cast<std::size_t>(h * w), 0.0f), valid(static_cast<std::size_t>(h * w), 0) {}

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
  }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

}  // namespace canonica::scene
