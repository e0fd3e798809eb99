#pragma once

#include <Eigen/Dense>

namespace canonica::render {

// Fixed pinhole camera at the origin looking down +z. Pixel (row, col) has
// its center at integer coordinates; the image spans [-1, 1] in normalized
// coordinates at unit focal length.
struct Intrinsics {
  int height = 32;
  int width = 32;
  double focal = 1.0;
  double near = 0.5;
  double far = 1.0;
};

struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

void validate(const Intrinsics& cam);

// Unit direction through the pixel center.
Eigen::Vector3d pixel_direction(const Intrinsics& cam, PixelCoord pixel);
// Perspective projection; the point must have z > 0.
PixelCoord project(const Intrinsics& cam, const Eigen::Vector3d& point);
// True if the pixel rounds to a location inside the image rectangle.
bool inside_image(const Intrinsics& cam, PixelCoord pixel);

}  // namespace canonica::render
