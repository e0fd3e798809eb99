#include "canonica/render/camera.hpp"

#include <string>

#include "canonica/errors.hpp"

namespace canonica::render {

void validate(const Intrinsics& cam) {
  if (cam.height < 1 || cam.width < 1) throw ConfigError("camera: image size must be positive");
  if (!(cam.focal > 0.0)) throw ConfigError("camera: focal must be positive");
  if (!(cam.near > 0.0) || !(cam.near < cam.far)) {
    throw ConfigError("camera: need 0 < near < far, got near=" + std::to_string(cam.near) +
                      " far=" + std::to_string(cam.far));
  }
}

Eigen::Vector3d pixel_direction(const Intrinsics& cam, PixelCoord pixel) {
  const double nx = (pixel.col - 0.5 * (cam.width - 1)) / (0.5 * cam.width);
  const double ny = (pixel.row - 0.5 * (cam.height - 1)) / (0.5 * cam.height);
  return Eigen::Vector3d(nx / cam.focal, ny / cam.focal, 1.0).normalized();
}

PixelCoord project(const Intrinsics& cam, const Eigen::Vector3d& point) {
  PixelCoord p;
  p.col = point.x() / point.z() * cam.focal * 0.5 * cam.width + 0.5 * (cam.width - 1);
  p.row = point.y() / point.z() * cam.focal * 0.5 * cam.height + 0.5 * (cam.height - 1);
  return p;
}

bool inside_image(const Intrinsics& cam, PixelCoord pixel) {
  return pixel.row >= -0.5 && pixel.row < cam.height - 0.5 && pixel.col >= -0.5 &&
         pixel.col < cam.width - 0.5;
}

}  // namespace canonica::render
