#include "canonica/render/renderer.hpp"

#include <stdexcept>
#include <string>

#include "canonica/render/compositing.hpp"

namespace canonica::render {

namespace {

// Keeps divisions by opacity finite for empty rays; far below kMinOpacity.
constexpr double kOpacityFloor = 1e-12;

void check_frame(const fields::SceneModel& model, int frame) {
  if (frame < 0 || frame >= model.config.frames) {
    throw std::out_of_range("frame index " + std::to_string(frame) + " out of range [0, " +
                            std::to_string(model.config.frames) + ")");
  }
}

// Weighted sum over samples of one column of an (R N) x C matrix -> R x 1.
ad::Var weighted_column(ad::Var per_sample, ad::Index column, ad::Var weights) {
  const ad::Index rays = weights.rows();
  const ad::Index samples = weights.cols();
  const ad::Var col = ad::reshape(ad::slice_cols(per_sample, column, 1), rays, samples);
  return ad::row_sum(col * weights);
}

ad::Var weighted_points(ad::Var per_sample, ad::Var weights, ad::Var denom) {
  std::vector<ad::Var> cols;
  for (ad::Index c = 0; c < 3; ++c) cols.push_back(weighted_column(per_sample, c, weights));
  return ad::concat_cols(cols) / denom;
}

ad::Var project(const Intrinsics& cam, ad::Var points) {
  const ad::Var x = ad::slice_cols(points, 0, 1);
  const ad::Var y = ad::slice_cols(points, 1, 1);
  const ad::Var z = ad::slice_cols(points, 2, 1);
  const ad::Var row = (y / z) * (cam.focal * 0.5 * cam.height) + 0.5 * (cam.height - 1);
  const ad::Var col = (x / z) * (cam.focal * 0.5 * cam.width) + 0.5 * (cam.width - 1);
  const ad::Var parts[2] = {row, col};
  return ad::concat_cols(parts);
}

}  // namespace

std::vector<double> stratified_depths(double near, double far, int n_samples, SampleMode mode,
                                      std::mt19937_64* rng) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (mode == SampleMode::kTrain && rng == nullptr) {
    throw std::invalid_argument("train-mode sampling needs a random generator");
  }
  const double bin = (far - near) / n_samples;
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<double> t(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k) {
    const double offset = mode == SampleMode::kEval ? 0.5 : jitter(*rng);
    t[static_cast<std::size_t>(k)] = near + (k + offset) * bin;
  }
  return t;
}

CastRay cast_ray(PixelCoord pixel, const Intrinsics& cam, int n_samples, SampleMode mode,
                 std::mt19937_64* rng) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (!inside_image(cam, pixel)) {
    throw std::out_of_range("pixel (" + std::to_string(pixel.row) + ", " +
                            std::to_string(pixel.col) + ") outside the image");
  }
  CastRay out;
  out.ray.direction = pixel_direction(cam, pixel);
  out.ray.near = cam.near;
  out.ray.far = cam.far;
  out.ray.pixel = pixel;
  out.depths = stratified_depths(cam.near, cam.far, n_samples, mode, rng);
  return out;
}

ad::Matrix sample_depth_matrix(const Intrinsics& cam, std::size_t rays, int n_samples,
                               SampleMode mode, std::mt19937_64* rng) {
  ad::Matrix depths(static_cast<ad::Index>(rays), n_samples);
  for (std::size_t r = 0; r < rays; ++r) {
    const auto t = stratified_depths(cam.near, cam.far, n_samples, mode, rng);
    for (int k = 0; k < n_samples; ++k) {
      depths(static_cast<ad::Index>(r), k) = t[static_cast<std::size_t>(k)];
    }
  }
  return depths;
}

RenderGraph build_render(ad::ParamBinder& bind, const fields::SceneModel& model,
                         std::span<const RayRequest> rays, const ad::Matrix& depths,
                         bool correspondence) {
  const Intrinsics& cam = model.config.camera;
  const auto n_rays = static_cast<ad::Index>(rays.size());
  const ad::Index n_samples = depths.cols();
  if (n_rays == 0) throw std::invalid_argument("build_render: empty ray batch");
  if (depths.rows() != n_rays) throw std::invalid_argument("build_render: depth rows != rays");
  ad::Tape& tape = bind.tape();

  ad::Matrix directions(n_rays, 3);
  ad::Matrix points(n_rays * n_samples, 3);
  std::vector<int> frames(static_cast<std::size_t>(n_rays * n_samples));
  std::vector<int> targets(frames.size());
  for (ad::Index r = 0; r < n_rays; ++r) {
    const RayRequest& req = rays[static_cast<std::size_t>(r)];
    check_frame(model, req.frame);
    if (correspondence) check_frame(model, req.target_frame);
    const Eigen::Vector3d d = pixel_direction(cam, req.pixel);
    directions.row(r) = d.transpose();
    for (ad::Index k = 0; k < n_samples; ++k) {
      const ad::Index row = r * n_samples + k;
      points.row(row) = (depths(r, k) * d).transpose();
      frames[static_cast<std::size_t>(row)] = req.frame;
      targets[static_cast<std::size_t>(row)] = req.target_frame;
    }
  }

  RenderGraph g;
  const ad::Var x = tape.constant(std::move(points));
  g.canonical = model.mapping.to_canonical(bind, x, frames);
  const auto field = model.field.query(bind, g.canonical);
  g.sigma = ad::reshape(field.sigma, n_rays, n_samples);
  g.weights = composite_weights(g.sigma, interval_lengths(depths, cam.far));
  g.opacity = ad::row_sum(g.weights);
  const ad::Var denom = g.opacity + kOpacityFloor;

  std::vector<ad::Var> channels;
  for (ad::Index c = 0; c < 3; ++c) channels.push_back(weighted_column(field.color, c, g.weights));
  g.color = ad::concat_cols(channels);

  g.depth = ad::row_sum(g.weights * tape.constant(depths)) / denom;
  g.source_point = g.depth * tape.constant(directions);

  if (correspondence) {
    g.mapped = model.mapping.from_canonical(bind, g.canonical, targets);
    g.target_point = weighted_points(g.mapped, g.weights, denom);
    g.target_pixel = project(cam, g.target_point);
  }
  return g;
}

RaySampleSet sample_ray(const fields::SceneModel& model, const CastRay& ray, int frame) {
  ad::Tape tape;
  ad::ParamBinder bind(tape, model.params);
  const RayRequest req{ray.ray.pixel, frame, frame};
  const auto n = static_cast<ad::Index>(ray.depths.size());
  ad::Matrix depths(1, n);
  for (ad::Index k = 0; k < n; ++k) depths(0, k) = ray.depths[static_cast<std::size_t>(k)];
  const RenderGraph g = build_render(bind, model, std::span(&req, 1), depths, false);
  tape.forward(g.color);
  const auto field = model.field.query(bind, g.canonical);
  tape.forward(field.color);

  RaySampleSet s;
  s.depths = ray.depths;
  for (ad::Index k = 0; k < n; ++k) {
    s.points.push_back(ray.depths[static_cast<std::size_t>(k)] * ray.ray.direction);
    s.canonical.push_back(tape.value(g.canonical).row(k).transpose());
    s.sigma.push_back(tape.value(g.sigma)(0, k));
    s.color.push_back(tape.value(field.color).row(k).transpose());
    s.weights.push_back(tape.value(g.weights)(0, k));
  }
  return s;
}

std::vector<RenderResult> render_rays(const fields::SceneModel& model,
                                      std::span<const RayRequest> rays, int n_samples,
                                      bool correspondence, std::size_t chunk) {
  std::vector<RenderResult> out;
  out.reserve(rays.size());
  const Intrinsics& cam = model.config.camera;
  for (std::size_t begin = 0; begin < rays.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, rays.size() - begin);
    const auto batch = rays.subspan(begin, count);
    const ad::Matrix depths = sample_depth_matrix(cam, count, n_samples, SampleMode::kEval, nullptr);
    ad::Tape tape;
    ad::ParamBinder bind(tape, model.params);
    const RenderGraph g = build_render(bind, model, batch, depths, correspondence);
    tape.forward(correspondence ? g.target_pixel : g.source_point);
    for (std::size_t r = 0; r < count; ++r) {
      const auto row = static_cast<ad::Index>(r);
      RenderResult res;
      res.color = tape.value(g.color).row(row).transpose();
      const double opacity = tape.value(g.opacity)(row, 0);
      const bool valid = opacity >= kMinOpacity;
      res.depth = DepthSample{tape.value(g.depth)(row, 0), opacity, valid};
      if (correspondence) {
        Correspondence& c = res.correspondence;
        c.opacity = opacity;
        c.valid = valid;
        if (valid) {
          c.point = tape.value(g.target_point).row(row).transpose();
          c.pixel = PixelCoord{tape.value(g.target_pixel)(row, 0), tape.value(g.target_pixel)(row, 1)};
        } else {
          // Empty ray: fall back to the mapped middle sample.
          c.point = tape.value(g.mapped).row(row * n_samples + n_samples / 2).transpose();
          c.pixel = project(cam, c.point);
        }
        c.flow = Eigen::Vector2d(c.pixel.row - batch[r].pixel.row, c.pixel.col - batch[r].pixel.col);
      }
      out.push_back(res);
    }
  }
  return out;
}

namespace {

RenderResult render_single(const fields::SceneModel& model, const CastRay& ray, int frame,
                           int target_frame, bool correspondence) {
  check_frame(model, frame);
  if (correspondence) check_frame(model, target_frame);
  ad::Tape tape;
  ad::ParamBinder bind(tape, model.params);
  const RayRequest req{ray.ray.pixel, frame, target_frame};
  const auto n = static_cast<ad::Index>(ray.depths.size());
  ad::Matrix depths(1, n);
  for (ad::Index k = 0; k < n; ++k) depths(0, k) = ray.depths[static_cast<std::size_t>(k)];
  const RenderGraph g = build_render(bind, model, std::span(&req, 1), depths, correspondence);
  tape.forward(correspondence ? g.target_pixel : g.source_point);
  RenderResult res;
  res.color = tape.value(g.color).row(0).transpose();
  const double opacity = tape.value(g.opacity)(0, 0);
  const bool valid = opacity >= kMinOpacity;
  res.depth = DepthSample{tape.value(g.depth)(0, 0), opacity, valid};
  if (correspondence) {
    Correspondence& c = res.correspondence;
    c.opacity = opacity;
    c.valid = valid;
    if (valid) {
      c.point = tape.value(g.target_point).row(0).transpose();
    } else {
      c.point = tape.value(g.mapped).row(n / 2).transpose();
    }
    c.pixel = project(model.config.camera, c.point);
    c.flow = Eigen::Vector2d(c.pixel.row - ray.ray.pixel.row, c.pixel.col - ray.ray.pixel.col);
  }
  return res;
}

}  // namespace

Eigen::Vector3d render_color(const fields::SceneModel& model, const CastRay& ray, int frame) {
  return render_single(model, ray, frame, frame, false).color;
}

Correspondence render_correspondence(const fields::SceneModel& model, const CastRay& ray,
                                     int frame, int target_frame) {
  return render_single(model, ray, frame, target_frame, true).correspondence;
}

DepthSample render_depth(const fields::SceneModel& model, const CastRay& ray, int frame) {
  return render_single(model, ray, frame, frame, false).depth;
}

}  // namespace canonica::render
