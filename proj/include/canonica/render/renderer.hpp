#pragma once

#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "canonica/autodiff/param_store.hpp"
#include "canonica/fields/scene_model.hpp"
#include "canonica/render/camera.hpp"

namespace canonica::render {

// Rays with opacity below this carry no usable surface and are flagged.
inline constexpr double kMinOpacity = 1e-6;

enum class SampleMode { kEval, kTrain };

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
  double near = 0.0;
  double far = 1.0;
  PixelCoord pixel;
};

struct CastRay {
  Ray ray;
  std::vector<double> depths;  // strictly increasing, in [near, far]
};

// Stratified depths: one sample per equal bin of [near, far], at the bin
// midpoint in eval mode and uniformly jittered inside the bin in train mode.
std::vector<double> stratified_depths(double near, double far, int n_samples, SampleMode mode,
                                      std::mt19937_64* rng);

// Throws std::invalid_argument for n_samples < 1, std::out_of_range for a
// pixel outside the image, and if mode is kTrain without an rng.
CastRay cast_ray(PixelCoord pixel, const Intrinsics& cam, int n_samples, SampleMode mode,
                 std::mt19937_64* rng = nullptr);

struct RayRequest {
  PixelCoord pixel;
  int frame = 0;         // i: frame the ray is cast in
  int target_frame = 0;  // j: frame correspondences are mapped to
};

// Differentiable quantities for a batch of R rays with N samples each.
struct RenderGraph {
  ad::Var sigma;         // R x N densities
  ad::Var weights;       // R x N compositing weights
  ad::Var opacity;       // R x 1, sum of weights
  ad::Var color;         // R x 3
  ad::Var depth;         // R x 1, weight-averaged ray depth
  ad::Var source_point;  // R x 3, expected surface point in frame i
  ad::Var target_point;  // R x 3, weight-averaged x_{j,k}; invalid if not requested
  ad::Var target_pixel;  // R x 2 (row, col); invalid if not requested
  ad::Var canonical;     // (R N) x 3 canonical sample points
  ad::Var mapped;        // (R N) x 3 samples carried to frame j; invalid if not requested
};

// depths: R x N sample depths along each ray.
RenderGraph build_render(ad::ParamBinder& bind, const fields::SceneModel& model,
                         std::span<const RayRequest> rays, const ad::Matrix& depths,
                         bool correspondence);

// Sample depths for a batch; every row shares the camera's near/far.
ad::Matrix sample_depth_matrix(const Intrinsics& cam, std::size_t rays, int n_samples,
                               SampleMode mode, std::mt19937_64* rng);

// Per-sample view of one ray, for inspection and tests.
struct RaySampleSet {
  std::vector<double> depths;
  std::vector<Eigen::Vector3d> points;     // x_{i,k}
  std::vector<Eigen::Vector3d> canonical;  // u_k
  std::vector<double> sigma;
  std::vector<Eigen::Vector3d> color;
  std::vector<double> weights;
};

RaySampleSet sample_ray(const fields::SceneModel& model, const CastRay& ray, int frame);

struct Correspondence {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // x_hat_j
  PixelCoord pixel;                                 // p_hat_j
  Eigen::Vector2d flow = Eigen::Vector2d::Zero();   // p_hat_j - p_i, (drow, dcol)
  double opacity = 0.0;
  bool valid = false;  // false for zero-opacity rays
};

struct DepthSample {
  double depth = 0.0;
  double opacity = 0.0;
  bool valid = false;
};

Eigen::Vector3d render_color(const fields::SceneModel& model, const CastRay& ray, int frame);
Correspondence render_correspondence(const fields::SceneModel& model, const CastRay& ray,
                                     int frame, int target_frame);
DepthSample render_depth(const fields::SceneModel& model, const CastRay& ray, int frame);

struct RenderResult {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  Correspondence correspondence;
  DepthSample depth;
};

// Eval-mode rendering of many rays, processed in chunks.
std::vector<RenderResult> render_rays(const fields::SceneModel& model,
                                      std::span<const RayRequest> rays, int n_samples,
                                      bool correspondence = true, std::size_t chunk = 512);

}  // namespace canonica::render
