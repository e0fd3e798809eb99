#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "canonica/kv.hpp"
#include "canonica/scene/video_clip.hpp"

namespace canonica::scene {

// Closed-form, exactly invertible motion of a layer in the image plane.
// A layer-local point q = (qr, qc) is first deformed to
// (qr, qc + a sin(nu qr + kappa tau)), then rotated by theta(tau), scaled by
// exp(log_scale_rate tau) and placed at center(tau).
struct MotionProgram {
  double row0 = 0.0;
  double col0 = 0.0;
  double vrow = 0.0;  // px / frame
  double vcol = 0.0;
  double angle0 = 0.0;             // rad
  double angular_velocity = 0.0;   // rad / frame
  double log_scale_rate = 0.0;     // per frame
  double wobble_amplitude = 0.0;   // px
  double wobble_frequency = 0.0;   // rad / px
  double wobble_speed = 0.0;       // rad / frame

  struct Point {
    double row;
    double col;
  };
  Point to_image(Point local, double time) const;
  Point to_local(Point image, double time) const;
};

enum class SpriteShape { kEllipse, kRectangle };

struct SpriteSpec {
  std::string label = "sprite";
  SpriteShape shape = SpriteShape::kEllipse;
  double half_height = 5.0;
  double half_width = 5.0;
  double depth = 1.0;  // planar z of the layer
  MotionProgram motion;
  bool instrument = false;
  std::uint64_t texture_seed = 1;
};

struct SynthConfig {
  int height = 32;
  int width = 32;
  int frames = 8;
  double fps = 25.0;
  double focal = 1.0;  // used to convert planar depth to ray depth
  double background_depth = 2.0;
  std::uint64_t background_seed = 7;
  MotionProgram background_motion;  // centered on the image when defaulted
  std::vector<SpriteSpec> sprites;
  // Flows are emitted for pairs with |i - j| <= pair_window; 0 = all pairs.
  int pair_window = 0;
  bool tracking = true;  // emit ground-truth tracks from frame 0
  std::uint64_t seed = 0;
};

// Two sprites on a textured background, derived from seed.
SynthConfig default_synth_config(std::uint64_t seed = 0);
// Adds `count` randomly placed sprites with distinct depth layers.
void add_random_sprites(SynthConfig& cfg, int count, std::uint64_t seed);

KeyValues to_kv(const SynthConfig& cfg);
// Keys are `synth.*`; `synth.sprites = N` generates N random sprites which
// `synth.sprite.K.*` keys may then override.
SynthConfig synth_config_from_kv(const KeyValues& kv);

void validate(const SynthConfig& cfg);

VideoClip synth_generate(const SynthConfig& cfg);

// Renders a clip whose frame k is generator time times[k].
VideoClip synth_render(const SynthConfig& cfg, std::span<const double> times);

// Exact flows between clip frames i and j for a clip rendered at `times`.
FlowField synth_flow(const SynthConfig& cfg, std::span<const double> times, int i, int j);

// Continuous transport of image point p on the surface visible at p in
// time ti to time tj. Returns nothing if no surface is visible there.
struct Transport {
  MotionProgram::Point position;
  bool visible = false;  // surface unoccluded and inside the image at tj
  int surface = -1;      // 0 = background, k + 1 = sprites[k]
};
std::optional<Transport> synth_transport(const SynthConfig& cfg, MotionProgram::Point p, double ti,
                                         double tj);

// Index of the front-most surface covering the continuous point at time t.
int synth_surface_at(const SynthConfig& cfg, MotionProgram::Point p, double t);

}  // namespace canonica::scene
