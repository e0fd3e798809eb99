#include "canonica/scene/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "canonica/errors.hpp"
#include "canonica/scene/raster_io.hpp"

namespace canonica::scene {

using Point = MotionProgram::Point;

MotionProgram::Point MotionProgram::to_image(Point local, double time) const {
  const double deformed_c =
      local.col + wobble_amplitude * std::sin(wobble_frequency * local.row + wobble_speed * time);
  const double theta = angle0 + angular_velocity * time;
  const double s = std::exp(log_scale_rate * time);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  return Point{row0 + vrow * time + s * (ct * local.row - st * deformed_c),
               col0 + vcol * time + s * (st * local.row + ct * deformed_c)};
}

MotionProgram::Point MotionProgram::to_local(Point image, double time) const {
  const double theta = angle0 + angular_velocity * time;
  const double s = std::exp(log_scale_rate * time);
  const double dr = (image.row - row0 - vrow * time) / s;
  const double dc = (image.col - col0 - vcol * time) / s;
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double qr = ct * dr + st * dc;
  const double deformed_c = -st * dr + ct * dc;
  return Point{qr, deformed_c - wobble_amplitude *
                                    std::sin(wobble_frequency * qr + wobble_speed * time)};
}

namespace {

struct Texture {
  std::array<double, 3> base{};
  struct Wave {
    double kr;
    double kc;
    double phase;
    std::array<double, 3> amplitude;
  };
  std::vector<Wave> waves;

  std::array<float, 3> at(long tr, long tc) const {
    std::array<float, 3> out{};
    for (int ch = 0; ch < 3; ++ch) {
      double v = base[static_cast<std::size_t>(ch)];
      for (const Wave& w : waves) {
        v += w.amplitude[static_cast<std::size_t>(ch)] *
             std::sin(w.kr * static_cast<double>(tr) + w.kc * static_cast<double>(tc) + w.phase);
      }
      out[static_cast<std::size_t>(ch)] = quantize_unit(v);
    }
    return out;
  }
};

Texture make_texture(std::uint64_t seed, bool background) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + (background ? 17 : 3));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Texture t;
  for (auto& b : t.base) b = background ? 0.35 + 0.3 * unit(rng) : 0.15 + 0.7 * unit(rng);
  const int waves = background ? 4 : 2;
  const double kmin = background ? 0.6 : 0.4;
  const double kmax = background ? 1.4 : 0.9;
  const double amp = background ? 0.12 : 0.08;
  for (int k = 0; k < waves; ++k) {
    const double freq = kmin + (kmax - kmin) * unit(rng);
    const double angle = 2.0 * M_PI * unit(rng);
    Texture::Wave w{freq * std::cos(angle), freq * std::sin(angle), 2.0 * M_PI * unit(rng), {}};
    for (auto& a : w.amplitude) a = amp * (0.5 + unit(rng));
    t.waves.push_back(w);
  }
  return t;
}

struct Surface {
  int id = 0;  // 0 background, k + 1 sprite k
  double depth = 0.0;
  const MotionProgram* motion = nullptr;
  const SpriteSpec* sprite = nullptr;  // null for background
  Texture texture;

  bool covers_local(Point q) const {
    if (sprite == nullptr) return true;
    if (sprite->shape == SpriteShape::kRectangle) {
      return std::abs(q.row) <= sprite->half_height && std::abs(q.col) <= sprite->half_width;
    }
    const double a = q.row / sprite->half_height;
    const double b = q.col / sprite->half_width;
    return a * a + b * b <= 1.0;
  }
};

// Surfaces sorted front to back.
std::vector<Surface> build_surfaces(const SynthConfig& cfg) {
  std::vector<Surface> s;
  Surface bg;
  bg.id = 0;
  bg.depth = cfg.background_depth;
  bg.motion = &cfg.background_motion;
  bg.texture = make_texture(cfg.background_seed, true);
  s.push_back(bg);
  for (std::size_t k = 0; k < cfg.sprites.size(); ++k) {
    Surface sp;
    sp.id = static_cast<int>(k) + 1;
    sp.depth = cfg.sprites[k].depth;
    sp.motion = &cfg.sprites[k].motion;
    sp.sprite = &cfg.sprites[k];
    sp.texture = make_texture(cfg.sprites[k].texture_seed, false);
    s.push_back(sp);
  }
  std::sort(s.begin(), s.end(), [](const Surface& a, const Surface& b) { return a.depth < b.depth; });
  return s;
}

const Surface* front_surface(const std::vector<Surface>& surfaces, Point p, double t) {
  for (const Surface& s : surfaces) {
    if (s.covers_local(s.motion->to_local(p, t))) return &s;
  }
  return nullptr;
}

bool inside(const SynthConfig& cfg, Point p) {
  return p.row >= -0.5 && p.row < cfg.height - 0.5 && p.col >= -0.5 && p.col < cfg.width - 0.5;
}

Transport transport_on(const SynthConfig& cfg, const std::vector<Surface>& surfaces,
                       const Surface& s, Point p, double ti, double tj) {
  Transport out;
  out.surface = s.id;
  out.position = s.motion->to_image(s.motion->to_local(p, ti), tj);
  if (inside(cfg, out.position)) {
    const Surface* front = front_surface(surfaces, out.position, tj);
    out.visible = front != nullptr && front->id == s.id;
  }
  return out;
}

double ray_depth(const SynthConfig& cfg, double planar, int row, int col) {
  const double nx = (col - 0.5 * (cfg.width - 1)) / (0.5 * cfg.width) / cfg.focal;
  const double ny = (row - 0.5 * (cfg.height - 1)) / (0.5 * cfg.height) / cfg.focal;
  return planar * std::sqrt(1.0 + nx * nx + ny * ny);
}

std::vector<std::string> declared_labels(const SynthConfig& cfg) {
  std::vector<std::string> labels;
  for (const auto& sp : cfg.sprites) {
    if (std::find(labels.begin(), labels.end(), sp.label) == labels.end()) labels.push_back(sp.label);
  }
  return labels;
}

void motion_to_kv(KeyValues& kv, const std::string& prefix, const MotionProgram& m) {
  kv.set(prefix + "row0", m.row0);
  kv.set(prefix + "col0", m.col0);
  kv.set(prefix + "vrow", m.vrow);
  kv.set(prefix + "vcol", m.vcol);
  kv.set(prefix + "angle0", m.angle0);
  kv.set(prefix + "angular_velocity", m.angular_velocity);
  kv.set(prefix + "log_scale_rate", m.log_scale_rate);
  kv.set(prefix + "wobble_amplitude", m.wobble_amplitude);
  kv.set(prefix + "wobble_frequency", m.wobble_frequency);
  kv.set(prefix + "wobble_speed", m.wobble_speed);
}

void motion_from_kv(const KeyValues& kv, const std::string& prefix, MotionProgram& m) {
  m.row0 = kv.get_double(prefix + "row0", m.row0);
  m.col0 = kv.get_double(prefix + "col0", m.col0);
  m.vrow = kv.get_double(prefix + "vrow", m.vrow);
  m.vcol = kv.get_double(prefix + "vcol", m.vcol);
  m.angle0 = kv.get_double(prefix + "angle0", m.angle0);
  m.angular_velocity = kv.get_double(prefix + "angular_velocity", m.angular_velocity);
  m.log_scale_rate = kv.get_double(prefix + "log_scale_rate", m.log_scale_rate);
  m.wobble_amplitude = kv.get_double(prefix + "wobble_amplitude", m.wobble_amplitude);
  m.wobble_frequency = kv.get_double(prefix + "wobble_frequency", m.wobble_frequency);
  m.wobble_speed = kv.get_double(prefix + "wobble_speed", m.wobble_speed);
}

}  // namespace

void add_random_sprites(SynthConfig& cfg, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1DULL + 0x1234567ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int existing = static_cast<int>(cfg.sprites.size());
  const double h = cfg.height;
  const double w = cfg.width;
  for (int k = 0; k < count; ++k) {
    const int idx = existing + k;
    SpriteSpec sp;
    sp.label = "sprite" + std::to_string(idx);
    sp.shape = idx % 2 == 0 ? SpriteShape::kEllipse : SpriteShape::kRectangle;
    sp.half_height = h * (0.1 + 0.08 * unit(rng));
    sp.half_width = w * (0.1 + 0.08 * unit(rng));
    sp.depth = 1.0 + 0.9 * cfg.background_depth / 2.0 * static_cast<double>(idx) /
                         static_cast<double>(existing + count);
    sp.motion.row0 = h * (0.3 + 0.4 * unit(rng));
    sp.motion.col0 = w * (0.3 + 0.4 * unit(rng));
    sp.motion.vrow = -1.5 + 3.0 * unit(rng);
    sp.motion.vcol = -1.5 + 3.0 * unit(rng);
    sp.motion.angular_velocity = -0.05 + 0.1 * unit(rng);
    sp.texture_seed = seed * 31 + static_cast<std::uint64_t>(idx) + 101;
    cfg.sprites.push_back(sp);
  }
}

SynthConfig default_synth_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.background_seed = seed + 7;
  cfg.background_motion.row0 = 0.5 * (cfg.height - 1);
  cfg.background_motion.col0 = 0.5 * (cfg.width - 1);
  add_random_sprites(cfg, 2, seed);
  return cfg;
}

KeyValues to_kv(const SynthConfig& cfg) {
  KeyValues kv;
  kv.set("synth.height", cfg.height);
  kv.set("synth.width", cfg.width);
  kv.set("synth.frames", cfg.frames);
  kv.set("synth.fps", cfg.fps);
  kv.set("synth.focal", cfg.focal);
  kv.set("synth.background_depth", cfg.background_depth);
  kv.set("synth.background_seed", cfg.background_seed);
  motion_to_kv(kv, "synth.background.", cfg.background_motion);
  kv.set("synth.pair_window", cfg.pair_window);
  kv.set("synth.tracking", cfg.tracking);
  kv.set("synth.seed", cfg.seed);
  kv.set("synth.sprites", static_cast<int>(cfg.sprites.size()));
  for (std::size_t k = 0; k < cfg.sprites.size(); ++k) {
    const SpriteSpec& sp = cfg.sprites[k];
    const std::string p = "synth.sprite." + std::to_string(k) + ".";
    kv.set(p + "label", sp.label);
    kv.set(p + "shape", sp.shape == SpriteShape::kEllipse ? "ellipse" : "rectangle");
    kv.set(p + "half_height", sp.half_height);
    kv.set(p + "half_width", sp.half_width);
    kv.set(p + "depth", sp.depth);
    kv.set(p + "instrument", sp.instrument);
    kv.set(p + "texture_seed", sp.texture_seed);
    motion_to_kv(kv, p, sp.motion);
  }
  return kv;
}

SynthConfig synth_config_from_kv(const KeyValues& kv) {
  SynthConfig cfg;
  cfg.height = static_cast<int>(kv.get_int("synth.height", cfg.height));
  cfg.width = static_cast<int>(kv.get_int("synth.width", cfg.width));
  cfg.frames = static_cast<int>(kv.get_int("synth.frames", cfg.frames));
  cfg.fps = kv.get_double("synth.fps", cfg.fps);
  cfg.focal = kv.get_double("synth.focal", cfg.focal);
  cfg.background_depth = kv.get_double("synth.background_depth", cfg.background_depth);
  cfg.seed = kv.get_uint("synth.seed", cfg.seed);
  cfg.background_seed = kv.get_uint("synth.background_seed", cfg.seed + 7);
  cfg.background_motion.row0 = 0.5 * (cfg.height - 1);
  cfg.background_motion.col0 = 0.5 * (cfg.width - 1);
  motion_from_kv(kv, "synth.background.", cfg.background_motion);
  cfg.pair_window = static_cast<int>(kv.get_int("synth.pair_window", cfg.pair_window));
  cfg.tracking = kv.get_bool("synth.tracking", cfg.tracking);
  const auto count = kv.get_int("synth.sprites", 2);
  if (count < 0) throw ConfigError("synth.sprites must be >= 0");
  add_random_sprites(cfg, static_cast<int>(count), cfg.seed);
  for (std::size_t k = 0; k < cfg.sprites.size(); ++k) {
    SpriteSpec& sp = cfg.sprites[k];
    const std::string p = "synth.sprite." + std::to_string(k) + ".";
    sp.instrument = kv.get_bool(p + "instrument", sp.instrument);
    sp.label = kv.get_string(p + "label", sp.instrument ? "instrument" : sp.label);
    const std::string shape =
        kv.get_string(p + "shape", sp.shape == SpriteShape::kEllipse ? "ellipse" : "rectangle");
    if (shape == "ellipse") {
      sp.shape = SpriteShape::kEllipse;
    } else if (shape == "rectangle") {
      sp.shape = SpriteShape::kRectangle;
    } else {
      throw ConfigError(p + "shape: expected ellipse or rectangle, got '" + shape + "'");
    }
    sp.half_height = kv.get_double(p + "half_height", sp.half_height);
    sp.half_width = kv.get_double(p + "half_width", sp.half_width);
    sp.depth = kv.get_double(p + "depth", sp.depth);
    sp.texture_seed = kv.get_uint(p + "texture_seed", sp.texture_seed);
    motion_from_kv(kv, p, sp.motion);
  }
  return cfg;
}

void validate(const SynthConfig& cfg) {
  if (cfg.height < 1 || cfg.width < 1) throw ConfigError("synth: image size must be positive");
  if (cfg.frames < 1) throw ConfigError("synth: need at least one frame");
  if (!(cfg.fps > 0.0)) throw ConfigError("synth: fps must be positive");
  if (!(cfg.focal > 0.0)) throw ConfigError("synth: focal must be positive");
  if (cfg.pair_window < 0) throw ConfigError("synth: pair_window must be >= 0");
  if (cfg.tracking && cfg.sprites.empty()) {
    throw ConfigError("synth: zero sprites with tracking requested");
  }
  std::set<double> depths{cfg.background_depth};
  if (!(cfg.background_depth > 0.0)) throw ConfigError("synth: depths must be positive");
  for (const auto& sp : cfg.sprites) {
    if (!(sp.depth > 0.0)) throw ConfigError("synth: depths must be positive");
    if (!(sp.half_height > 0.0) || !(sp.half_width > 0.0)) {
      throw ConfigError("synth: sprite '" + sp.label + "' needs a positive size");
    }
    if (!depths.insert(sp.depth).second) {
      throw ConfigError("synth: sprite depth layers must be distinct (duplicate " +
                        format_double(sp.depth) + ")");
    }
  }
}

int synth_surface_at(const SynthConfig& cfg, Point p, double t) {
  const auto surfaces = build_surfaces(cfg);
  const Surface* s = front_surface(surfaces, p, t);
  return s ? s->id : -1;
}

std::optional<Transport> synth_transport(const SynthConfig& cfg, Point p, double ti, double tj) {
  const auto surfaces = build_surfaces(cfg);
  const Surface* s = front_surface(surfaces, p, ti);
  if (s == nullptr) return std::nullopt;
  return transport_on(cfg, surfaces, *s, p, ti, tj);
}

FlowField synth_flow(const SynthConfig& cfg, std::span<const double> times, int i, int j) {
  const auto surfaces = build_surfaces(cfg);
  FlowField f(cfg.height, cfg.width);
  const double ti = times[static_cast<std::size_t>(i)];
  const double tj = times[static_cast<std::size_t>(j)];
  for (int r = 0; r < cfg.height; ++r) {
    for (int c = 0; c < cfg.width; ++c) {
      const Point p{static_cast<double>(r), static_cast<double>(c)};
      const Surface* s = front_surface(surfaces, p, ti);
      const Transport t = transport_on(cfg, surfaces, *s, p, ti, tj);
      const std::size_t k = f.index(r, c);
      f.drow[k] = static_cast<float>(t.position.row - p.row);
      f.dcol[k] = static_cast<float>(t.position.col - p.col);
      f.valid[k] = t.visible ? 1 : 0;
    }
  }
  return f;
}

VideoClip synth_render(const SynthConfig& cfg, std::span<const double> times) {
  validate(cfg);
  const auto surfaces = build_surfaces(cfg);
  const int n = static_cast<int>(times.size());
  VideoClip clip;
  clip.fps = cfg.fps;
  clip.labels = declared_labels(cfg);
  for (const auto& label : clip.labels) clip.masks[label];

  for (int f = 0; f < n; ++f) {
    const double t = times[static_cast<std::size_t>(f)];
    RgbImage img(cfg.height, cfg.width, 3);
    DepthMap depth(cfg.height, cfg.width, 1);
    std::map<std::string, Mask> masks;
    for (const auto& label : clip.labels) masks.emplace(label, Mask(cfg.height, cfg.width, 1));
    for (int r = 0; r < cfg.height; ++r) {
      for (int c = 0; c < cfg.width; ++c) {
        const Point p{static_cast<double>(r), static_cast<double>(c)};
        const Surface* s = front_surface(surfaces, p, t);
        const Point q = s->motion->to_local(p, t);
        const auto rgb = s->texture.at(std::lround(q.row), std::lround(q.col));
        for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = rgb[static_cast<std::size_t>(ch)];
        depth.at(r, c) = static_cast<float>(ray_depth(cfg, s->depth, r, c));
        if (s->sprite != nullptr) masks.at(s->sprite->label).at(r, c) = 1;
      }
    }
    clip.frames.push_back(std::move(img));
    clip.depth.emplace(f, std::move(depth));
    for (auto& [label, m] : masks) clip.masks[label].emplace(f, std::move(m));
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (cfg.pair_window > 0 && std::abs(i - j) > cfg.pair_window) continue;
      clip.flows.emplace(FramePair{i, j}, synth_flow(cfg, times, i, j));
    }
  }

  if (cfg.tracking && n > 0) {
    GroundTruthTracks tr;
    tr.start_frame = 0;
    tr.frames = n;
    tr.height = cfg.height;
    tr.width = cfg.width;
    const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(cfg.height * cfg.width);
    tr.row.resize(total);
    tr.col.resize(total);
    tr.visible.resize(total);
    for (int f = 0; f < n; ++f) {
      for (int r = 0; r < cfg.height; ++r) {
        for (int c = 0; c < cfg.width; ++c) {
          const Point p{static_cast<double>(r), static_cast<double>(c)};
          const Surface* s = front_surface(surfaces, p, times[0]);
          const Transport t = transport_on(cfg, surfaces, *s, p, times[0], times[static_cast<std::size_t>(f)]);
          const std::size_t k = tr.index(f, r * cfg.width + c);
          tr.row[k] = static_cast<float>(t.position.row);
          tr.col[k] = static_cast<float>(t.position.col);
          tr.visible[k] = t.visible ? 1 : 0;
        }
      }
    }
    clip.gt_tracks = std::move(tr);
  }

  clip.synth_source = SynthProvenance{to_kv(cfg).to_text(), std::vector<double>(times.begin(), times.end())};
  return clip;
}

VideoClip synth_generate(const SynthConfig& cfg) {
  std::vector<double> times(static_cast<std::size_t>(std::max(cfg.frames, 0)));
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = static_cast<double>(k);
  return synth_render(cfg, times);
}

}  // namespace canonica::scene
