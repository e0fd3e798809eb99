#include "canonica/eval/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "canonica/errors.hpp"
#include "canonica/kv.hpp"
#include "canonica/render/renderer.hpp"

namespace canonica::eval {

TrackSet track_pixels(const fields::SceneModel& model, std::vector<render::PixelCoord> sources,
                      int start_frame, int n_samples) {
  const render::Intrinsics& cam = model.config.camera;
  if (start_frame < 0 || start_frame >= model.config.frames) {
    throw std::out_of_range("start frame " + std::to_string(start_frame) + " out of range");
  }
  TrackSet t;
  t.start_frame = start_frame;
  t.frames = model.config.frames;
  t.height = cam.height;
  t.width = cam.width;
  t.sources = std::move(sources);
  const std::size_t n = t.sources.size();
  t.positions.resize(n * static_cast<std::size_t>(t.frames));
  t.points.resize(t.positions.size());
  t.in_bounds.resize(t.positions.size());
  if (n == 0) return t;
  for (int j = 0; j < t.frames; ++j) {
    std::vector<render::RayRequest> rays;
    rays.reserve(n);
    for (const auto& p : t.sources) rays.push_back(render::RayRequest{p, start_frame, j});
    const auto out = render::render_rays(model, rays, n_samples, true);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = t.index(k, j);
      t.positions[idx] = out[k].correspondence.pixel;
      t.points[idx] = out[k].correspondence.point;
      t.in_bounds[idx] = render::inside_image(cam, t.positions[idx]) ? 1 : 0;
    }
  }
  return t;
}

TrackSet track_from_mask(const fields::SceneModel& model, const scene::VideoClip& clip,
                         const std::string& label, int start_frame, int n_samples) {
  const scene::Mask* mask = clip.mask(label, start_frame);
  if (mask == nullptr) {
    std::string available;
    for (const auto& [l, per_frame] : clip.masks) {
      if (per_frame.count(start_frame)) available += (available.empty() ? "" : ", ") + l;
    }
    throw DataError("no mask '" + label + "' at frame " + std::to_string(start_frame) +
                    "; available labels: " + (available.empty() ? "(none)" : available));
  }
  std::vector<render::PixelCoord> sources;
  for (int r = 0; r < mask->height; ++r) {
    for (int c = 0; c < mask->width; ++c) {
      if (mask->at(r, c) != 0) sources.push_back(render::PixelCoord{static_cast<double>(r), static_cast<double>(c)});
    }
  }
  TrackSet t = track_pixels(model, std::move(sources), start_frame, n_samples);
  t.label = label;
  return t;
}

TrackingAccuracy tracking_accuracy(const TrackSet& tracks, const scene::VideoClip& clip,
                                   const std::string& label) {
  TrackingAccuracy acc;
  for (int j = 0; j < tracks.frames; ++j) {
    if (j == tracks.start_frame) continue;
    const scene::Mask* mask = clip.mask(label, j);
    // An empty mask (object out of view) counts as no annotation.
    if (mask == nullptr || std::none_of(mask->data.begin(), mask->data.end(), [](auto v) { return v != 0; })) {
      continue;
    }
    int inside_image = 0;
    int inside_mask = 0;
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      const std::size_t idx = tracks.index(k, j);
      if (!tracks.in_bounds[idx]) continue;
      ++inside_image;
      const int r = static_cast<int>(std::lround(tracks.positions[idx].row));
      const int c = static_cast<int>(std::lround(tracks.positions[idx].col));
      if (mask->contains(r, c) && mask->at(r, c) != 0) ++inside_mask;
    }
    if (inside_image == 0) continue;
    acc.per_frame.emplace(j, static_cast<double>(inside_mask) / inside_image);
  }
  if (acc.per_frame.empty()) throw DataError("no evaluable predictions");
  double sum = 0.0;
  for (const auto& [j, a] : acc.per_frame) sum += a;
  acc.mean = sum / static_cast<double>(acc.per_frame.size());
  return acc;
}

double median_endpoint_error(const TrackSet& tracks, const scene::GroundTruthTracks& gt) {
  if (gt.start_frame != tracks.start_frame) {
    throw DataError("ground-truth tracks start at frame " + std::to_string(gt.start_frame) +
                    ", predictions at " + std::to_string(tracks.start_frame));
  }
  std::vector<double> errors;
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    const auto& src = tracks.sources[k];
    const int r = static_cast<int>(std::lround(src.row));
    const int c = static_cast<int>(std::lround(src.col));
    const int pixel = r * gt.width + c;
    for (int j = 0; j < std::min(tracks.frames, gt.frames); ++j) {
      if (j == tracks.start_frame) continue;
      const std::size_t g = gt.index(j, pixel);
      if (!gt.visible[g]) continue;
      const auto& p = tracks.positions[tracks.index(k, j)];
      errors.push_back(std::hypot(p.row - gt.row[g], p.col - gt.col[g]));
    }
  }
  if (errors.empty()) throw DataError("no visible ground-truth points to compare");
  const auto mid = errors.begin() + static_cast<std::ptrdiff_t>(errors.size() / 2);
  std::nth_element(errors.begin(), mid, errors.end());
  if (errors.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(errors.begin(), mid);
  return 0.5 * (lower + upper);
}

Aggregate aggregate_videos(const std::vector<double>& per_video) {
  Aggregate a;
  a.videos = static_cast<int>(per_video.size());
  if (per_video.empty()) return a;
  for (double v : per_video) a.mean += v;
  a.mean /= static_cast<double>(per_video.size());
  for (double v : per_video) a.std += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(a.std / static_cast<double>(per_video.size()));
  return a;
}

void write_tracks_csv(const std::filesystem::path& path, const TrackSet& tracks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "track_id,frame,row,col,x,y,z,in_bounds\n";
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    for (int j = 0; j < tracks.frames; ++j) {
      const std::size_t idx = tracks.index(k, j);
      const auto& p = tracks.positions[idx];
      const auto& x = tracks.points[idx];
      out << k << ',' << j << ',' << format_double(p.row) << ',' << format_double(p.col) << ','
          << format_double(x.x()) << ',' << format_double(x.y()) << ',' << format_double(x.z())
          << ',' << int(tracks.in_bounds[idx]) << '\n';
    }
  }
}

std::vector<scene::RgbImage> overlay_tracks(const scene::VideoClip& clip, const TrackSet& tracks) {
  std::vector<scene::RgbImage> out = clip.frames;
  for (int j = 0; j < std::min<int>(tracks.frames, clip.frame_count()); ++j) {
    scene::RgbImage& img = out[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      const std::size_t idx = tracks.index(k, j);
      if (!tracks.in_bounds[idx]) continue;
      const int r = static_cast<int>(std::lround(tracks.positions[idx].row));
      const int c = static_cast<int>(std::lround(tracks.positions[idx].col));
      if (!img.contains(r, c)) continue;
      img.at(r, c, 0) = 1.0f;
      img.at(r, c, 1) = 0.0f;
      img.at(r, c, 2) = 0.0f;
    }
  }
  return out;
}

}  // namespace canonica::eval
