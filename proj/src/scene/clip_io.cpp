#include "canonica/scene/clip_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "canonica/errors.hpp"
#include "canonica/kv.hpp"
#include "canonica/scene/raster_io.hpp"

namespace canonica::scene {

namespace fs = std::filesystem;

namespace {

std::string frame_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d%s", index, ext);
  return buf;
}

std::optional<int> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) return std::nullopt;
  return v;
}

// Numbered files with the given extension, sorted by number.
std::vector<std::pair<int, fs::path>> numbered_files(const fs::path& dir, const std::string& ext) {
  std::vector<std::pair<int, fs::path>> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ext) continue;
    if (auto n = parse_number(entry.path().stem().string())) out.emplace_back(*n, entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <typename T>
Raster<T> resample(const Raster<T>& src, int r0, int c0, int side, int size) {
  Raster<T> out(size, size, src.channels);
  for (int r = 0; r < size; ++r) {
    const int sr = r0 + static_cast<int>((static_cast<long>(r) * side) / size);
    for (int c = 0; c < size; ++c) {
      const int sc = c0 + static_cast<int>((static_cast<long>(c) * side) / size);
      for (int ch = 0; ch < src.channels; ++ch) out.at(r, c, ch) = src.at(sr, sc, ch);
    }
  }
  return out;
}

}  // namespace

VideoClip crop_resize(const VideoClip& clip, int size) {
  if (size < 1) throw ConfigError("resize target must be >= 1");
  const int h = clip.height();
  const int w = clip.width();
  const int side = std::min(h, w);
  const int r0 = (h - side) / 2;
  const int c0 = (w - side) / 2;
  if (side == size && h == w) return clip;
  const double factor = static_cast<double>(size) / side;

  VideoClip out;
  out.labels = clip.labels;
  out.fps = clip.fps;
  out.synth_source = clip.synth_source;
  for (const auto& f : clip.frames) out.frames.push_back(resample(f, r0, c0, side, size));
  for (const auto& [label, per_frame] : clip.masks) {
    auto& dst = out.masks[label];
    for (const auto& [f, m] : per_frame) dst.emplace(f, resample(m, r0, c0, side, size));
  }
  for (const auto& [f, d] : clip.depth) out.depth.emplace(f, resample(d, r0, c0, side, size));
  for (const auto& [pair, flow] : clip.flows) {
    FlowField dst(size, size);
    for (int r = 0; r < size; ++r) {
      const int sr = r0 + static_cast<int>((static_cast<long>(r) * side) / size);
      for (int c = 0; c < size; ++c) {
        const int sc = c0 + static_cast<int>((static_cast<long>(c) * side) / size);
        const std::size_t s = flow.index(sr, sc);
        const std::size_t k = dst.index(r, c);
        dst.drow[k] = static_cast<float>(flow.drow[s] * factor);
        dst.dcol[k] = static_cast<float>(flow.dcol[s] * factor);
        dst.valid[k] = flow.valid[s];
      }
    }
    out.flows.emplace(pair, std::move(dst));
  }
  // Geometry changed, so the exact generator provenance no longer applies.
  out.synth_source.reset();
  return out;
}

VideoClip load_clip(const fs::path& dir, const LoadOptions& options) {
  if (!fs::is_directory(dir)) throw DataError("clip directory not found: " + dir.string());
  const auto frame_files = numbered_files(dir / "frames", ".ppm");
  if (frame_files.empty()) {
    throw DataError("no numbered frames (frames/%05d.ppm) in " + dir.string());
  }
  std::map<int, int> renumber;
  VideoClip clip;
  for (const auto& [n, path] : frame_files) {
    renumber.emplace(n, static_cast<int>(clip.frames.size()));
    clip.frames.push_back(read_ppm(path));
  }
  const int h = clip.frames.front().height;
  const int w = clip.frames.front().width;
  for (std::size_t k = 0; k < clip.frames.size(); ++k) {
    if (clip.frames[k].height != h || clip.frames[k].width != w) {
      throw DataError("inconsistent frame sizes: " + frame_files[k].second.string() + " is " +
                      std::to_string(clip.frames[k].height) + "x" +
                      std::to_string(clip.frames[k].width) + ", first frame is " +
                      std::to_string(h) + "x" + std::to_string(w));
    }
  }
  auto local_index = [&](int n, const fs::path& path) {
    auto it = renumber.find(n);
    if (it == renumber.end()) throw DataError(path.string() + " refers to a frame that does not exist");
    return it->second;
  };

  KeyValues meta;
  if (fs::exists(dir / "clip.cfg")) meta = KeyValues::load(dir / "clip.cfg");
  clip.fps = meta.get_double("fps", 25.0);

  if (fs::is_directory(dir / "masks")) {
    std::vector<fs::path> label_dirs;
    for (const auto& entry : fs::directory_iterator(dir / "masks")) {
      if (entry.is_directory()) label_dirs.push_back(entry.path());
    }
    std::sort(label_dirs.begin(), label_dirs.end());
    for (const auto& ld : label_dirs) {
      const std::string label = ld.filename().string();
      auto& per_frame = clip.masks[label];
      for (const auto& [n, path] : numbered_files(ld, ".pgm")) {
        per_frame.emplace(local_index(n, path), read_mask_pgm(path));
      }
    }
  }
  std::vector<std::string> mask_labels;
  for (const auto& [label, m] : clip.masks) mask_labels.push_back(label);
  clip.labels = meta.get_strings("labels", mask_labels);

  if (fs::is_directory(dir / "flows")) {
    for (const auto& entry : fs::directory_iterator(dir / "flows")) {
      if (!entry.is_regular_file() || entry.path().extension() != ".flo2") continue;
      const std::string stem = entry.path().stem().string();
      const auto sep = stem.find('_');
      const auto a = sep == std::string::npos ? std::nullopt : parse_number(std::string_view(stem).substr(0, sep));
      const auto b = sep == std::string::npos ? std::nullopt : parse_number(std::string_view(stem).substr(sep + 1));
      if (!a || !b) throw DataError("flow file name must be %05d_%05d.flo2: " + entry.path().string());
      clip.flows.emplace(FramePair{local_index(*a, entry.path()), local_index(*b, entry.path())},
                         read_flow(entry.path()));
    }
  }
  for (const auto& [n, path] : numbered_files(dir / "depth", ".f32")) {
    clip.depth.emplace(local_index(n, path), read_depth(path));
  }
  if (fs::exists(dir / "tracks" / "gt_tracks.trk")) {
    clip.gt_tracks = read_tracks(dir / "tracks" / "gt_tracks.trk");
    const auto& t = *clip.gt_tracks;
    if (t.height != h || t.width != w || t.start_frame + t.frames > clip.frame_count()) {
      throw DataError("ground-truth tracks do not match the clip geometry");
    }
  }
  if (fs::exists(dir / "synth.cfg")) {
    clip.synth_source = SynthProvenance{read_text(dir / "synth.cfg"), meta.get_doubles("synth_times", {})};
  }

  clip.validate();
  if (options.size > 0) clip = crop_resize(clip, options.size);
  return clip;
}

void save_clip(const VideoClip& clip, const fs::path& dir) {
  clip.validate();
  fs::create_directories(dir / "frames");
  for (int f = 0; f < clip.frame_count(); ++f) {
    write_ppm(dir / "frames" / frame_name(f, ".ppm"), clip.frames[static_cast<std::size_t>(f)]);
  }
  for (const auto& [label, per_frame] : clip.masks) {
    fs::create_directories(dir / "masks" / label);
    for (const auto& [f, m] : per_frame) write_mask_pgm(dir / "masks" / label / frame_name(f, ".pgm"), m);
  }
  if (!clip.flows.empty()) fs::create_directories(dir / "flows");
  for (const auto& [pair, flow] : clip.flows) {
    write_flow(dir / "flows" / (frame_name(pair.first, "_") + frame_name(pair.second, ".flo2")), flow);
  }
  if (!clip.depth.empty()) fs::create_directories(dir / "depth");
  for (const auto& [f, d] : clip.depth) write_depth(dir / "depth" / frame_name(f, ".f32"), d);
  if (clip.gt_tracks) {
    fs::create_directories(dir / "tracks");
    write_tracks(dir / "tracks" / "gt_tracks.trk", *clip.gt_tracks);
  }
  KeyValues meta;
  meta.set("fps", clip.fps);
  std::string labels;
  for (const auto& l : clip.labels) labels += (labels.empty() ? "" : ",") + l;
  meta.set("labels", labels);
  if (clip.synth_source) {
    std::string times;
    for (double t : clip.synth_source->times) times += (times.empty() ? "" : ",") + format_double(t);
    meta.set("synth_times", times);
    write_text(dir / "synth.cfg", clip.synth_source->config_text);
  }
  meta.save(dir / "clip.cfg");
}

}  // namespace canonica::scene
