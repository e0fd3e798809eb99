#include "canonica/scene/raster_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "canonica/errors.hpp"
#include "canonica/scene/video_clip.hpp"

namespace canonica::scene {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary raster I/O assumes a little-endian host");

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw DataError(name_ + ": truncated file");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void expect_magic(const char (&magic)[5]) {
    if (bytes_.size() < 4 || bytes_.compare(0, 4, magic, 4) != 0) {
      throw DataError(name_ + ": bad magic, expected " + std::string(magic, 4));
    }
    pos_ = 4;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) throw DataError(name_ + ": unexpected trailing bytes");
  }

 private:
  const std::string& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

// Parses a binary PNM header; returns the offset of the pixel payload.
std::size_t parse_pnm_header(const std::string& bytes, const std::string& magic, int& width,
                             int& height, const std::string& name) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    int v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) throw DataError(name + ": malformed header");
    return v;
  };
  if (bytes.compare(0, 2, magic) != 0) throw DataError(name + ": expected " + magic + " image");
  pos = 2;
  width = read_int();
  height = read_int();
  const int maxval = read_int();
  if (maxval != 255) throw DataError(name + ": only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DataError(name + ": malformed header");
  }
  return pos + 1;
}

std::string pnm_header(const char* magic, int width, int height) {
  return std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
}

}  // namespace

float quantize_unit(double v) {
  const double clamped = std::min(1.0, std::max(0.0, v));
  return static_cast<float>(std::lround(clamped * 255.0)) / 255.0f;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  int w = 0;
  int h = 0;
  const std::size_t off = parse_pnm_header(bytes, "P6", w, h, path.string());
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() - off != n) throw DataError(path.string() + ": pixel payload has the wrong size");
  RgbImage img(h, w, 3);
  for (std::size_t k = 0; k < n; ++k) {
    img.data[k] = static_cast<float>(static_cast<unsigned char>(bytes[off + k])) / 255.0f;
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  if (image.channels != 3) throw DataError("write_ppm: image must have 3 channels");
  std::string out = pnm_header("P6", image.width, image.height);
  out.reserve(out.size() + image.data.size());
  for (float v : image.data) {
    out.push_back(static_cast<char>(std::lround(std::min(1.0f, std::max(0.0f, v)) * 255.0f)));
  }
  write_all(path, out);
}

Mask read_mask_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  int w = 0;
  int h = 0;
  const std::size_t off = parse_pnm_header(bytes, "P5", w, h, path.string());
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - off != n) throw DataError(path.string() + ": pixel payload has the wrong size");
  Mask m(h, w, 1);
  for (std::size_t k = 0; k < n; ++k) {
    m.data[k] = static_cast<unsigned char>(bytes[off + k]) >= 128 ? 1 : 0;
  }
  return m;
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
  std::string out = pnm_header("P5", mask.width, mask.height);
  for (auto v : mask.data) out.push_back(static_cast<char>(v ? 255 : 0));
  write_all(path, out);
}

DepthMap read_depth(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  ByteReader in(bytes, path.string());
  in.expect_magic("DPT1");
  const auto h = in.get<std::uint32_t>();
  const auto w = in.get<std::uint32_t>();
  const auto scale = in.get<float>();
  DepthMap d(static_cast<int>(h), static_cast<int>(w), 1);
  for (auto& v : d.data) v = in.get<float>() * scale;
  in.expect_end();
  return d;
}

void write_depth(const std::filesystem::path& path, const DepthMap& depth, float scale) {
  std::string out("DPT1");
  put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.width));
  put<float>(out, scale);
  for (float v : depth.data) put<float>(out, v / scale);
  write_all(path, out);
}

FlowField read_flow(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  ByteReader in(bytes, path.string());
  in.expect_magic("FLO2");
  const auto h = static_cast<int>(in.get<std::uint32_t>());
  const auto w = static_cast<int>(in.get<std::uint32_t>());
  FlowField f(h, w);
  for (std::size_t k = 0; k < f.drow.size(); ++k) {
    f.drow[k] = in.get<float>();
    f.dcol[k] = in.get<float>();
  }
  for (auto& v : f.valid) v = in.get<std::uint8_t>() ? 1 : 0;
  in.expect_end();
  return f;
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
  std::string out("FLO2");
  put<std::uint32_t>(out, static_cast<std::uint32_t>(flow.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(flow.width));
  for (std::size_t k = 0; k < flow.drow.size(); ++k) {
    put<float>(out, flow.drow[k]);
    put<float>(out, flow.dcol[k]);
  }
  for (auto v : flow.valid) put<std::uint8_t>(out, v ? 1 : 0);
  write_all(path, out);
}

GroundTruthTracks read_tracks(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  ByteReader in(bytes, path.string());
  in.expect_magic("TRK1");
  GroundTruthTracks t;
  t.start_frame = static_cast<int>(in.get<std::uint32_t>());
  t.frames = static_cast<int>(in.get<std::uint32_t>());
  t.height = static_cast<int>(in.get<std::uint32_t>());
  t.width = static_cast<int>(in.get<std::uint32_t>());
  const std::size_t n = static_cast<std::size_t>(t.frames) * static_cast<std::size_t>(t.height * t.width);
  t.row.resize(n);
  t.col.resize(n);
  t.visible.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    t.row[k] = in.get<float>();
    t.col[k] = in.get<float>();
  }
  for (auto& v : t.visible) v = in.get<std::uint8_t>() ? 1 : 0;
  in.expect_end();
  return t;
}

void write_tracks(const std::filesystem::path& path, const GroundTruthTracks& tracks) {
  std::string out("TRK1");
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tracks.start_frame));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tracks.frames));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tracks.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tracks.width));
  for (std::size_t k = 0; k < tracks.row.size(); ++k) {
    put<float>(out, tracks.row[k]);
    put<float>(out, tracks.col[k]);
  }
  for (auto v : tracks.visible) put<std::uint8_t>(out, v ? 1 : 0);
  write_all(path, out);
}

}  // namespace canonica::scene
