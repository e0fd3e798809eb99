#include "canonica/eval/depth_metrics.hpp"

#include <cmath>
#include <fstream>

#include "canonica/errors.hpp"
#include "canonica/kv.hpp"
#include "canonica/render/renderer.hpp"

namespace canonica::eval {

namespace {

void check_sizes(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) throw std::invalid_argument("depth metrics: size mismatch");
}

}  // namespace

ScaleShift align_scale_shift(std::span<const double> pred, std::span<const double> gt,
                             std::span<const std::uint8_t> valid) {
  check_sizes(pred.size(), gt.size(), valid.size());
  // Normal equations of min || s pred + t - gt ||^2, solved around the means
  // for conditioning.
  double n = 0, mp = 0, mg = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!valid[k]) continue;
    n += 1;
    mp += pred[k];
    mg += gt[k];
  }
  if (n < 2) throw NumericError("scale-shift alignment needs at least 2 valid pixels");
  mp /= n;
  mg /= n;
  double spp = 0, spg = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!valid[k]) continue;
    spp += (pred[k] - mp) * (pred[k] - mp);
    spg += (pred[k] - mp) * (gt[k] - mg);
  }
  if (!(spp > 1e-300) || !std::isfinite(spp)) {
    throw NumericError("scale-shift alignment is singular: prediction is constant");
  }
  const double s = spg / spp;
  return ScaleShift{s, mg - s * mp};
}

DepthFrameMetrics aligned_depth_metrics(std::span<const double> aligned, std::span<const double> gt,
                                        std::span<const std::uint8_t> valid) {
  check_sizes(aligned.size(), gt.size(), valid.size());
  DepthFrameMetrics m;
  double n = 0;
  for (std::size_t k = 0; k < aligned.size(); ++k) {
    if (!valid[k]) continue;
    if (!(gt[k] > 0.0)) {
      throw NumericError("ground-truth depth must be positive on valid pixels (pixel " +
                         std::to_string(k) + " is " + format_double(gt[k]) + ")");
    }
    const double err = std::abs(aligned[k] - gt[k]);
    n += 1;
    m.mae += err;
    m.abs_rel += err / gt[k];
    const double ratio = std::max(aligned[k] / gt[k], gt[k] / aligned[k]);
    if (aligned[k] > 0.0 && ratio < 1.25) m.delta125 += 1;
  }
  if (n == 0) throw NumericError("no valid pixels for depth metrics");
  m.mae /= n;
  m.abs_rel = 100.0 * m.abs_rel / n;
  m.delta125 = 100.0 * m.delta125 / n;
  return m;
}

DepthFrameMetrics depth_metrics(std::span<const double> pred, std::span<const double> gt,
                                std::span<const std::uint8_t> valid) {
  const ScaleShift fit = align_scale_shift(pred, gt, valid);
  std::vector<double> aligned(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) aligned[k] = fit.scale * pred[k] + fit.shift;
  DepthFrameMetrics m = aligned_depth_metrics(aligned, gt, valid);
  m.fit = fit;
  return m;
}

RenderedDepth render_depth_map(const fields::SceneModel& model, int frame, int n_samples) {
  const render::Intrinsics& cam = model.config.camera;
  std::vector<render::RayRequest> rays;
  for (int r = 0; r < cam.height; ++r) {
    for (int c = 0; c < cam.width; ++c) {
      rays.push_back(render::RayRequest{render::PixelCoord{static_cast<double>(r), static_cast<double>(c)}, frame, frame});
    }
  }
  const auto out = render::render_rays(model, rays, n_samples, false);
  RenderedDepth d;
  d.depth = scene::DepthMap(cam.height, cam.width, 1);
  d.valid.resize(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    d.depth.data[k] = static_cast<float>(out[k].depth.depth);
    d.valid[k] = out[k].depth.valid ? 1 : 0;
  }
  return d;
}

DepthReport depth_report(const std::vector<std::pair<int, RenderedDepth>>& rendered,
                         const std::map<int, scene::DepthMap>& gt) {
  DepthReport report;
  for (const auto& [frame, r] : rendered) {
    auto it = gt.find(frame);
    if (it == gt.end()) continue;
    if (it->second.data.size() != r.depth.data.size()) {
      throw DataError("ground-truth depth of frame " + std::to_string(frame) + " has a different size");
    }
    const std::vector<double> pred(r.depth.data.begin(), r.depth.data.end());
    const std::vector<double> truth(it->second.data.begin(), it->second.data.end());
    report.frames.emplace_back(frame, depth_metrics(pred, truth, r.valid));
  }
  if (!report.frames.empty()) {
    const double n = static_cast<double>(report.frames.size());
    for (const auto& [f, m] : report.frames) {
      report.mean.mae += m.mae / n;
      report.mean.abs_rel += m.abs_rel / n;
      report.mean.delta125 += m.delta125 / n;
      report.mean.fit.scale += m.fit.scale / n;
      report.mean.fit.shift += m.fit.shift / n;
    }
  }
  return report;
}

void write_depth_csv(const std::filesystem::path& path, const std::string& video,
                     const DepthReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "video,frame,MAE,AbsRel,delta125,s,t\n";
  for (const auto& [frame, m] : report.frames) {
    out << video << ',' << frame << ',' << format_double(m.mae) << ',' << format_double(m.abs_rel)
        << ',' << format_double(m.delta125) << ',' << format_double(m.fit.scale) << ','
        << format_double(m.fit.shift) << '\n';
  }
  const auto& m = report.mean;
  out << video << ",mean," << format_double(m.mae) << ',' << format_double(m.abs_rel) << ','
      << format_double(m.delta125) << ',' << format_double(m.fit.scale) << ','
      << format_double(m.fit.shift) << '\n';
}

}  // namespace canonica::eval
