#include "canonica/eval/ablation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "canonica/errors.hpp"
#include "canonica/eval/tracking.hpp"
#include "canonica/kv.hpp"
#include "canonica/scene/subsample.hpp"
#include "canonica/train/trainer.hpp"

namespace canonica::eval {

namespace {

std::vector<std::string> labels_at(const scene::VideoClip& clip, int frame) {
  std::vector<std::string> out;
  for (const auto& label : clip.labels) {
    const scene::Mask* m = clip.mask(label, frame);
    if (m != nullptr && std::any_of(m->data.begin(), m->data.end(), [](auto v) { return v != 0; })) out.push_back(label);
  }
  return out;
}

}  // namespace

std::vector<AblationCell> run_ablation(const scene::VideoClip& clip, const train::TrainConfig& cfg,
                                       const AblationOptions& options) {
  if (options.fractions.empty() || options.w_classes.empty()) {
    throw ConfigError("ablation needs at least one fraction and one w_class");
  }
  std::vector<AblationCell> cells;
  for (double fraction : options.fractions) {
    const int stride = scene::subsample_stride(fraction);
    if (options.start_frame % stride != 0) {
      throw ConfigError("start frame " + std::to_string(options.start_frame) +
                        " is dropped by subsampling at " + format_double(fraction));
    }
    const scene::VideoClip sub = scene::temporal_subsample(clip, fraction);
    const int start = options.start_frame / stride;
    const std::vector<std::string> labels =
        options.labels.empty() ? labels_at(sub, start) : options.labels;
    if (labels.empty()) {
      throw DataError("no label has a mask at frame " + std::to_string(options.start_frame));
    }
    for (double w : options.w_classes) {
      train::TrainConfig run = cfg;
      run.seed = cfg.seed + static_cast<std::uint64_t>(stride - 1);
      run.w_class = w;
      train::validate(run);
      const fields::SceneModel model = train::train(sub, run).model;
      for (const auto& label : labels) {
        const TrackSet tracks = track_from_mask(model, sub, label, start, run.n_samples);
        const TrackingAccuracy acc = tracking_accuracy(tracks, sub, label);
        const Aggregate agg = aggregate_videos({acc.mean});
        cells.push_back(AblationCell{options.video, label, w, fraction, sub.frame_count(),
                                     100.0 * agg.mean, 100.0 * agg.std});
      }
    }
  }
  return cells;
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationCell>& cells) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "video,label,w_class,fraction,frames,mean_acc,std\n";
  for (const auto& c : cells) {
    out << c.video << ',' << c.label << ',' << format_double(c.w_class) << ','
        << format_double(c.fraction) << ',' << c.frames << ',' << format_double(c.mean_acc) << ','
        << format_double(c.std) << '\n';
  }
}

void write_ablation_table(const std::filesystem::path& path, const std::vector<AblationCell>& cells) {
  std::vector<double> weights;
  std::vector<std::pair<std::string, double>> rows;
  std::map<std::pair<std::pair<std::string, double>, double>, const AblationCell*> lookup;
  for (const auto& c : cells) {
    if (std::find(weights.begin(), weights.end(), c.w_class) == weights.end()) weights.push_back(c.w_class);
    const std::pair<std::string, double> key{c.label, c.fraction};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
    lookup[{key, c.w_class}] = &c;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "label,fraction,frames";
  for (double w : weights) out << ",w_class=" << format_double(w);
  out << '\n';
  for (const auto& key : rows) {
    int frames = 0;
    std::string line;
    for (double w : weights) {
      auto it = lookup.find({key, w});
      line += ',';
      if (it != lookup.end()) {
        frames = it->second->frames;
        line += format_double(it->second->mean_acc);
      }
    }
    out << key.first << ',' << format_double(key.second) << ',' << frames << line << '\n';
  }
}

}  // namespace canonica::eval
