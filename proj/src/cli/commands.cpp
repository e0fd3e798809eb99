#include "canonica/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "canonica/errors.hpp"
#include "canonica/eval/ablation.hpp"
#include "canonica/eval/depth_metrics.hpp"
#include "canonica/eval/tracking.hpp"
#include "canonica/fields/checkpoint.hpp"
#include "canonica/scene/clip_io.hpp"
#include "canonica/scene/raster_io.hpp"
#include "canonica/scene/synth.hpp"
#include "canonica/train/trainer.hpp"

namespace fs = std::filesystem;

namespace canonica::cli {

namespace {

std::string numbered(int n, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d%s", n, ext);
  return buf;
}

std::string require(const KeyValues& cfg, const std::string& key, const std::string& flag) {
  const std::string v = cfg.get_string(key, "");
  if (v.empty()) throw ConfigError("missing " + flag + " (config key " + key + ")");
  return v;
}

// Output files a command owns; an existing one is a collision unless forced.
void claim_outputs(const fs::path& dir, const std::vector<fs::path>& owned, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw ConfigError(dir.string() + " exists and is not a directory");
  }
  for (const auto& name : owned) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) continue;
    if (!force) throw ConfigError(p.string() + " already exists (pass --force to overwrite)");
    fs::remove_all(p);
  }
  fs::create_directories(dir);
}

void echo(const fs::path& dir, const std::string& command, const KeyValues& run_keys,
          const KeyValues& resolved) {
  KeyValues out;
  out.set("run.command", command);
  out.merge(run_keys);
  out.merge(resolved);
  out.save(dir / "run.cfg");
}

KeyValues pick(const KeyValues& cfg, const std::vector<std::string>& keys) {
  KeyValues out;
  for (const auto& k : keys) {
    if (cfg.has(k)) out.set(k, cfg.get_string(k, ""));
  }
  return out;
}

scene::VideoClip load(const KeyValues& cfg) {
  scene::LoadOptions opt;
  opt.size = static_cast<int>(cfg.get_int("run.size", 0));
  return scene::load_clip(require(cfg, "run.clip", "--clip"), opt);
}

train::TrainConfig train_config(const KeyValues& cfg) {
  const std::string preset = cfg.get_string("train.preset", "standard");
  train::TrainConfig base;
  if (preset == "desk") {
    base = train::desk_train_config();
  } else if (preset != "standard") {
    throw ConfigError("train.preset: expected standard or desk, got '" + preset + "'");
  }
  train::TrainConfig c = train::train_config_from_kv(cfg, base);
  train::validate(c);
  return c;
}

void print_record(const train::LossRecord& r) {
  std::cout << "iter " << r.iteration << "  L_flow " << format_double(r.flow) << "  L_color "
            << format_double(r.color) << "  L_other " << format_double(r.other) << "  total "
            << format_double(r.total) << '\n';
}

}  // namespace

void cmd_synth(const KeyValues& cfg) {
  const fs::path out = require(cfg, "run.out", "--out");
  const scene::SynthConfig sc = scene::synth_config_from_kv(cfg);
  scene::validate(sc);
  const scene::VideoClip clip = scene::synth_generate(sc);
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!cfg.get_bool("run.force", false)) {
      throw ConfigError(out.string() + " already exists (pass --force to overwrite)");
    }
    fs::remove_all(out);
  }
  scene::save_clip(clip, out);
  KeyValues resolved = scene::to_kv(sc);
  echo(out, "synth", pick(cfg, {"run.out"}), resolved);
  std::cout << "wrote " << clip.frame_count() << " frames (" << clip.height() << "x"
            << clip.width() << ", " << sc.sprites.size() << " sprites) to " << out.string() << '\n';
}

void cmd_train(const KeyValues& cfg) {
  const fs::path out = require(cfg, "run.out", "--out");
  const train::TrainConfig tc = train_config(cfg);
  const scene::VideoClip clip = load(cfg);
  const std::string resume_path = cfg.get_string("run.resume", "");

  std::optional<fields::SceneModel> resume;
  std::vector<train::LossRecord> history;
  if (!resume_path.empty()) {
    resume = fields::load_checkpoint(resume_path);
    const fs::path prior = fs::path(resume_path).parent_path() / "loss.csv";
    if (fs::exists(prior)) {
      for (const auto& r : train::read_loss_csv(prior)) {
        if (r.iteration < resume->iteration) history.push_back(r);
      }
    }
  }
  const bool force = cfg.get_bool("run.force", false) || !resume_path.empty();
  claim_outputs(out, {"checkpoint.ckpt", "loss.csv", "run.cfg"}, force);

  const fs::path ckpt = out / "checkpoint.ckpt";
  train::TrainHooks hooks;
  hooks.checkpoint = [&](const fields::SceneModel& m) { fields::save_checkpoint(m, ckpt); };
  if (!cfg.get_bool("run.quiet", false)) hooks.log = print_record;

  train::TrainResult result = train::train(clip, tc, std::move(resume), hooks);
  fields::save_checkpoint(result.model, ckpt);
  history.insert(history.end(), result.history.begin(), result.history.end());
  train::write_loss_csv(out / "loss.csv", history);
  echo(out, "train", pick(cfg, {"run.clip", "run.out", "run.resume", "run.size"}),
       [&] {
         KeyValues kv;
         kv.set("train.preset", cfg.get_string("train.preset", "standard"));
         kv.merge(train::to_kv(tc));
         return kv;
       }());
  std::cout << "checkpoint " << ckpt.string() << " at iteration " << result.model.iteration << '\n';
}

void cmd_track(const KeyValues& cfg) {
  const fs::path out = require(cfg, "run.out", "--out");
  const fields::SceneModel model =
      fields::load_checkpoint(require(cfg, "run.checkpoint", "--checkpoint"));
  const scene::VideoClip clip = load(cfg);
  const std::string label = require(cfg, "track.label", "--label");
  const int start = static_cast<int>(cfg.get_int("track.start_frame", 0));
  const int samples = static_cast<int>(cfg.get_int("track.n_samples", 32));
  if (samples < 1) throw ConfigError("track.n_samples must be >= 1");

  const eval::TrackSet tracks = eval::track_from_mask(model, clip, label, start, samples);
  claim_outputs(out, {"tracks.csv", "overlays", "accuracy.csv", "run.cfg"},
                cfg.get_bool("run.force", false));
  eval::write_tracks_csv(out / "tracks.csv", tracks);
  fs::create_directories(out / "overlays");
  const auto overlays = eval::overlay_tracks(clip, tracks);
  for (std::size_t f = 0; f < overlays.size(); ++f) {
    scene::write_ppm(out / "overlays" / numbered(static_cast<int>(f), ".ppm"), overlays[f]);
  }

  bool evaluable = false;
  for (int f = 0; f < clip.frame_count(); ++f) evaluable |= f != start && clip.mask(label, f);
  if (evaluable) {
    const eval::TrackingAccuracy acc = eval::tracking_accuracy(tracks, clip, label);
    std::ofstream csv(out / "accuracy.csv", std::ios::binary);
    csv << "label,frame,accuracy\n";
    for (const auto& [f, a] : acc.per_frame) csv << label << ',' << f << ',' << format_double(a) << '\n';
    csv << label << ",mean," << format_double(acc.mean) << '\n';
    std::cout << "tracking accuracy (" << label << "): " << format_double(100.0 * acc.mean) << "%\n";
  }
  KeyValues resolved;
  resolved.set("track.label", label);
  resolved.set("track.start_frame", start);
  resolved.set("track.n_samples", samples);
  echo(out, "track", pick(cfg, {"run.checkpoint", "run.clip", "run.out", "run.size"}), resolved);
  std::cout << tracks.size() << " tracks over " << tracks.frames << " frames written to "
            << (out / "tracks.csv").string() << '\n';
}

void cmd_depth(const KeyValues& cfg) {
  const fs::path out = require(cfg, "run.out", "--out");
  const fields::SceneModel model =
      fields::load_checkpoint(require(cfg, "run.checkpoint", "--checkpoint"));
  const scene::VideoClip clip = load(cfg);
  const int samples = static_cast<int>(cfg.get_int("depth.n_samples", 32));
  if (samples < 1) throw ConfigError("depth.n_samples must be >= 1");
  if (model.config.frames != clip.frame_count() || model.config.camera.height != clip.height() ||
      model.config.camera.width != clip.width()) {
    throw DataError("checkpoint geometry does not match the clip");
  }
  claim_outputs(out, {"depth", "depth_metrics.csv", "run.cfg"}, cfg.get_bool("run.force", false));
  fs::create_directories(out / "depth");

  std::vector<std::pair<int, eval::RenderedDepth>> rendered;
  for (int f = 0; f < clip.frame_count(); ++f) {
    eval::RenderedDepth d = eval::render_depth_map(model, f, samples);
    scene::DepthMap raster = d.depth;
    for (std::size_t k = 0; k < raster.data.size(); ++k) {
      if (!d.valid[k]) raster.data[k] = 0.0f;
    }
    scene::write_depth(out / "depth" / numbered(f, ".f32"), raster);
    rendered.emplace_back(f, std::move(d));
  }
  if (!clip.depth.empty()) {
    const eval::DepthReport report = eval::depth_report(rendered, clip.depth);
    eval::write_depth_csv(out / "depth_metrics.csv", cfg.get_string("depth.video", "clip"), report);
    std::cout << "aligned depth: MAE " << format_double(report.mean.mae) << "  AbsRel "
              << format_double(report.mean.abs_rel) << "%  delta<1.25 "
              << format_double(report.mean.delta125) << "%\n";
  }
  KeyValues resolved;
  resolved.set("depth.n_samples", samples);
  if (cfg.has("depth.video")) resolved.set("depth.video", cfg.get_string("depth.video", ""));
  echo(out, "depth", pick(cfg, {"run.checkpoint", "run.clip", "run.out", "run.size"}), resolved);
  std::cout << clip.frame_count() << " depth rasters written to " << (out / "depth").string() << '\n';
}

void cmd_eval(const KeyValues& cfg) {
  const fs::path out = require(cfg, "run.out", "--out");
  const bool force = cfg.get_bool("run.force", false);

  if (cfg.get_bool("eval.ablation", false)) {
    if (split_list(require(cfg, "run.clip", "--clip")).size() != 1) {
      throw ConfigError("--ablation takes exactly one --clip");
    }
    const scene::VideoClip clip = load(cfg);
    const train::TrainConfig tc = train_config(cfg);
    eval::AblationOptions opt;
    opt.fractions = cfg.get_doubles("eval.fractions", opt.fractions);
    opt.w_classes = cfg.get_doubles("eval.w_classes", opt.w_classes);
    opt.labels = cfg.get_strings("eval.labels", {});
    opt.start_frame = static_cast<int>(cfg.get_int("eval.start_frame", 0));
    opt.video = cfg.get_string("eval.video", fs::path(require(cfg, "run.clip", "--clip")).filename().string());
    claim_outputs(out, {"ablation.csv", "ablation_table.csv", "run.cfg"}, force);
    const auto cells = eval::run_ablation(clip, tc, opt);
    eval::write_ablation_csv(out / "ablation.csv", cells);
    eval::write_ablation_table(out / "ablation_table.csv", cells);
    KeyValues resolved;
    resolved.set("eval.ablation", true);
    resolved.merge(pick(cfg, {"eval.fractions", "eval.w_classes", "eval.labels", "eval.start_frame"}));
    resolved.set("eval.video", opt.video);
    resolved.set("train.preset", cfg.get_string("train.preset", "standard"));
    resolved.merge(train::to_kv(tc));
    echo(out, "eval", pick(cfg, {"run.clip", "run.out", "run.size"}), resolved);
    std::cout << cells.size() << " ablation cells written to " << (out / "ablation.csv").string() << '\n';
    return;
  }

  const auto checkpoints = cfg.get_strings("eval.checkpoints", {});
  const auto clips = cfg.get_strings("eval.clips", {});
  if (checkpoints.empty() || checkpoints.size() != clips.size()) {
    throw ConfigError("eval needs matching --checkpoint/--clip pairs (or --ablation)");
  }
  const auto labels = cfg.get_strings("eval.labels", {});
  if (labels.empty()) throw ConfigError("missing --label (config key eval.labels)");
  const int start = static_cast<int>(cfg.get_int("eval.start_frame", 0));
  const int samples = static_cast<int>(cfg.get_int("eval.n_samples", 32));
  scene::LoadOptions lo;
  lo.size = static_cast<int>(cfg.get_int("run.size", 0));

  claim_outputs(out, {"tracking.csv", "tracking_summary.csv", "run.cfg"}, force);
  std::ofstream rows(out / "tracking.csv", std::ios::binary);
  rows << "video,label,frames,mean_acc,median_epe\n";
  std::map<std::string, std::vector<double>> per_label;
  for (std::size_t v = 0; v < clips.size(); ++v) {
    const fields::SceneModel model = fields::load_checkpoint(checkpoints[v]);
    const scene::VideoClip clip = scene::load_clip(clips[v], lo);
    const std::string video = fs::path(clips[v]).filename().string();
    for (const auto& label : labels) {
      const eval::TrackSet tracks = eval::track_from_mask(model, clip, label, start, samples);
      const double acc = eval::tracking_accuracy(tracks, clip, label).mean;
      std::string epe;
      if (clip.gt_tracks && clip.gt_tracks->start_frame == start) {
        epe = format_double(eval::median_endpoint_error(tracks, *clip.gt_tracks));
      }
      rows << video << ',' << label << ',' << clip.frame_count() << ','
           << format_double(100.0 * acc) << ',' << epe << '\n';
      per_label[label].push_back(acc);
    }
  }
  std::ofstream summary(out / "tracking_summary.csv", std::ios::binary);
  summary << "label,videos,mean_acc,std\n";
  for (const auto& label : labels) {
    const eval::Aggregate agg = eval::aggregate_videos(per_label[label]);
    summary << label << ',' << agg.videos << ',' << format_double(100.0 * agg.mean) << ','
            << format_double(100.0 * agg.std) << '\n';
    std::cout << label << ": " << format_double(100.0 * agg.mean) << "% +- "
              << format_double(100.0 * agg.std) << " over " << agg.videos << " video(s)\n";
  }
  echo(out, "eval", pick(cfg, {"run.out", "run.size"}),
       pick(cfg, {"eval.checkpoints", "eval.clips", "eval.labels", "eval.start_frame", "eval.n_samples"}));
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Test-time optimized neural field for dense video tracking and pseudo-depth"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "canonica 0.1.0");

  std::string config_path;
  KeyValues flags;
  // Flag values land in `flags` under their config key; repeated list
  // flags accumulate into comma lists.
  auto bind = [&](CLI::App* sub, const std::string& name, const std::string& key,
                  const std::string& help) {
    sub->add_option_function<std::vector<std::string>>(
        name,
        [&flags, key](const std::vector<std::string>& vs) {
          std::string joined;
          for (const auto& v : vs) joined += (joined.empty() ? "" : ",") + v;
          flags.set(key, joined);
        },
        help);
  };
  auto bind_flag = [&](CLI::App* sub, const std::string& name, const std::string& key,
                       const std::string& help) {
    sub->add_flag_callback(name, [&flags, key] { flags.set(key, true); }, help);
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file; flags override it")
        ->check(CLI::ExistingFile);
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&flags](const std::vector<std::string>& vs) {
          for (const auto& v : vs) {
            const auto eq = v.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + v + "'");
            flags.set(v.substr(0, eq), v.substr(eq + 1));
          }
        },
        "override any config key (key=value), repeatable");
    bind_flag(sub, "--force", "run.force", "overwrite existing outputs");
    bind(sub, "--out", "run.out", "output directory");
  };
  auto training = [&](CLI::App* sub) {
    bind(sub, "--preset", "train.preset", "standard or desk (small CPU-sized model)");
    bind(sub, "--iterations", "train.iterations", "optimization steps");
    bind(sub, "--seed", "train.seed", "run seed");
    bind(sub, "--w-class", "train.w_class", "weight of instrument-labelled correspondences");
    bind(sub, "--lambda", "train.lambda", "color-loss weight");
    bind(sub, "--lr-color", "train.lr_color", "Adam learning rate");
    bind(sub, "--lr-flow", "train.lr_flow", "flow learning rate (scales the flow loss)");
    bind(sub, "--batch", "train.batch_correspondences", "correspondences per step");
    bind(sub, "--samples", "train.n_samples", "samples per ray");
    bind(sub, "--instrument-labels", "train.instrument_labels", "labels weighted by w_class");
    bind(sub, "--size", "run.size", "center-crop and resize frames to size x size");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic clip with exact ground truth");
  common(synth);
  bind(synth, "--seed", "synth.seed", "generator seed");
  bind(synth, "--frames", "synth.frames", "frame count");
  bind(synth, "--height", "synth.height", "frame height");
  bind(synth, "--width", "synth.width", "frame width");
  bind(synth, "--sprites", "synth.sprites", "number of random sprites");
  bind(synth, "--pair-window", "synth.pair_window", "flows for |i-j| <= window (0 = all pairs)");

  CLI::App* trn = app.add_subcommand("train", "optimize a scene model on a clip");
  common(trn);
  training(trn);
  bind(trn, "--clip", "run.clip", "clip directory");
  bind(trn, "--resume", "run.resume", "checkpoint to continue from");
  bind(trn, "--checkpoint-every", "train.checkpoint_every", "intermediate checkpoint period");
  bind(trn, "--log-every", "train.log_every", "loss logging period");
  bind_flag(trn, "--quiet", "run.quiet", "do not print the loss log");

  CLI::App* trk = app.add_subcommand("track", "propagate a mask through the clip");
  common(trk);
  bind(trk, "--checkpoint", "run.checkpoint", "trained checkpoint");
  bind(trk, "--clip", "run.clip", "clip directory");
  bind(trk, "--label", "track.label", "mask label to track");
  bind(trk, "--start-frame", "track.start_frame", "frame holding the start mask");
  bind(trk, "--samples", "track.n_samples", "samples per ray");
  bind(trk, "--size", "run.size", "center-crop and resize frames to size x size");

  CLI::App* dep = app.add_subcommand("depth", "export pseudo-depth and aligned metrics");
  common(dep);
  bind(dep, "--checkpoint", "run.checkpoint", "trained checkpoint");
  bind(dep, "--clip", "run.clip", "clip directory");
  bind(dep, "--samples", "depth.n_samples", "samples per ray");
  bind(dep, "--video", "depth.video", "video name in the metrics CSV");
  bind(dep, "--size", "run.size", "center-crop and resize frames to size x size");

  CLI::App* evl = app.add_subcommand("eval", "tracking tables and temporal-resolution ablation");
  common(evl);
  training(evl);
  bind(evl, "--checkpoint", "eval.checkpoints", "checkpoint, repeatable (pairs with --clip)");
  bind(evl, "--clip", "eval.clips", "clip directory, repeatable");
  bind(evl, "--label", "eval.labels", "label(s) to evaluate");
  bind(evl, "--start-frame", "eval.start_frame", "frame holding the start mask");
  bind(evl, "--fractions", "eval.fractions", "kept-frame fractions for --ablation");
  bind(evl, "--w-classes", "eval.w_classes", "w_class values for --ablation");
  bind_flag(evl, "--ablation", "eval.ablation", "train and score one model per (fraction, w_class)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    KeyValues cfg;
    if (!config_path.empty()) cfg = KeyValues::load(config_path);
    // The ablation trains on a single clip, passed the same way.
    if (evl->parsed() && flags.has("eval.clips")) flags.set("run.clip", flags.get_string("eval.clips", ""));
    cfg.merge(flags);
    if (synth->parsed()) cmd_synth(cfg);
    if (trn->parsed()) cmd_train(cfg);
    if (trk->parsed()) cmd_track(cfg);
    if (dep->parsed()) cmd_depth(cfg);
    if (evl->parsed()) cmd_eval(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args);
}

}  // namespace canonica::cli
