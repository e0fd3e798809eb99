#include "canonica/train/losses.hpp"

#include <algorithm>

#include "canonica/train/parallel.hpp"

namespace canonica::train {

namespace {

constexpr double kEntropyEps = 1e-10;
constexpr std::size_t kDefaultChunk = 64;

std::vector<render::RayRequest> requests_for(std::span<const Correspondence> entries) {
  std::vector<render::RayRequest> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    out.push_back(render::RayRequest{render::PixelCoord{static_cast<double>(e.row), static_cast<double>(e.col)}, e.i, e.j});
  }
  return out;
}

}  // namespace

LossOptions loss_options(const TrainConfig& cfg) {
  return LossOptions{cfg.flow_scale(), cfg.lambda, cfg.w_class, cfg.smooth_weight, cfg.entropy_weight};
}

int smoothness_neighbor(int frame, int frames) {
  if (frames < 2) return frame;
  return frame + 1 < frames ? frame + 1 : frame - 1;
}

ChunkLoss build_chunk_loss(ad::ParamBinder& bind, const fields::SceneModel& model,
                           std::span<const Correspondence> entries, const ad::Matrix& depths,
                           const LossOptions& opt) {
  ad::Tape& tape = bind.tape();
  auto requests = requests_for(entries);
  render::RenderGraph g = render::build_render(bind, model, requests, depths, true);
  tape.forward(g.opacity);

  std::vector<int> usable;
  for (std::size_t r = 0; r < entries.size(); ++r) {
    if (tape.value(g.opacity)(static_cast<ad::Index>(r), 0) >= render::kMinOpacity) {
      usable.push_back(static_cast<int>(r));
    }
  }
  ChunkLoss out;
  out.usable = static_cast<int>(usable.size());
  if (usable.empty()) {
    out.objective = tape.constant(0.0);
    return out;
  }

  std::vector<Correspondence> kept;
  if (usable.size() != entries.size()) {
    // Empty rays would put non-finite values into the correspondence graph;
    // rebuild the chunk without them.
    ad::Matrix kept_depths(static_cast<ad::Index>(usable.size()), depths.cols());
    for (std::size_t k = 0; k < usable.size(); ++k) {
      kept.push_back(entries[static_cast<std::size_t>(usable[k])]);
      kept_depths.row(static_cast<ad::Index>(k)) = depths.row(usable[k]);
    }
    requests = requests_for(kept);
    g = render::build_render(bind, model, requests, kept_depths, true);
    entries = kept;
  }

  const auto n = static_cast<ad::Index>(entries.size());
  ad::Matrix source(n, 2), flow_gt(n, 2), color_gt(n, 3), weight(n, 1);
  std::vector<int> frames(entries.size()), neighbors(entries.size());
  for (ad::Index r = 0; r < n; ++r) {
    const Correspondence& e = entries[static_cast<std::size_t>(r)];
    source(r, 0) = e.row;
    source(r, 1) = e.col;
    flow_gt.row(r) = e.flow.transpose();
    color_gt.row(r) = e.color.transpose();
    weight(r, 0) = e.label == PixelClass::kInstrument ? opt.w_class : 1.0;
    frames[static_cast<std::size_t>(r)] = e.i;
    neighbors[static_cast<std::size_t>(r)] = smoothness_neighbor(e.i, model.config.frames);
  }

  const ad::Var flow_pred = g.target_pixel - tape.constant(source);
  const ad::Var l1 = ad::row_sum(ad::abs(flow_pred - tape.constant(flow_gt)));
  const ad::Var color_err = g.color - tape.constant(color_gt);
  const ad::Var l2 = ad::row_sum(color_err * color_err);
  const ad::Var data = ad::sum(tape.constant(weight) * (opt.flow_scale * l1 + opt.lambda * l2));
  const ad::Var flow_sum = ad::sum(l1);
  const ad::Var color_sum = ad::sum(l2);
  ad::Var objective = data;

  ad::Var smooth_sum;
  if (opt.smooth_weight > 0.0) {
    const ad::Var x = g.source_point;
    const ad::Var u = model.mapping.to_canonical(bind, x, frames);
    const ad::Var y = model.mapping.from_canonical(bind, u, neighbors);
    const ad::Var d = y - x;
    smooth_sum = ad::sum(d * d);
    objective = objective + opt.smooth_weight * smooth_sum;
  }
  ad::Var entropy_sum;
  if (opt.entropy_weight > 0.0) {
    const ad::Var p = g.weights / (g.opacity + kEntropyEps);
    entropy_sum = -ad::sum(p * ad::log(p + kEntropyEps));
    objective = objective + opt.entropy_weight * entropy_sum;
  }

  tape.forward(objective);
  out.objective = objective;
  tape.forward(flow_sum);
  tape.forward(color_sum);
  out.flow_sum = tape.scalar(flow_sum);
  out.color_sum = tape.scalar(color_sum);
  out.data_sum = tape.scalar(data);
  if (smooth_sum.valid()) out.smooth_sum = tape.scalar(smooth_sum);
  if (entropy_sum.valid()) out.entropy_sum = tape.scalar(entropy_sum);
  return out;
}

LossTerms evaluate_loss(const fields::SceneModel& model, const CorrespondenceBatch& batch,
                        const ad::Matrix& depths, const LossOptions& opt,
                        std::vector<ad::Matrix>* grads, std::size_t chunk_size) {
  const std::size_t total = batch.entries.size();
  if (chunk_size == 0) chunk_size = kDefaultChunk;
  const std::size_t chunks = (total + chunk_size - 1) / chunk_size;
  std::vector<ChunkLoss> results(chunks);
  std::vector<std::vector<ad::Matrix>> chunk_grads(grads ? chunks : 0);

  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = c * chunk_size;
    const std::size_t count = std::min(chunk_size, total - begin);
    ad::Tape tape;
    ad::ParamBinder bind(tape, model.params);
    const auto entries = std::span(batch.entries).subspan(begin, count);
    const ad::Matrix d = depths.middleRows(static_cast<ad::Index>(begin), static_cast<ad::Index>(count));
    results[c] = build_chunk_loss(bind, model, entries, d, opt);
    if (grads != nullptr && results[c].usable > 0) {
      tape.backward(results[c].objective);
      chunk_grads[c] = bind.gradients();
    }
  });

  LossTerms t;
  double flow = 0, color = 0, smooth = 0, entropy = 0, data = 0;
  for (const ChunkLoss& r : results) {
    flow += r.flow_sum;
    color += r.color_sum;
    smooth += r.smooth_sum;
    entropy += r.entropy_sum;
    data += r.data_sum;
    t.usable += r.usable;
  }
  if (grads != nullptr) {
    grads->assign(model.params.size(), ad::Matrix());
    for (std::size_t k = 0; k < model.params.size(); ++k) {
      (*grads)[k] = ad::Matrix::Zero(model.params.all()[k].value.rows(), model.params.all()[k].value.cols());
    }
    for (const auto& cg : chunk_grads) {
      for (std::size_t k = 0; k < cg.size(); ++k) {
        if (cg[k].size() != 0) (*grads)[k] += cg[k];
      }
    }
  }
  if (t.usable == 0) return t;
  const double inv = 1.0 / t.usable;
  t.flow = flow * inv;
  t.color = color * inv;
  t.smooth = smooth * inv;
  t.entropy = entropy * inv;
  t.other = opt.smooth_weight * t.smooth + opt.entropy_weight * t.entropy;
  t.total = data * inv + t.other;
  if (grads != nullptr) {
    for (auto& g : *grads) g *= inv;
  }
  return t;
}

namespace {

LossTerms eval_terms(const CorrespondenceBatch& batch, const fields::SceneModel& model,
                     int n_samples, const LossOptions& opt) {
  const ad::Matrix depths = render::sample_depth_matrix(model.config.camera, batch.entries.size(),
                                                        n_samples, render::SampleMode::kEval, nullptr);
  return evaluate_loss(model, batch, depths, opt);
}

}  // namespace

double loss_flow(const CorrespondenceBatch& batch, const fields::SceneModel& model, int n_samples) {
  return eval_terms(batch, model, n_samples, LossOptions{}).flow;
}

double loss_color(const CorrespondenceBatch& batch, const fields::SceneModel& model, int n_samples) {
  return eval_terms(batch, model, n_samples, LossOptions{}).color;
}

double regularizer_other(const fields::SceneModel& model, const CorrespondenceBatch& batch,
                         const TrainConfig& cfg) {
  return eval_terms(batch, model, cfg.n_samples, loss_options(cfg)).other;
}

double total_loss(const CorrespondenceBatch& batch, const fields::SceneModel& model,
                  const TrainConfig& cfg) {
  return eval_terms(batch, model, cfg.n_samples, loss_options(cfg)).total;
}

}  // namespace canonica::train
