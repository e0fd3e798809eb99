#pragma once

#include <span>
#include <vector>

#include "canonica/autodiff/param_store.hpp"
#include "canonica/fields/scene_model.hpp"
#include "canonica/render/renderer.hpp"
#include "canonica/train/batch.hpp"

namespace canonica::train {

// Loss values of one batch. flow and color are unweighted means over the
// usable entries; total = mean of w (flow_scale L1 + lambda L2^2) + other.
struct LossTerms {
  double flow = 0.0;
  double color = 0.0;
  double other = 0.0;
  double smooth = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  int usable = 0;  // entries whose ray has opacity >= kMinOpacity
};

struct LossOptions {
  double flow_scale = 1.0;
  double lambda = 1.0;
  double w_class = 1.0;
  double smooth_weight = 0.0;
  double entropy_weight = 0.0;
};
LossOptions loss_options(const TrainConfig& cfg);

// Sums (not means) over one group of entries, recorded on bind's tape.
// `objective` is the differentiable weighted sum whose gradient, divided by
// the batch's usable count, is the gradient of LossTerms::total.
struct ChunkLoss {
  ad::Var objective;
  double flow_sum = 0.0;
  double color_sum = 0.0;
  double smooth_sum = 0.0;
  double entropy_sum = 0.0;
  double data_sum = 0.0;  // weighted data term
  int usable = 0;
};

// depths: entries.size() x N sample depths.
ChunkLoss build_chunk_loss(ad::ParamBinder& bind, const fields::SceneModel& model,
                           std::span<const Correspondence> entries, const ad::Matrix& depths,
                           const LossOptions& opt);

// Full batch evaluation with fixed sample depths (one row per entry).
// If grads is given it receives the gradient of LossTerms::total, indexed
// like model.params. Entries are processed in chunks of chunk_size in
// parallel with a fixed reduction order.
LossTerms evaluate_loss(const fields::SceneModel& model, const CorrespondenceBatch& batch,
                        const ad::Matrix& depths, const LossOptions& opt,
                        std::vector<ad::Matrix>* grads = nullptr, std::size_t chunk_size = 0);

// Individual terms with eval-mode midpoint samples.
double loss_flow(const CorrespondenceBatch& batch, const fields::SceneModel& model, int n_samples);
double loss_color(const CorrespondenceBatch& batch, const fields::SceneModel& model, int n_samples);
double regularizer_other(const fields::SceneModel& model, const CorrespondenceBatch& batch,
                         const TrainConfig& cfg);
double total_loss(const CorrespondenceBatch& batch, const fields::SceneModel& model,
                  const TrainConfig& cfg);

// Neighbor frame used by the smoothness term: i + 1, or i - 1 for the last.
int smoothness_neighbor(int frame, int frames);

}  // namespace canonica::train
