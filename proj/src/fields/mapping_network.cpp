#include "canonica/fields/mapping_network.hpp"

#include <string>

#include "canonica/errors.hpp"
#include "canonica/fields/encoding.hpp"

namespace canonica::fields {

CouplingSplit coupling_split(int layer) {
  const int pivot = (layer + 2) % 3;
  CouplingSplit s;
  for (int d = 0; d < 3; ++d) (d == pivot ? s.transformed : s.conditioning).push_back(d);
  return s;
}

MappingNetwork MappingNetwork::create(ad::ParamStore& store, const MappingConfig& cfg,
                                      int frames, std::mt19937_64& rng) {
  if (frames < 1) throw ConfigError("mapping network needs at least one frame");
  if (cfg.coupling_layers < 0 || cfg.latent_dim < 1 || cfg.hidden_width < 1 ||
      cfg.hidden_layers < 1 || cfg.pe_bands < 0 || !(cfg.scale_bound > 0.0)) {
    throw ConfigError("mapping network: invalid configuration");
  }
  MappingNetwork net;
  net.cfg_ = cfg;
  net.frames_ = frames;

  std::normal_distribution<double> normal(0.0, cfg.latent_init_std);
  ad::Matrix codes(frames, cfg.latent_dim);
  for (int r = 0; r < frames; ++r) {
    for (int c = 0; c < cfg.latent_dim; ++c) codes(r, c) = normal(rng);
  }
  net.latents_ = store.add("mapping.latents", std::move(codes));

  for (int k = 0; k < cfg.coupling_layers; ++k) {
    Coupling layer;
    layer.split = coupling_split(k);
    const int in = encoded_width(static_cast<int>(layer.split.conditioning.size()), cfg.pe_bands);
    std::vector<int> widths{in};
    for (int h = 0; h < cfg.hidden_layers; ++h) widths.push_back(cfg.hidden_width);
    widths.push_back(2 * static_cast<int>(layer.split.transformed.size()));
    const std::string prefix = "mapping.c" + std::to_string(k);
    layer.net = Mlp::create(store, prefix, widths, Activation::kSoftplus, rng, /*zero_last=*/true);
    layer.latent_proj =
        store.add(prefix + ".latent", glorot_uniform(cfg.hidden_width, cfg.latent_dim, rng));
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

void MappingNetwork::check_frames(std::span<const int> frames, ad::Index rows) const {
  if (static_cast<ad::Index>(frames.size()) != rows) {
    throw GraphError("mapping network: one frame index per point required");
  }
  for (int f : frames) {
    if (f < 0 || f >= frames_) {
      throw std::out_of_range("frame index " + std::to_string(f) + " out of range [0, " +
                              std::to_string(frames_) + ")");
    }
  }
}

std::pair<ad::Var, ad::Var> MappingNetwork::coefficients(
    ad::ParamBinder& bind, const Coupling& layer, std::span<const ad::Var> columns,
    const std::vector<int>& frame_rows) const {
  std::vector<ad::Var> cond;
  for (int d : layer.split.conditioning) cond.push_back(columns[static_cast<std::size_t>(d)]);
  const ad::Var encoded = positional_encode(ad::concat_cols(cond), cfg_.pe_bands);
  // First-layer contribution of the latent code, computed once per frame.
  const ad::Var per_frame = ad::matmul(bind(latents_), bind(layer.latent_proj));
  const ad::Var latent_term = ad::gather_rows(per_frame, frame_rows);
  const ad::Var out = layer.net.forward(bind, encoded, latent_term);
  const auto m = static_cast<ad::Index>(layer.split.transformed.size());
  const ad::Var log_scale = cfg_.scale_bound * ad::tanh(ad::slice_cols(out, 0, m));
  const ad::Var translation = ad::slice_cols(out, m, m);
  return {log_scale, translation};
}

namespace {

std::vector<ad::Var> split_columns(ad::Var x) {
  return {ad::slice_cols(x, 0, 1), ad::slice_cols(x, 1, 1), ad::slice_cols(x, 2, 1)};
}

}  // namespace

ad::Var MappingNetwork::to_canonical(ad::ParamBinder& bind, ad::Var x,
                                     std::span<const int> frames) const {
  check_frames(frames, x.rows());
  if (x.cols() != 3) throw GraphError("mapping network expects n x 3 points");
  const std::vector<int> frame_rows(frames.begin(), frames.end());
  std::vector<ad::Var> cols = split_columns(x);
  for (const Coupling& layer : layers_) {
    const auto [log_scale, translation] = coefficients(bind, layer, cols, frame_rows);
    for (std::size_t k = 0; k < layer.split.transformed.size(); ++k) {
      const auto j = static_cast<ad::Index>(k);
      ad::Var& c = cols[static_cast<std::size_t>(layer.split.transformed[k])];
      c = c * ad::exp(ad::slice_cols(log_scale, j, 1)) + ad::slice_cols(translation, j, 1);
    }
  }
  return ad::concat_cols(cols);
}

ad::Var MappingNetwork::from_canonical(ad::ParamBinder& bind, ad::Var u,
                                       std::span<const int> frames) const {
  check_frames(frames, u.rows());
  if (u.cols() != 3) throw GraphError("mapping network expects n x 3 points");
  const std::vector<int> frame_rows(frames.begin(), frames.end());
  std::vector<ad::Var> cols = split_columns(u);
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    const Coupling& layer = *it;
    const auto [log_scale, translation] = coefficients(bind, layer, cols, frame_rows);
    for (std::size_t k = 0; k < layer.split.transformed.size(); ++k) {
      const auto j = static_cast<ad::Index>(k);
      ad::Var& c = cols[static_cast<std::size_t>(layer.split.transformed[k])];
      c = (c - ad::slice_cols(translation, j, 1)) * ad::exp(-ad::slice_cols(log_scale, j, 1));
    }
  }
  return ad::concat_cols(cols);
}

Eigen::Vector3d MappingNetwork::to_canonical(const ad::ParamStore& store,
                                             const Eigen::Vector3d& x, int frame) const {
  ad::Tape tape;
  ad::ParamBinder bind(tape, store);
  const int frames[1] = {frame};
  const ad::Var u = to_canonical(bind, tape.constant(ad::Matrix(x.transpose())), frames);
  tape.forward(u);
  return tape.value(u).row(0).transpose();
}

Eigen::Vector3d MappingNetwork::from_canonical(const ad::ParamStore& store,
                                               const Eigen::Vector3d& u, int frame) const {
  ad::Tape tape;
  ad::ParamBinder bind(tape, store);
  const int frames[1] = {frame};
  const ad::Var x = from_canonical(bind, tape.constant(ad::Matrix(u.transpose())), frames);
  tape.forward(x);
  return tape.value(x).row(0).transpose();
}

}  // namespace canonica::fields
