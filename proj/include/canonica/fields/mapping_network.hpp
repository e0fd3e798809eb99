#pragma once

#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "canonica/autodiff/param_store.hpp"
#include "canonica/fields/mlp.hpp"

namespace canonica::fields {

struct MappingConfig {
  int coupling_layers = 6;
  int latent_dim = 32;
  int hidden_width = 64;
  int hidden_layers = 2;
  int pe_bands = 4;          // encoding of the conditioning coordinates
  double scale_bound = 3.0;  // |log-scale| <= bound
  double latent_init_std = 1.0;
};

// Which coordinates a coupling layer conditions on and which it transforms.
struct CouplingSplit {
  std::vector<int> conditioning;
  std::vector<int> transformed;
};

// Layer k transforms one coordinate, cycling z, x, y, conditioned on the
// other two.
CouplingSplit coupling_split(int layer);

// Per-frame bijections T_i between frame space and the canonical volume,
// built from affine coupling layers conditioned on a learned latent code per
// frame. Every map is invertible in closed form for any parameter values.
class MappingNetwork {
 public:
  MappingNetwork() = default;

  static MappingNetwork create(ad::ParamStore& store, const MappingConfig& cfg,
                               int frames, std::mt19937_64& rng);

  // x: n x 3 frame-space points, frames[k] the frame of row k.
  ad::Var to_canonical(ad::ParamBinder& bind, ad::Var x, std::span<const int> frames) const;
  ad::Var from_canonical(ad::ParamBinder& bind, ad::Var u, std::span<const int> frames) const;

  Eigen::Vector3d to_canonical(const ad::ParamStore& store, const Eigen::Vector3d& x,
                               int frame) const;
  Eigen::Vector3d from_canonical(const ad::ParamStore& store, const Eigen::Vector3d& u,
                                 int frame) const;

  int frame_count() const { return frames_; }
  const MappingConfig& config() const { return cfg_; }
  ad::ParamId latents() const { return latents_; }

 private:
  struct Coupling {
    CouplingSplit split;
    Mlp net;
    ad::ParamId latent_proj;  // hidden x latent_dim
  };

  void check_frames(std::span<const int> frames, ad::Index rows) const;
  // (log-scale, translation) for the transformed coordinates of layer k.
  std::pair<ad::Var, ad::Var> coefficients(ad::ParamBinder& bind, const Coupling& layer,
                                           std::span<const ad::Var> columns,
                                           const std::vector<int>& frame_rows) const;

  MappingConfig cfg_;
  int frames_ = 0;
  ad::ParamId latents_;
  std::vector<Coupling> layers_;
};

}  // namespace canonica::fields
