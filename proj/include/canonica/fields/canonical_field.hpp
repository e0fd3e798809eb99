#pragma once

#include <random>

#include <Eigen/Dense>

#include "canonica/autodiff/param_store.hpp"
#include "canonica/fields/mlp.hpp"

namespace canonica::fields {

struct FieldConfig {
  int pe_bands = 6;
  int layers = 6;  // linear layers, including the output layer
  int width = 128;
};

// Density and color of the shared canonical volume. Density passes through
// softplus and color through a sigmoid, so sigma >= 0 and c in [0, 1]^3.
class CanonicalField {
 public:
  CanonicalField() = default;

  static CanonicalField create(ad::ParamStore& store, const FieldConfig& cfg,
                               std::mt19937_64& rng);

  struct Output {
    ad::Var sigma;  // n x 1
    ad::Var color;  // n x 3
  };
  Output query(ad::ParamBinder& bind, ad::Var points) const;

  struct Sample {
    double sigma = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
  };
  Sample query(const ad::ParamStore& store, const Eigen::Vector3d& u) const;

  const FieldConfig& config() const { return cfg_; }
  const Mlp& network() const { return mlp_; }

 private:
  FieldConfig cfg_;
  Mlp mlp_;
};

}  // namespace canonica::fields
