#pragma once

#include <random>
#include <string>
#include <vector>

#include "canonica/autodiff/param_store.hpp"

namespace canonica::fields {

enum class Activation { kSoftplus, kTanh };

struct DenseLayer {
  ad::ParamId weight;  // out x in
  ad::ParamId bias;    // 1 x out
};

// Fully connected network; the activation is applied between layers, never
// after the last one.
class Mlp {
 public:
  Mlp() = default;

  // widths = {in, hidden..., out}. Weights are Glorot-uniform, biases zero;
  // zero_last zero-initializes the final layer.
  static Mlp create(ad::ParamStore& store, const std::string& prefix,
                    const std::vector<int>& widths, Activation act,
                    std::mt19937_64& rng, bool zero_last);

  // first_addend, if valid, is added to the first layer's pre-activation
  // (n x width or broadcastable).
  ad::Var forward(ad::ParamBinder& bind, ad::Var x, ad::Var first_addend = {}) const;

  const std::vector<DenseLayer>& layers() const { return layers_; }

 private:
  std::vector<DenseLayer> layers_;
  Activation act_ = Activation::kSoftplus;
};

ad::Matrix glorot_uniform(int rows, int cols, std::mt19937_64& rng);

}  // namespace canonica::fields
