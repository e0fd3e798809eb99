#include "canonica/fields/mlp.hpp"

#include <cmath>

#include "canonica/errors.hpp"

namespace canonica::fields {

ad::Matrix glorot_uniform(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  ad::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

Mlp Mlp::create(ad::ParamStore& store, const std::string& prefix,
                const std::vector<int>& widths, Activation act, std::mt19937_64& rng,
                bool zero_last) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least an input and output width");
  Mlp mlp;
  mlp.act_ = act;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const int in = widths[k];
    const int out = widths[k + 1];
    if (in < 1 || out < 1) throw ConfigError("mlp widths must be positive");
    const bool last = k + 2 == widths.size();
    ad::Matrix w = (last && zero_last) ? ad::Matrix::Zero(out, in) : glorot_uniform(out, in, rng);
    DenseLayer layer;
    layer.weight = store.add(prefix + ".l" + std::to_string(k) + ".w", std::move(w));
    layer.bias = store.add(prefix + ".l" + std::to_string(k) + ".b", ad::Matrix::Zero(1, out));
    mlp.layers_.push_back(layer);
  }
  return mlp;
}

ad::Var Mlp::forward(ad::ParamBinder& bind, ad::Var x, ad::Var first_addend) const {
  ad::Var h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = ad::matmul(h, bind(layers_[k].weight)) + bind(layers_[k].bias);
    if (k == 0 && first_addend.valid()) h = h + first_addend;
    if (k + 1 < layers_.size()) {
      h = act_ == Activation::kSoftplus ? ad::softplus(h) : ad::tanh(h);
    }
  }
  return h;
}

}  // namespace canonica::fields
