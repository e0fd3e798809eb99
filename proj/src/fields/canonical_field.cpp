#include "canonica/fields/canonical_field.hpp"

#include "canonica/errors.hpp"
#include "canonica/fields/encoding.hpp"

namespace canonica::fields {

CanonicalField CanonicalField::create(ad::ParamStore& store, const FieldConfig& cfg,
                                      std::mt19937_64& rng) {
  if (cfg.layers < 1 || cfg.width < 1 || cfg.pe_bands < 0) {
    throw ConfigError("canonical field: layers and width must be >= 1, bands >= 0");
  }
  std::vector<int> widths{encoded_width(3, cfg.pe_bands)};
  for (int k = 0; k + 1 < cfg.layers; ++k) widths.push_back(cfg.width);
  widths.push_back(4);
  CanonicalField f;
  f.cfg_ = cfg;
  f.mlp_ = Mlp::create(store, "field", widths, Activation::kSoftplus, rng, /*zero_last=*/true);
  return f;
}

CanonicalField::Output CanonicalField::query(ad::ParamBinder& bind, ad::Var points) const {
  const ad::Var raw = mlp_.forward(bind, positional_encode(points, cfg_.pe_bands));
  return Output{ad::softplus(ad::slice_cols(raw, 0, 1)),
                ad::sigmoid(ad::slice_cols(raw, 1, 3))};
}

CanonicalField::Sample CanonicalField::query(const ad::ParamStore& store,
                                             const Eigen::Vector3d& u) const {
  ad::Tape tape;
  ad::ParamBinder bind(tape, store);
  const Output out = query(bind, tape.constant(ad::Matrix(u.transpose())));
  tape.forward(out.color);
  Sample s;
  s.sigma = tape.value(out.sigma)(0, 0);
  s.color = tape.value(out.color).row(0).transpose();
  return s;
}

}  // namespace canonica::fields
