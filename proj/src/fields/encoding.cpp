#include "canonica/fields/encoding.hpp"

#include <cmath>
#include <numbers>

#include "canonica/errors.hpp"

namespace canonica::fields {

EncodedPoint positional_encode(const Eigen::Vector3d& x, int bands) {
  if (bands < 0) throw ConfigError("positional encoding: negative band count");
  EncodedPoint out;
  out.features.reserve(static_cast<std::size_t>(encoded_width(3, bands)));
  for (int d = 0; d < 3; ++d) out.features.push_back(x[d]);
  for (int l = 0; l < bands; ++l) {
    const double freq = std::ldexp(std::numbers::pi, l);
    for (int d = 0; d < 3; ++d) out.features.push_back(std::sin(freq * x[d]));
    for (int d = 0; d < 3; ++d) out.features.push_back(std::cos(freq * x[d]));
  }
  return out;
}

ad::Var positional_encode(ad::Var points, int bands) {
  if (bands < 0) throw ConfigError("positional encoding: negative band count");
  if (bands == 0) return points;
  std::vector<ad::Var> parts;
  parts.reserve(static_cast<std::size_t>(1 + 2 * bands));
  parts.push_back(points);
  for (int l = 0; l < bands; ++l) {
    const ad::Var scaled = ad::scale(points, std::ldexp(std::numbers::pi, l));
    parts.push_back(ad::sin(scaled));
    parts.push_back(ad::cos(scaled));
  }
  return ad::concat_cols(parts);
}

}  // namespace canonica::fields
