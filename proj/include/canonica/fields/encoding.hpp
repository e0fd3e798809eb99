#pragma once

#include <vector>

#include <Eigen/Dense>

#include "canonica/autodiff/tape.hpp"

namespace canonica::fields {

// Raw point followed by sin/cos features at L octave bands:
// [x, sin(pi x), cos(pi x), sin(2 pi x), cos(2 pi x), ...], each block
// holding every coordinate.
struct EncodedPoint {
  std::vector<double> features;
};

constexpr int encoded_width(int dims, int bands) { return dims * (1 + 2 * bands); }

EncodedPoint positional_encode(const Eigen::Vector3d& x, int bands);

// Row-wise encoding of an n x d batch, n x d(1 + 2L).
ad::Var positional_encode(ad::Var points, int bands);

}  // namespace canonica::fields
