#pragma once

#include <span>
#include <vector>

#include "canonica/autodiff/tape.hpp"

namespace canonica::render {

// Quadrature weights of the volume-rendering integral:
//   alpha_k = 1 - exp(-sigma_k delta_k),  delta_k = t_{k+1} - t_k,
//   delta_N = far - t_N,
//   w_k     = alpha_k * prod_{j<k} (1 - alpha_j).
// Throws std::invalid_argument if t is not strictly increasing, sigma is
// negative or the sizes differ.
std::vector<double> composite_weights(std::span<const double> sigma,
                                      std::span<const double> t, double far);

// Interval lengths delta_k for each ray (row) of an R x N depth matrix.
ad::Matrix interval_lengths(const ad::Matrix& depths, double far);

// Differentiable weights for R rays x N samples; sigma is R x N.
ad::Var composite_weights(ad::Var sigma, const ad::Matrix& deltas);

}  // namespace canonica::render
