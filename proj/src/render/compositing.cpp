#include "canonica/render/compositing.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace canonica::render {

std::vector<double> composite_weights(std::span<const double> sigma,
                                      std::span<const double> t, double far) {
  if (sigma.size() != t.size()) {
    throw std::invalid_argument("composite_weights: sigma and t differ in length");
  }
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    if (!(t[k] < t[k + 1])) {
      throw std::invalid_argument("composite_weights: depths must be strictly increasing (index " +
                                  std::to_string(k) + ")");
    }
  }
  if (!t.empty() && !(t.back() <= far)) {
    throw std::invalid_argument("composite_weights: last depth beyond far");
  }
  std::vector<double> w(sigma.size());
  double optical_depth = 0.0;
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    if (sigma[k] < 0.0) throw std::invalid_argument("composite_weights: negative density");
    const double delta = (k + 1 < t.size() ? t[k + 1] : far) - t[k];
    const double tau = sigma[k] * delta;
    w[k] = -std::expm1(-tau) * std::exp(-optical_depth);
    optical_depth += tau;
  }
  return w;
}

ad::Matrix interval_lengths(const ad::Matrix& depths, double far) {
  const ad::Index n = depths.cols();
  ad::Matrix deltas(depths.rows(), n);
  for (ad::Index r = 0; r < depths.rows(); ++r) {
    for (ad::Index k = 0; k < n; ++k) {
      const double next = k + 1 < n ? depths(r, k + 1) : far;
      deltas(r, k) = next - depths(r, k);
      if (!(deltas(r, k) > 0.0) && k + 1 < n) {
        throw std::invalid_argument("interval_lengths: depths must be strictly increasing");
      }
    }
  }
  return deltas;
}

ad::Var composite_weights(ad::Var sigma, const ad::Matrix& deltas) {
  ad::Tape& tape = *sigma.tape();
  const ad::Index n = deltas.cols();
  // exclusive[k] = sum_{j<k} tau_j, as tau * M^T with M(k, j) = [j < k].
  ad::Matrix prefix = ad::Matrix::Zero(n, n);
  for (ad::Index k = 0; k < n; ++k) {
    for (ad::Index j = 0; j < k; ++j) prefix(k, j) = 1.0;
  }
  const ad::Var tau = sigma * tape.constant(deltas);
  const ad::Var exclusive = ad::matmul(tau, tape.constant(std::move(prefix)));
  const ad::Var alpha = 1.0 - ad::exp(-tau);
  return alpha * ad::exp(-exclusive);
}

}  // namespace canonica::render
