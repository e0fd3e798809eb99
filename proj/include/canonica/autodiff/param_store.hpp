#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "canonica/autodiff/tape.hpp"

namespace canonica::ad {

struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  // Adam moments, same shape as value.
  Matrix adam_m;
  Matrix adam_v;
};

// Named trainable tensors plus their optimizer state.
class ParamStore {
 public:
  ParamId add(std::string name, Matrix init);
  std::optional<ParamId> find(const std::string& name) const;

  Parameter& at(ParamId id) { return params_.at(id.index); }
  const Parameter& at(ParamId id) const { return params_.at(id.index); }
  const Matrix& value(ParamId id) const { return at(id).value; }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  const std::vector<Parameter>& all() const { return params_; }
  std::vector<Parameter>& all() { return params_; }

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step);

  void zero_grad();
  // Adds buffer[k] into parameter k's gradient; empty entries are skipped.
  void add_grads(const std::vector<Matrix>& buffer);

 private:
  friend void adam_step(ParamStore&, double, double, double, double);
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

// Binds store parameters into a tape as leaves, at most once per parameter,
// and collects their gradients after backward.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const ParamStore& store);

  Var operator()(ParamId id);
  Tape& tape() { return tape_; }

  // Gradient buffer indexed like the store; parameters never bound stay
  // empty.
  std::vector<Matrix> gradients() const;
  void accumulate_into(std::vector<Matrix>& buffer) const;

 private:
  Tape& tape_;
  const ParamStore& store_;
  std::vector<int> bound_;  // store index -> tape node id, -1 if unbound
  std::vector<Var> vars_;
};

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter, then zeroes the
// gradients. Throws NumericError naming the first parameter whose gradient
// is not finite; the store is left untouched in that case.
void adam_step(ParamStore& store, double lr, double beta1, double beta2,
               double eps);
inline void adam_step(ParamStore& store, const AdamOptions& opt) {
  adam_step(store, opt.lr, opt.beta1, opt.beta2, opt.eps);
}

}  // namespace canonica::ad
