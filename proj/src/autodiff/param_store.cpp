#include "canonica/autodiff/param_store.hpp"

#include <cmath>
#include <utility>

#include "canonica/errors.hpp"

namespace canonica::ad {

ParamId ParamStore::add(std::string name, Matrix init) {
  if (index_.count(name) != 0) {
    throw GraphError("duplicate parameter name: " + name);
  }
  Parameter p;
  p.name = name;
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.adam_m = Matrix::Zero(init.rows(), init.cols());
  p.adam_v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return ParamId{params_.size() - 1};
}

std::optional<ParamId> ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return ParamId{it->second};
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParamStore::set_step(std::int64_t step) {
  if (step < step_) throw GraphError("Adam step count may not decrease");
  step_ = step;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParamStore::add_grads(const std::vector<Matrix>& buffer) {
  if (buffer.size() != params_.size()) {
    throw GraphError("gradient buffer does not match the parameter store");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (buffer[k].size() == 0) continue;
    params_[k].grad += buffer[k];
  }
}

ParamBinder::ParamBinder(Tape& tape, const ParamStore& store)
    : tape_(tape), store_(store), bound_(store.size(), -1),
      vars_(store.size()) {}

Var ParamBinder::operator()(ParamId id) {
  if (id.index >= bound_.size()) throw GraphError("unknown parameter id");
  if (bound_[id.index] < 0) {
    vars_[id.index] = tape_.leaf(store_.value(id));
    bound_[id.index] = vars_[id.index].id();
  }
  return vars_[id.index];
}

std::vector<Matrix> ParamBinder::gradients() const {
  std::vector<Matrix> out(bound_.size());
  accumulate_into(out);
  return out;
}

void ParamBinder::accumulate_into(std::vector<Matrix>& buffer) const {
  buffer.resize(bound_.size());
  for (std::size_t k = 0; k < bound_.size(); ++k) {
    if (bound_[k] < 0) continue;
    Matrix g = tape_.grad(vars_[k]);
    if (buffer[k].size() == 0) {
      buffer[k] = std::move(g);
    } else {
      buffer[k] += g;
    }
  }
}

void adam_step(ParamStore& store, double lr, double beta1, double beta2,
               double eps) {
  for (const auto& p : store.params_) {
    if (!p.grad.allFinite()) {
      throw NumericError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++store.step_;
  const double t = static_cast<double>(store.step_);
  const double correction1 = 1.0 - std::pow(beta1, t);
  const double correction2 = 1.0 - std::pow(beta2, t);
  for (auto& p : store.params_) {
    p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * p.grad;
    p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * p.grad.cwiseAbs2();
    const auto m_hat = p.adam_m.array() / correction1;
    const auto v_hat = p.adam_v.array() / correction2;
    p.value.array() -= lr * m_hat / (v_hat.sqrt() + eps);
    p.grad.setZero();
  }
}

}  // namespace canonica::ad
