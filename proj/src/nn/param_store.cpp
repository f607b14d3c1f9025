#include "nerkit/nn/param_store.hpp"

#include "nerkit/error.hpp"

namespace nerkit::nn {

Parameter& ParamStore::add(const std::string& name, Matrix init, bool frozen) {
  if (params_.count(name)) throw ValidationError("duplicate parameter '" + name + "'");
  Parameter p;
  p.grad = Matrix(init.rows(), init.cols());
  p.first_moment = Matrix(init.rows(), init.cols());
  p.second_moment = Matrix(init.rows(), init.cols());
  p.value = std::move(init);
  p.frozen = frozen;
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::add_uniform(const std::string& name, std::size_t rows, std::size_t cols, double bound,
                                   Rng& rng) {
  Matrix m(rows, cols);
  for (auto& v : m.values()) v = rng.uniform(-bound, bound);
  return add(name, std::move(m));
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto a = params_.begin();
  auto b = other.params_.begin();
  for (; a != params_.end(); ++a, ++b) {
    if (a->first != b->first || !(a->second.value == b->second.value)) return false;
  }
  return true;
}

}  // namespace nerkit::nn
