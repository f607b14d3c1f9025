#pragma once

#include <map>
#include <string>
#include <vector>

#include "nerkit/nn/matrix.hpp"
#include "nerkit/random.hpp"

namespace nerkit::nn {

struct Parameter {
  Matrix value;
  Matrix grad;
  // Adam moment estimates, same shape as value.
  Matrix first_moment;
  Matrix second_moment;
  // Frozen parameters are skipped by the optimizer.
  bool frozen = false;
};

// Named parameters with paired gradient accumulators. Names are kept in
// sorted order so iteration (and therefore serialization) is deterministic.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Matrix init, bool frozen = false);
  // Adds a rows x cols parameter drawn from uniform(-bound, bound).
  Parameter& add_uniform(const std::string& name, std::size_t rows, std::size_t cols, double bound, Rng& rng);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  const Matrix& value(const std::string& name) const { return at(name).value; }
  Matrix& value(const std::string& name) { return at(name).value; }
  Matrix& grad(const std::string& name) { return at(name).grad; }
  const Matrix& grad(const std::string& name) const { return at(name).grad; }

  void zero_grad();
  std::vector<std::string> names() const;
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  // Values only; gradients and moments are ignored.
  bool same_values(const ParamStore& other) const;

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace nerkit::nn
