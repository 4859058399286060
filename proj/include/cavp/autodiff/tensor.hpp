// SPDX-License-Identifier: Apache-2.0
//
// Shapes, trainable parameters and gradient maps shared by the tape engine.
// Everything is rank <= 2: vectors are 1 x n row vectors.
#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cavp/common/errors.hpp"

namespace cavp::ad {

struct Shape {
  int rows = 1;
  int cols = 1;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  std::string str() const { return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")"; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

template <typename T>
class Parameter {
 public:
  Parameter(std::string name, Shape shape, std::size_t index)
      : name_(std::move(name)), shape_(shape), index_(index), values_(shape.size(), T{0}) {
    if (shape.rows <= 0 || shape.cols <= 0) throw ShapeError("parameter " + name_ + " has non-positive shape " + shape.str());
  }

  const std::string& name() const { return name_; }
  Shape shape() const { return shape_; }
  std::size_t index() const { return index_; }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

 private:
  std::string name_;
  Shape shape_;
  std::size_t index_;
  std::vector<T> values_;
};

/// Owns every trainable array of a model. Parameters have stable addresses
/// and a dense index in insertion order.
template <typename T>
class ParameterStore {
 public:
  Parameter<T>& add(const std::string& name, Shape shape) {
    if (by_name_.count(name)) throw ContractError("duplicate parameter name " + name);
    params_.push_back(std::make_unique<Parameter<T>>(name, shape, params_.size()));
    by_name_[name] = params_.size() - 1;
    return *params_.back();
  }

  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

  Parameter<T>& at(const std::string& name) { return *params_.at(index_of(name)); }
  const Parameter<T>& at(const std::string& name) const { return *params_.at(index_of(name)); }
  Parameter<T>& operator[](std::size_t i) { return *params_.at(i); }
  const Parameter<T>& operator[](std::size_t i) const { return *params_.at(i); }

  std::size_t size() const { return params_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->shape().size();
    return n;
  }

 private:
  std::size_t index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ContractError("unknown parameter " + name);
    return it->second;
  }

  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::map<std::string, std::size_t> by_name_;
};

/// Dense per-parameter gradients. Parameters that were never touched by a
/// backward pass read as zeros.
template <typename T>
class GradientMap {
 public:
  GradientMap() = default;
  explicit GradientMap(const ParameterStore<T>& store) {
    grads_.resize(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) grads_[i].assign(store[i].shape().size(), T{0});
  }

  std::size_t size() const { return grads_.size(); }
  std::span<T> operator[](std::size_t i) { return grads_.at(i); }
  std::span<const T> operator[](std::size_t i) const { return grads_.at(i); }

  void add(const GradientMap& other, T scale = T{1}) {
    if (other.grads_.size() != grads_.size()) throw ContractError("gradient maps over different parameter stores");
    for (std::size_t i = 0; i < grads_.size(); ++i) {
      auto& dst = grads_[i];
      const auto& src = other.grads_[i];
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
    }
  }

  void scale(T s) {
    for (auto& g : grads_)
      for (auto& x : g) x *= s;
  }

  void zero() {
    for (auto& g : grads_) std::fill(g.begin(), g.end(), T{0});
  }

  double l2_norm() const {
    double acc = 0.0;
    for (const auto& g : grads_)
      for (auto x : g) acc += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(acc);
  }

  bool all_zero() const {
    for (const auto& g : grads_)
      for (auto x : g)
        if (x != T{0}) return false;
    return true;
  }

  bool all_finite() const {
    for (const auto& g : grads_)
      for (auto x : g)
        if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  std::vector<std::vector<T>> grads_;
};

}  // namespace cavp::ad
