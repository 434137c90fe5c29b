#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hybridmap {

/// One named group of trainable scalars with a shape-congruent gradient
/// array. Groups only ever grow (new octree vertices are appended at the
/// end); existing indices stay valid for the lifetime of the model.
template <typename S>
class ParamGroup {
 public:
  explicit ParamGroup(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  size_t size() const { return value_.size(); }

  std::span<S> values() { return value_; }
  std::span<const S> values() const { return value_; }
  std::span<S> grads() { return grad_; }
  std::span<const S> grads() const { return grad_; }

  S& value(size_t i) { return value_[i]; }
  S value(size_t i) const { return value_[i]; }
  S& grad(size_t i) { return grad_[i]; }

  void zero_grads() { std::fill(grad_.begin(), grad_.end(), S(0)); }

  /// Appends one scalar, gradient zero. Returns its index.
  size_t append(S v) {
    value_.push_back(v);
    grad_.push_back(S(0));
    return value_.size() - 1;
  }

  void resize(size_t n, S fill = S(0)) {
    value_.resize(n, fill);
    grad_.resize(n, S(0));
  }

 private:
  std::string name_;
  std::vector<S> value_;
  std::vector<S> grad_;
};

}  // namespace hybridmap
