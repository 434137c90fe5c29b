#pragma once

#include <string>
#include <vector>

#include "hybridmap/params.hpp"

namespace hybridmap {

/// Fully connected decoder: hidden layers with ReLU, linear output.
/// Weights live in one flat parameter group, per layer W (out x in,
/// row-major) followed by b (out).
template <typename S>
class Mlp {
 public:
  Mlp(std::string name, int input_dim, int hidden_width, int hidden_layers, int output_dim);

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return int(dims_.size()) - 1; }

  /// He-normal weights, zero biases.
  void init_he(uint64_t seed);
  /// Zeroes one layer's weights and bias (layer_count()-1 = output layer).
  void zero_layer(int layer);

  /// in: n x input_dim row-major; out: n x output_dim. When hidden != null
  /// the post-ReLU activation of every hidden layer is saved for backward.
  void forward(const S* in, size_t n, S* out, std::vector<std::vector<S>>* hidden = nullptr) const;

  /// Accumulates parameter gradients and input gradients for a forward pass
  /// saved by forward(..., hidden).
  void backward(const S* in, size_t n, const std::vector<std::vector<S>>& hidden,
                const S* grad_out, S* grad_in);

  ParamGroup<S>& params() { return params_; }
  const ParamGroup<S>& params() const { return params_; }

  size_t weight_offset(int layer) const { return w_off_[layer]; }
  size_t bias_offset(int layer) const { return b_off_[layer]; }

 private:
  std::vector<int> dims_;  // input, hidden..., output
  std::vector<size_t> w_off_, b_off_;
  ParamGroup<S> params_;
};

}  // namespace hybridmap
