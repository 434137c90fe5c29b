#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hybridmap/errors.hpp"

namespace hybridmap {

template <typename S>
class GradientTape;

/// One recorded operation of a forward pass. backward() reads the gradients
/// of its output buffers and accumulates into input buffers and parameter
/// groups.
template <typename S>
struct TapeOp {
  virtual ~TapeOp() = default;
  virtual void backward(GradientTape<S>& tape) = 0;
  virtual const char* name() const = 0;
};

/// Reverse-mode record of one forward pass. Buffers hold intermediate
/// values and their gradients; ops are replayed in exact reverse order.
/// Gradients accumulate additively (shared parameters sum contributions).
/// A tape is single-use: backward() throws UsageError on a second call.
template <typename S>
class GradientTape {
 public:
  using BufferId = uint32_t;

  BufferId add_buffer(size_t rows, size_t cols) {
    buffers_.push_back(Buffer{std::vector<S>(rows * cols, S(0)),
                              std::vector<S>(rows * cols, S(0)), rows, cols});
    return BufferId(buffers_.size() - 1);
  }

  std::span<S> values(BufferId id) { return buffers_[id].val; }
  std::span<const S> values(BufferId id) const { return buffers_[id].val; }
  std::span<S> grads(BufferId id) { return buffers_[id].grad; }
  std::span<const S> grads(BufferId id) const { return buffers_[id].grad; }
  size_t rows(BufferId id) const { return buffers_[id].rows; }
  size_t cols(BufferId id) const { return buffers_[id].cols; }

  void record(std::unique_ptr<TapeOp<S>> op) { ops_.push_back(std::move(op)); }

  /// Marks the scalar that receives the backward seed.
  void set_loss(BufferId id, size_t index) {
    loss_buffer_ = id;
    loss_index_ = index;
    has_loss_ = true;
  }

  void backward(S loss_gradient = S(1)) {
    if (consumed_) throw UsageError("gradient tape already consumed");
    if (!has_loss_) throw UsageError("gradient tape has no loss output");
    consumed_ = true;
    buffers_[loss_buffer_].grad[loss_index_] = loss_gradient;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)->backward(*this);
  }

  bool consumed() const { return consumed_; }
  size_t op_count() const { return ops_.size(); }

 private:
  struct Buffer {
    std::vector<S> val, grad;
    size_t rows, cols;
  };
  std::vector<Buffer> buffers_;
  std::vector<std::unique_ptr<TapeOp<S>>> ops_;
  BufferId loss_buffer_ = 0;
  size_t loss_index_ = 0;
  bool has_loss_ = false;
  bool consumed_ = false;
};

}  // namespace hybridmap
