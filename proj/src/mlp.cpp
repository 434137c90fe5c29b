#include "hybridmap/mlp.hpp"

#include <cmath>

#include <Eigen/Core>

#include "hybridmap/errors.hpp"
#include "hybridmap/rng.hpp"

namespace hybridmap {

namespace {
template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMapMat = Eigen::Map<const RowMat<S>>;
template <typename S>
using ConstMapVec = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;
}  // namespace

template <typename S>
Mlp<S>::Mlp(std::string name, int input_dim, int hidden_width, int hidden_layers, int output_dim)
    : params_(std::move(name)) {
  if (input_dim < 1 || hidden_width < 1 || hidden_layers < 0 || output_dim < 1)
    throw InputError("mlp: bad layer sizes");
  dims_.push_back(input_dim);
  for (int i = 0; i < hidden_layers; ++i) dims_.push_back(hidden_width);
  dims_.push_back(output_dim);

  size_t total = 0;
  for (int l = 0; l < layer_count(); ++l) {
    w_off_.push_back(total);
    total += size_t(dims_[l + 1]) * dims_[l];
    b_off_.push_back(total);
    total += size_t(dims_[l + 1]);
  }
  params_.resize(total);
}

template <typename S>
void Mlp<S>::init_he(uint64_t seed) {
  Rng rng(seed);
  for (int l = 0; l < layer_count(); ++l) {
    const double stddev = std::sqrt(2.0 / dims_[l]);
    S* w = params_.values().data() + w_off_[l];
    for (size_t i = 0; i < size_t(dims_[l + 1]) * dims_[l]; ++i)
      w[i] = S(rng.normal(0.0, stddev));
    S* b = params_.values().data() + b_off_[l];
    for (int i = 0; i < dims_[l + 1]; ++i) b[i] = S(0);
  }
}

template <typename S>
void Mlp<S>::zero_layer(int layer) {
  S* w = params_.values().data() + w_off_[layer];
  const size_t count = size_t(dims_[layer + 1]) * dims_[layer] + dims_[layer + 1];
  for (size_t i = 0; i < count; ++i) w[i] = S(0);  // W and b are contiguous
}

template <typename S>
void Mlp<S>::forward(const S* in, size_t n, S* out,
                     std::vector<std::vector<S>>* hidden) const {
  const int layers = layer_count();
  if (hidden) {
    hidden->assign(layers - 1, {});
  }
  std::vector<S> cur(in, in + n * dims_[0]);
  for (int l = 0; l < layers; ++l) {
    const int din = dims_[l], dout = dims_[l + 1];
    std::vector<S> next(n * dout);
    ConstMapMat<S> X(cur.data(), n, din);
    ConstMapMat<S> W(params_.values().data() + w_off_[l], dout, din);
    ConstMapVec<S> b(params_.values().data() + b_off_[l], dout);
    MapMat<S> Y(next.data(), n, dout);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b.transpose();
    if (l + 1 < layers) {
      for (S& v : next) v = v > S(0) ? v : S(0);  // ReLU
      if (hidden) (*hidden)[l] = next;
    }
    cur = std::move(next);
  }
  std::copy(cur.begin(), cur.end(), out);
}

template <typename S>
void Mlp<S>::backward(const S* in, size_t n, const std::vector<std::vector<S>>& hidden,
                      const S* grad_out, S* grad_in) {
  const int layers = layer_count();
  std::vector<S> delta(grad_out, grad_out + n * dims_.back());
  for (int l = layers - 1; l >= 0; --l) {
    const int din = dims_[l], dout = dims_[l + 1];
    const S* layer_in = (l == 0) ? in : hidden[l - 1].data();
    ConstMapMat<S> X(layer_in, n, din);
    ConstMapMat<S> D(delta.data(), n, dout);
    MapMat<S> gW(params_.grads().data() + w_off_[l], dout, din);
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> gb(params_.grads().data() + b_off_[l], dout);
    gW.noalias() += D.transpose() * X;
    gb.noalias() += D.colwise().sum().transpose();

    ConstMapMat<S> W(params_.values().data() + w_off_[l], dout, din);
    if (l == 0) {
      MapMat<S> G(grad_in, n, din);
      G.noalias() += D * W;
    } else {
      std::vector<S> prev(n * din);
      MapMat<S> P(prev.data(), n, din);
      P.noalias() = D * W;
      const std::vector<S>& act = hidden[l - 1];
      for (size_t i = 0; i < prev.size(); ++i)
        if (!(act[i] > S(0))) prev[i] = S(0);  // ReLU gate
      delta = std::move(prev);
    }
  }
}

template class Mlp<float>;
template class Mlp<double>;

}  // namespace hybridmap
