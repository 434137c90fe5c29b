#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hybridmap/encoding.hpp"
#include "hybridmap/mlp.hpp"
#include "hybridmap/octree.hpp"
#include "hybridmap/tape.hpp"

namespace hybridmap {

template <typename S>
struct ModelConfig {
  typename SparseVoxelOctree<S>::Config octree;
  typename HashEncoding<S>::Config geometry_encoding;
  typename HashEncoding<S>::Config color_encoding;
  int hidden_width = 64;
  int geometry_hidden_layers = 1;
  int color_hidden_layers = 2;
  uint64_t seed = 0;
};

/// The full trainable scene model: coarse vertex SDFs on the sparse voxel
/// grid plus two hash encodings with shallow decoders for the residual SDF
/// and the color. SDF prediction is s = s_coarse + M_s(phi_s); color is
/// c = sigmoid(M_c(phi_c)).
///
/// The geometry decoder's output layer starts zeroed, so a fresh model
/// predicts exactly the coarse SDF (priors alone carry the geometry until
/// optimization moves the residual).
template <typename S>
class Model {
 public:
  using BufferId = typename GradientTape<S>::BufferId;

  explicit Model(const ModelConfig<S>& cfg);

  SparseVoxelOctree<S>& octree() { return octree_; }
  const SparseVoxelOctree<S>& octree() const { return octree_; }
  HashEncoding<S>& geometry_encoding() { return geom_enc_; }
  HashEncoding<S>& color_encoding() { return color_enc_; }
  Mlp<S>& geometry_mlp() { return geom_mlp_; }
  Mlp<S>& color_mlp() { return color_mlp_; }
  const ModelConfig<S>& config() const { return cfg_; }

  // Plain forward passes.
  void predict_sdf(std::span<const Vec3> points, std::span<S> out) const;
  void predict_color(std::span<const Vec3> points, S* out) const;  // n x 3
  /// Coarse+residual SDF with the coarse part interpolated in an explicit
  /// leaf (meshing evaluates shared boundary nodes through a chosen leaf).
  S predict_sdf_in_leaf(uint32_t leaf_id, const Vec3& p) const;

  // Recorded forward passes; returned buffers route gradients back to every
  // touched parameter on tape.backward().
  BufferId predict_sdf(GradientTape<S>& tape, std::span<const Vec3> points);
  BufferId predict_color(GradientTape<S>& tape, std::span<const Vec3> points);

  std::vector<ParamGroup<S>*> parameter_groups();
  std::vector<const ParamGroup<S>*> parameter_groups() const;
  void zero_grads();

 private:
  ModelConfig<S> cfg_;
  SparseVoxelOctree<S> octree_;
  HashEncoding<S> geom_enc_;
  HashEncoding<S> color_enc_;
  Mlp<S> geom_mlp_;
  Mlp<S> color_mlp_;
};

}  // namespace hybridmap
