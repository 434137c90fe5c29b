#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hybridmap/geometry.hpp"
#include "hybridmap/model.hpp"
#include "hybridmap/octree.hpp"
#include "hybridmap/tape.hpp"

namespace hybridmap {

struct SamplerConfig {
  double step = 0.01;           // spacing between adjacent samples, meters
  int max_samples_per_ray = 512;  // beyond this, farthest samples are dropped
};

/// Flattened samples of a ray batch. Samples exist only inside allocated
/// voxels; per ray they are at t_near + step/2 + k*step within each
/// intersection interval, strictly ascending.
struct RayBatch {
  std::vector<Ray> rays;
  std::vector<uint32_t> offset;  // rays.size()+1 prefix sums into the arrays below
  std::vector<Vec3> positions;
  std::vector<double> depths;  // along-ray distance of each sample
  size_t truncated_rays = 0;   // rays that hit the per-ray sample cap

  size_t ray_count() const { return rays.size(); }
  size_t sample_count() const { return positions.size(); }
  uint32_t begin(size_t r) const { return offset[r]; }
  uint32_t end(size_t r) const { return offset[r + 1]; }
};

RayBatch sample_rays(const VoxelGrid& grid, std::span<const Ray> rays, const SamplerConfig& cfg);

/// SDF volume-rendering weight w = sigmoid(s/tr) * sigmoid(-s/tr).
template <typename S>
inline S render_weight(S s, S tr);

template <typename S>
struct RenderOutput {
  std::vector<S> color;             // ray_count x 3
  std::vector<S> depth;             // ray_count, along-ray
  std::vector<uint8_t> degenerate;  // no samples or weight sum below 1e-12
};

/// Normalized weighted sums C = sum(w c)/sum(w), D = sum(w d)/sum(w).
template <typename S>
RenderOutput<S> composite(const RayBatch& batch, std::span<const S> sdf, std::span<const S> color,
                          S tr);

template <typename S>
struct CompositeBuffers {
  typename GradientTape<S>::BufferId color = 0;  // ray_count x 3
  typename GradientTape<S>::BufferId depth = 0;  // ray_count x 1
  std::vector<uint8_t> degenerate;
};

/// Tape-recorded composite; gradients flow to both the per-sample SDF
/// (through the weights) and the per-sample colors.
template <typename S>
CompositeBuffers<S> composite(GradientTape<S>& tape, const RayBatch& batch,
                              typename GradientTape<S>::BufferId sdf,
                              typename GradientTape<S>::BufferId color, S tr);

struct RenderedImage {
  ImageRGB color;
  ImageDepth zdepth;                // z-convention depth, 0 where invalid
  std::vector<uint8_t> valid;       // per pixel
  size_t valid_count = 0;
};

/// Renders a full view by compositing every pixel ray (inference only).
template <typename S>
RenderedImage render_image(const Model<S>& model, const CameraIntrinsics& intr, const Pose& pose,
                           const SamplerConfig& cfg, S tr);

template <typename S>
inline S render_weight(S s, S tr) {
  // sigmoid(a) * sigmoid(-a) written as e/(1+e)^2 with e = exp(-|a|):
  // exactly symmetric in s and overflow-free.
  const S a = std::abs(s / tr);
  const S e = std::exp(-a);
  const S d = S(1) + e;
  return e / (d * d);
}

}  // namespace hybridmap
