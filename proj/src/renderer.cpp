#include "hybridmap/renderer.hpp"

#include <cmath>

#include "hybridmap/scalar_math.hpp"

namespace hybridmap {

RayBatch sample_rays(const VoxelGrid& grid, std::span<const Ray> rays, const SamplerConfig& cfg) {
  RayBatch batch;
  batch.rays.assign(rays.begin(), rays.end());
  batch.offset.reserve(rays.size() + 1);
  batch.offset.push_back(0);
  for (const Ray& ray : rays) {
    int count = 0;
    bool truncated = false;
    const auto intervals = grid.ray_intersect(ray.origin, ray.direction, 0.0);
    for (const RayInterval& iv : intervals) {
      for (double t = iv.t_near + cfg.step * 0.5; t < iv.t_far; t += cfg.step) {
        if (count >= cfg.max_samples_per_ray) {
          truncated = true;
          break;
        }
        batch.positions.push_back(ray.origin + t * ray.direction);
        batch.depths.push_back(t);
        ++count;
      }
      if (truncated) break;
    }
    if (truncated) ++batch.truncated_rays;
    batch.offset.push_back(uint32_t(batch.positions.size()));
  }
  return batch;
}

namespace {
constexpr double kDegenerateWeightSum = 1e-12;
}

template <typename S>
RenderOutput<S> composite(const RayBatch& batch, std::span<const S> sdf, std::span<const S> color,
                          S tr) {
  const size_t R = batch.ray_count();
  RenderOutput<S> out;
  out.color.assign(R * 3, S(0));
  out.depth.assign(R, S(0));
  out.degenerate.assign(R, 0);
  for (size_t r = 0; r < R; ++r) {
    const uint32_t j0 = batch.begin(r), j1 = batch.end(r);
    S sum_w = S(0);
    for (uint32_t j = j0; j < j1; ++j) sum_w += render_weight(sdf[j], tr);
    if (j0 == j1 || !(double(sum_w) > kDegenerateWeightSum)) {
      out.degenerate[r] = 1;
      continue;
    }
    S c[3] = {S(0), S(0), S(0)};
    S d = S(0);
    for (uint32_t j = j0; j < j1; ++j) {
      const S w = render_weight(sdf[j], tr);
      for (int ch = 0; ch < 3; ++ch) c[ch] += w * color[j * 3 + ch];
      d += w * S(batch.depths[j]);
    }
    for (int ch = 0; ch < 3; ++ch) out.color[r * 3 + ch] = c[ch] / sum_w;
    out.depth[r] = d / sum_w;
  }
  return out;
}

namespace {

template <typename S>
struct SdfRenderOp final : TapeOp<S> {
  using BufferId = typename GradientTape<S>::BufferId;
  BufferId sdf, color, out_color, out_depth;
  S tr;
  std::vector<uint32_t> offset;  // copied from the batch; the op outlives it
  std::vector<double> depths;
  std::vector<S> weight, sig;  // per sample: w_j and sigmoid(s_j/tr)
  std::vector<S> sum_w;        // per ray
  std::vector<uint8_t> degenerate;

  void backward(GradientTape<S>& tape) override {
    auto gC = tape.grads(out_color);
    auto gD = tape.grads(out_depth);
    auto C = tape.values(out_color);
    auto D = tape.values(out_depth);
    auto col = tape.values(color);
    auto g_s = tape.grads(sdf);
    auto g_col = tape.grads(color);
    for (size_t r = 0; r + 1 < offset.size(); ++r) {
      if (degenerate[r]) continue;
      const S inv_w = S(1) / sum_w[r];
      const S gd = gD[r];
      const S gc0 = gC[r * 3 + 0], gc1 = gC[r * 3 + 1], gc2 = gC[r * 3 + 2];
      if (gd == S(0) && gc0 == S(0) && gc1 == S(0) && gc2 == S(0)) continue;
      for (uint32_t j = offset[r]; j < offset[r + 1]; ++j) {
        const S w = weight[j];
        // dC/dc_j = w/W; dC/dw_j = (c_j - C)/W; dD/dw_j = (d_j - D)/W
        S common = gd * (S(depths[j]) - D[r]) * inv_w;
        common += gc0 * (col[j * 3 + 0] - C[r * 3 + 0]) * inv_w;
        common += gc1 * (col[j * 3 + 1] - C[r * 3 + 1]) * inv_w;
        common += gc2 * (col[j * 3 + 2] - C[r * 3 + 2]) * inv_w;
        g_col[j * 3 + 0] += gc0 * w * inv_w;
        g_col[j * 3 + 1] += gc1 * w * inv_w;
        g_col[j * 3 + 2] += gc2 * w * inv_w;
        // dw/ds = w * (sigmoid(-s/tr) - sigmoid(s/tr)) / tr
        const S dwds = w * (S(1) - S(2) * sig[j]) / tr;
        g_s[j] += common * dwds;
      }
    }
  }
  const char* name() const override { return "sdf_render"; }
};

}  // namespace

template <typename S>
CompositeBuffers<S> composite(GradientTape<S>& tape, const RayBatch& batch,
                              typename GradientTape<S>::BufferId sdf,
                              typename GradientTape<S>::BufferId color, S tr) {
  const size_t R = batch.ray_count();
  auto op = std::make_unique<SdfRenderOp<S>>();
  op->sdf = sdf;
  op->color = color;
  op->offset = batch.offset;
  op->depths = batch.depths;
  op->tr = tr;
  op->out_color = tape.add_buffer(R, 3);
  op->out_depth = tape.add_buffer(R, 1);
  op->weight.resize(batch.sample_count());
  op->sig.resize(batch.sample_count());
  op->sum_w.assign(R, S(0));
  op->degenerate.assign(R, 0);

  auto s = tape.values(sdf);
  auto c = tape.values(color);
  auto C = tape.values(op->out_color);
  auto D = tape.values(op->out_depth);
  for (size_t r = 0; r < R; ++r) {
    const uint32_t j0 = batch.begin(r), j1 = batch.end(r);
    S sum_w = S(0);
    for (uint32_t j = j0; j < j1; ++j) {
      op->weight[j] = render_weight(s[j], tr);
      op->sig[j] = sigmoid(s[j] / tr);
      sum_w += op->weight[j];
    }
    op->sum_w[r] = sum_w;
    if (j0 == j1 || !(double(sum_w) > kDegenerateWeightSum)) {
      op->degenerate[r] = 1;
      continue;
    }
    S acc[3] = {S(0), S(0), S(0)};
    S d = S(0);
    for (uint32_t j = j0; j < j1; ++j) {
      const S w = op->weight[j];
      for (int ch = 0; ch < 3; ++ch) acc[ch] += w * c[j * 3 + ch];
      d += w * S(batch.depths[j]);
    }
    for (int ch = 0; ch < 3; ++ch) C[r * 3 + ch] = acc[ch] / sum_w;
    D[r] = d / sum_w;
  }

  CompositeBuffers<S> out;
  out.color = op->out_color;
  out.depth = op->out_depth;
  out.degenerate = op->degenerate;
  tape.record(std::move(op));
  return out;
}

template <typename S>
RenderedImage render_image(const Model<S>& model, const CameraIntrinsics& intr, const Pose& pose,
                           const SamplerConfig& cfg, S tr) {
  RenderedImage out;
  out.color = ImageRGB(intr.width, intr.height);
  out.zdepth = ImageDepth(intr.width, intr.height);
  out.valid.assign(size_t(intr.width) * intr.height, 0);

  std::vector<Ray> rays;
  rays.reserve(size_t(intr.width) * intr.height);
  for (int row = 0; row < intr.height; ++row)
    for (int col = 0; col < intr.width; ++col) rays.push_back(pixel_ray(intr, pose, row, col));

  const RayBatch batch = sample_rays(model.octree(), rays, cfg);
  if (batch.sample_count() == 0) return out;

  std::vector<S> sdf(batch.sample_count());
  std::vector<S> color(batch.sample_count() * 3);
  model.predict_sdf(batch.positions, sdf);
  model.predict_color(batch.positions, color.data());
  const RenderOutput<S> rendered = composite<S>(batch, sdf, color, tr);

  for (size_t r = 0; r < batch.ray_count(); ++r) {
    if (rendered.degenerate[r]) continue;
    const Ray& ray = batch.rays[r];
    out.color.set_pixel(ray.pixel_row, ray.pixel_col,
                        Vec3(double(rendered.color[r * 3 + 0]), double(rendered.color[r * 3 + 1]),
                             double(rendered.color[r * 3 + 2])));
    out.zdepth.at(ray.pixel_row, ray.pixel_col) =
        float(double(rendered.depth[r]) / ray_norm_per_z(intr, ray.pixel_row, ray.pixel_col));
    out.valid[size_t(ray.pixel_row) * intr.width + ray.pixel_col] = 1;
    ++out.valid_count;
  }
  return out;
}

template RenderOutput<float> composite<float>(const RayBatch&, std::span<const float>,
                                              std::span<const float>, float);
template RenderOutput<double> composite<double>(const RayBatch&, std::span<const double>,
                                                std::span<const double>, double);
template CompositeBuffers<float> composite<float>(GradientTape<float>&, const RayBatch&,
                                                  GradientTape<float>::BufferId,
                                                  GradientTape<float>::BufferId, float);
template CompositeBuffers<double> composite<double>(GradientTape<double>&, const RayBatch&,
                                                    GradientTape<double>::BufferId,
                                                    GradientTape<double>::BufferId, double);
template RenderedImage render_image<float>(const Model<float>&, const CameraIntrinsics&,
                                           const Pose&, const SamplerConfig&, float);
template RenderedImage render_image<double>(const Model<double>&, const CameraIntrinsics&,
                                            const Pose&, const SamplerConfig&, double);

}  // namespace hybridmap
