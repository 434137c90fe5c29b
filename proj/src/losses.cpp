#include "hybridmap/losses.hpp"

#include <cmath>

#include "hybridmap/errors.hpp"

namespace hybridmap {

namespace {

template <typename S>
inline S sign_of(S x) {
  return x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0));
}

template <typename S>
struct LossOp final : TapeOp<S> {
  using BufferId = typename GradientTape<S>::BufferId;
  BufferId sdf, ray_color, ray_depth, loss;
  LossWeights weights;

  std::vector<uint32_t> offset;
  std::vector<uint8_t> sample_set;  // 0 none, 1 free-space, 2 truncation
  std::vector<S> sample_target;     // truncation target D_gt - d_j
  std::vector<uint8_t> skip_ray;    // degenerate
  std::vector<uint8_t> has_depth;
  std::vector<S> gt_depth;
  std::vector<S> gt_color;          // ray_count x 3
  std::vector<uint32_t> n_fs, n_tr;  // per ray set sizes
  size_t rays_fs = 0, rays_sdf = 0, rays_depth = 0, rays_rgb = 0;

  void backward(GradientTape<S>& tape) override {
    const S seed = tape.grads(loss)[4];  // d total
    if (seed == S(0)) return;
    auto s = tape.values(sdf);
    auto g_s = tape.grads(sdf);
    auto C = tape.values(ray_color);
    auto gC = tape.grads(ray_color);
    auto D = tape.values(ray_depth);
    auto gD = tape.grads(ray_depth);

    const S c_fs = rays_fs ? seed * S(weights.fs) / S(rays_fs) : S(0);
    const S c_sdf = rays_sdf ? seed * S(weights.sdf) / S(rays_sdf) : S(0);
    const S c_d = rays_depth ? seed * S(weights.depth) / S(rays_depth) : S(0);
    const S c_rgb = rays_rgb ? seed * S(weights.rgb) / S(rays_rgb) / S(3) : S(0);

    for (size_t r = 0; r + 1 < offset.size(); ++r) {
      if (skip_ray[r]) continue;
      if (has_depth[r]) {
        const S inv_fs = n_fs[r] ? S(1) / S(n_fs[r]) : S(0);
        const S inv_tr = n_tr[r] ? S(1) / S(n_tr[r]) : S(0);
        for (uint32_t j = offset[r]; j < offset[r + 1]; ++j) {
          if (sample_set[j] == 1) {
            g_s[j] += c_fs * inv_fs * S(2) * (s[j] - sample_target[j]);
          } else if (sample_set[j] == 2) {
            g_s[j] += c_sdf * inv_tr * S(2) * (s[j] - sample_target[j]);
          }
        }
        gD[r] += c_d * sign_of(D[r] - gt_depth[r]);
      }
      for (int ch = 0; ch < 3; ++ch)
        gC[r * 3 + ch] += c_rgb * sign_of(C[r * 3 + ch] - gt_color[r * 3 + ch]);
    }
  }
  const char* name() const override { return "losses"; }
};

}  // namespace

template <typename S>
LossValues<S> record_losses(GradientTape<S>& tape, const RayBatch& batch,
                            typename GradientTape<S>::BufferId sdf,
                            const CompositeBuffers<S>& rendered, S tr,
                            const LossWeights& weights) {
  if (batch.ray_count() == 0) throw InputError("loss evaluation on empty ray batch");

  auto op = std::make_unique<LossOp<S>>();
  op->sdf = sdf;
  op->ray_color = rendered.color;
  op->ray_depth = rendered.depth;
  op->weights = weights;
  op->offset = batch.offset;

  const size_t R = batch.ray_count();
  const size_t N = batch.sample_count();
  op->sample_set.assign(N, 0);
  op->sample_target.assign(N, S(0));
  op->skip_ray.assign(R, 0);
  op->has_depth.assign(R, 0);
  op->gt_depth.assign(R, S(0));
  op->gt_color.assign(R * 3, S(0));
  op->n_fs.assign(R, 0);
  op->n_tr.assign(R, 0);

  auto s = tape.values(sdf);
  auto C = tape.values(rendered.color);
  auto D = tape.values(rendered.depth);

  double sum_fs = 0, sum_sdf = 0, sum_d = 0, sum_rgb = 0;
  for (size_t r = 0; r < R; ++r) {
    const Ray& ray = batch.rays[r];
    op->gt_depth[r] = S(ray.gt_depth);
    for (int ch = 0; ch < 3; ++ch) op->gt_color[r * 3 + ch] = S(ray.gt_color[ch]);
    if (rendered.degenerate[r]) {
      op->skip_ray[r] = 1;
      continue;
    }

    if (ray.gt_depth > 0) {
      op->has_depth[r] = 1;
      double ray_fs = 0, ray_sdf = 0;
      for (uint32_t j = batch.begin(r); j < batch.end(r); ++j) {
        const double d = batch.depths[j];
        if (d < ray.gt_depth - double(tr)) {
          op->sample_set[j] = 1;
          op->sample_target[j] = tr;
          const double e = double(s[j]) - double(tr);
          ray_fs += e * e;
          ++op->n_fs[r];
        } else if (std::abs(ray.gt_depth - d) <= double(tr)) {
          op->sample_set[j] = 2;
          const S target = S(ray.gt_depth - d);
          op->sample_target[j] = target;
          const double e = double(s[j]) - double(target);
          ray_sdf += e * e;
          ++op->n_tr[r];
        }
      }
      if (op->n_fs[r]) {
        sum_fs += ray_fs / op->n_fs[r];
        ++op->rays_fs;
      }
      if (op->n_tr[r]) {
        sum_sdf += ray_sdf / op->n_tr[r];
        ++op->rays_sdf;
      }
      sum_d += std::abs(double(D[r]) - ray.gt_depth);
      ++op->rays_depth;
    }
    double rgb = 0;
    for (int ch = 0; ch < 3; ++ch) rgb += std::abs(double(C[r * 3 + ch]) - ray.gt_color[ch]);
    sum_rgb += rgb / 3.0;
    ++op->rays_rgb;
  }

  LossValues<S> values;
  values.fs = op->rays_fs ? S(sum_fs / double(op->rays_fs)) : S(0);
  values.sdf = op->rays_sdf ? S(sum_sdf / double(op->rays_sdf)) : S(0);
  values.depth = op->rays_depth ? S(sum_d / double(op->rays_depth)) : S(0);
  values.rgb = op->rays_rgb ? S(sum_rgb / double(op->rays_rgb)) : S(0);
  values.total = S(weights.fs) * values.fs + S(weights.sdf) * values.sdf +
                 S(weights.depth) * values.depth + S(weights.rgb) * values.rgb;

  op->loss = tape.add_buffer(1, 5);
  auto out = tape.values(op->loss);
  out[0] = values.fs;
  out[1] = values.sdf;
  out[2] = values.depth;
  out[3] = values.rgb;
  out[4] = values.total;
  tape.set_loss(op->loss, 4);
  tape.record(std::move(op));
  return values;
}

template LossValues<float> record_losses<float>(GradientTape<float>&, const RayBatch&,
                                                GradientTape<float>::BufferId,
                                                const CompositeBuffers<float>&, float,
                                                const LossWeights&);
template LossValues<double> record_losses<double>(GradientTape<double>&, const RayBatch&,
                                                  GradientTape<double>::BufferId,
                                                  const CompositeBuffers<double>&, double,
                                                  const LossWeights&);

}  // namespace hybridmap
