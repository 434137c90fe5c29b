#include "hybridmap/mapper.hpp"

#include <chrono>
#include <cmath>

#include "hybridmap/errors.hpp"

namespace hybridmap {

bool should_stop(std::span<const double> losses, EarlyStopPolicy policy, double rel_eps,
                 int patience) {
  const size_t k = losses.size();
  if (k < 2) return false;
  switch (policy) {
    case EarlyStopPolicy::Off:
      return false;
    case EarlyStopPolicy::RelativeImprovement: {
      if (int(k) < patience + 1) return false;
      for (size_t i = k - size_t(patience); i < k; ++i) {
        const double prev = losses[i - 1];
        const double improvement = prev > 0 ? (prev - losses[i]) / prev : 0.0;
        if (improvement >= rel_eps) return false;
      }
      return true;
    }
    case EarlyStopPolicy::PaperLiteral: {
      double mean = 0;
      for (double v : losses) mean += v;
      mean /= double(k);
      return losses[k - 1] > 2.0 * mean;
    }
  }
  return false;
}

Mapper::Mapper(const MapConfig& cfg)
    : cfg_(cfg),
      model_(std::make_unique<Model<float>>(cfg.model_config<float>())),
      keyframes_(cfg.truncation, cfg.insert_threshold),
      adam_({cfg.beta1, cfg.beta2, cfg.adam_eps}),
      rng_(Rng::derive(cfg.seed, 0xba7c4)) {
  cfg_.validate();
}

std::vector<Ray> Mapper::sample_batch(const std::vector<const RGBDFrame*>& frames,
                                      int rays_total) {
  std::vector<Ray> rays;
  rays.reserve(size_t(rays_total));
  const int n = int(frames.size());
  const int share = rays_total / n;
  for (int f = 0; f < n; ++f) {
    const RGBDFrame& frame = *frames[f];
    int budget = share;
    if (f == n - 1) budget = rays_total - share * (n - 1);  // remainder to the current frame
    std::vector<std::pair<int, int>> pixels;
    pixels.reserve(size_t(budget));
    for (int i = 0; i < budget; ++i)
      pixels.emplace_back(int(rng_.uniform_index(uint64_t(frame.intrinsics.height))),
                          int(rng_.uniform_index(uint64_t(frame.intrinsics.width))));
    std::vector<Ray> frame_rays = generate_rays(frame, pixels);
    rays.insert(rays.end(), frame_rays.begin(), frame_rays.end());
  }
  return rays;
}

FrameReport Mapper::process_frame(std::shared_ptr<const RGBDFrame> frame) {
  const auto t_start = std::chrono::steady_clock::now();
  if (frame->frame_id <= last_frame_id_)
    throw InputError("frames must arrive with increasing frame_id");
  last_frame_id_ = frame->frame_id;

  FrameReport report;
  report.frame_id = frame->frame_id;

  SparseVoxelOctree<float>& octree = model_->octree();
  typename SparseVoxelOctree<float>::FrameBins bins;
  const auto alloc = octree.allocate_from_frame(*frame, &bins);
  report.new_voxels = alloc.new_leaves.size();
  if (cfg_.use_expansion) {
    report.expanded_voxels = octree.expand_voxels(*frame, bins).size();
  }
  if (cfg_.use_priors) {
    report.priors_initialized = octree.initialize_priors(*frame);
  }

  keyframes_.sync_labels(octree.leaf_count());
  const auto insertion = keyframes_.maybe_insert(frame, octree);
  report.keyframe_inserted = insertion.inserted;
  report.insertion_ratio = insertion.ratio;

  // Selection runs once per frame, before the first iteration.
  std::vector<size_t> selected;
  if (cfg_.keyframe_strategy == KeyframeStrategy::Coverage)
    selected = keyframes_.select_coverage(cfg_.keyframes_per_iter);
  else
    selected = keyframes_.select_random(cfg_.keyframes_per_iter, rng_);
  report.selected_keyframes = selected.size();

  std::vector<const RGBDFrame*> batch_frames;
  for (size_t idx : selected) {
    const RGBDFrame* f = keyframes_.keyframe(idx).frame.get();
    if (f != frame.get()) batch_frames.push_back(f);
  }
  batch_frames.push_back(frame.get());  // current frame is always optimized

  const SamplerConfig sampler{cfg_.step, cfg_.max_samples_per_ray};
  const float tr = float(cfg_.truncation);
  std::vector<double> history;
  for (int iter = 0; iter < cfg_.max_iters; ++iter) {
    const std::vector<Ray> rays = sample_batch(batch_frames, cfg_.rays_per_iter);
    const RayBatch batch = sample_rays(octree, rays, sampler);
    report.rays += batch.ray_count();
    report.samples += batch.sample_count();
    if (batch.sample_count() == 0) break;  // nothing mapped along any ray yet

    GradientTape<float> tape;
    const auto s = model_->predict_sdf(tape, batch.positions);
    const auto c = model_->predict_color(tape, batch.positions);
    const auto rendered = composite<float>(tape, batch, s, c, tr);
    for (uint8_t d : rendered.degenerate) report.degenerate_rays += d;
    const LossValues<float> losses = record_losses<float>(tape, batch, s, rendered, tr,
                                                          cfg_.loss_weights);
    if (!std::isfinite(double(losses.total)))
      throw NumericalError("non-finite loss at frame " + std::to_string(frame->frame_id));

    model_->zero_grads();
    tape.backward(1.f);

    const auto step_result = adam_.step({{&octree.vertex_sdf(), cfg_.lr_sdf},
                                         {&model_->geometry_encoding().table(), cfg_.lr_hash},
                                         {&model_->color_encoding().table(), cfg_.lr_hash},
                                         {&model_->geometry_mlp().params(), cfg_.lr_mlp},
                                         {&model_->color_mlp().params(), cfg_.lr_mlp}});
    if (!step_result.applied) ++report.rejected_steps;

    report.final_losses = losses;
    report.iterations = iter + 1;
    history.push_back(double(losses.total));
    if (should_stop(history, cfg_.early_stop, cfg_.rel_improve, cfg_.rel_patience)) break;
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace hybridmap
