#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hybridmap/adam.hpp"
#include "hybridmap/config.hpp"
#include "hybridmap/keyframes.hpp"
#include "hybridmap/losses.hpp"
#include "hybridmap/model.hpp"
#include "hybridmap/renderer.hpp"
#include "hybridmap/rng.hpp"

namespace hybridmap {

/// Early-ending rule over the loss history of the current frame's round.
/// RelativeImprovement stops after `patience` consecutive iterations whose
/// relative improvement falls below rel_eps; PaperLiteral stops when the
/// latest loss exceeds twice the round's running mean.
bool should_stop(std::span<const double> losses, EarlyStopPolicy policy, double rel_eps,
                 int patience);

struct FrameReport {
  int64_t frame_id = 0;
  int iterations = 0;
  LossValues<float> final_losses;
  size_t new_voxels = 0;
  size_t expanded_voxels = 0;
  size_t priors_initialized = 0;
  bool keyframe_inserted = false;
  double insertion_ratio = 0;
  size_t selected_keyframes = 0;
  size_t rays = 0;
  size_t samples = 0;
  size_t degenerate_rays = 0;
  size_t rejected_steps = 0;
  double seconds = 0;
};

/// The online mapping loop: allocate voxels, expand, write SDF priors,
/// maintain keyframes, and optimize the model on coverage-selected ray
/// batches with adaptive early ending.
class Mapper {
 public:
  explicit Mapper(const MapConfig& cfg);

  FrameReport process_frame(std::shared_ptr<const RGBDFrame> frame);

  Model<float>& model() { return *model_; }
  const Model<float>& model() const { return *model_; }
  const MapConfig& config() const { return cfg_; }
  KeyframeSet& keyframes() { return keyframes_; }
  const KeyframeSet& keyframes() const { return keyframes_; }

  /// Draws the per-iteration pixel batch from the given frames (even split,
  /// remainder to the last entry, which is the current frame).
  std::vector<Ray> sample_batch(const std::vector<const RGBDFrame*>& frames, int rays_total);

 private:
  MapConfig cfg_;
  std::unique_ptr<Model<float>> model_;
  KeyframeSet keyframes_;
  AdamOptimizer<float> adam_;
  Rng rng_;
  int64_t last_frame_id_ = -1;
};

}  // namespace hybridmap
