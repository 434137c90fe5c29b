#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "hybridmap/geometry.hpp"
#include "hybridmap/octree.hpp"
#include "hybridmap/rng.hpp"

namespace hybridmap {

/// Leaves whose center projects into the frame with camera depth in
/// (0, measured depth at that pixel + tr]. Sorted by leaf id.
std::vector<uint32_t> covered_voxels(const RGBDFrame& frame, const VoxelGrid& grid, double tr);

struct Keyframe {
  std::shared_ptr<const RGBDFrame> frame;
  std::vector<uint32_t> covered;  // frozen at insertion, sorted
};

/// Keyframe store with the global observed/unobserved voxel labeling used
/// by coverage-maximizing selection.
class KeyframeSet {
 public:
  KeyframeSet(double tr, double insert_threshold)
      : tr_(tr), insert_threshold_(insert_threshold) {}

  struct InsertionCheck {
    size_t n_current = 0, n_last = 0, n_overlap = 0;
    double ratio = 0;
    bool inserted = false;
  };

  /// Inserts iff N_o / (N_c + N_l) < threshold (always inserts the first
  /// frame). The covered set is frozen from the voxels allocated right now.
  InsertionCheck maybe_insert(std::shared_ptr<const RGBDFrame> frame, const VoxelGrid& grid);

  /// Extends the label map to the current leaf count (new leaves start
  /// unobserved).
  void sync_labels(size_t leaf_count);

  /// Greedy maximum-coverage selection of up to K keyframes over voxels
  /// still labeled unobserved (ties break to the lowest frame id, i.e. the
  /// earliest keyframe). Selected keyframes' covered voxels are marked
  /// observed. When no keyframe covers any unobserved voxel (in particular
  /// when everything is observed), all labels reset to unobserved first.
  std::vector<size_t> select_coverage(int k);

  /// Baseline strategy: K distinct keyframes uniformly at random; labels
  /// untouched.
  std::vector<size_t> select_random(int k, Rng& rng);

  size_t size() const { return keyframes_.size(); }
  const Keyframe& keyframe(size_t i) const { return keyframes_[i]; }
  const std::vector<uint8_t>& labels() const { return observed_; }
  size_t observed_count() const;
  size_t reset_count() const { return resets_; }

 private:
  double tr_;
  double insert_threshold_;
  std::vector<Keyframe> keyframes_;
  std::vector<uint8_t> observed_;
  size_t resets_ = 0;
};

}  // namespace hybridmap
