#include "hybridmap/keyframes.hpp"

#include <algorithm>
#include <cmath>

namespace hybridmap {

std::vector<uint32_t> covered_voxels(const RGBDFrame& frame, const VoxelGrid& grid, double tr) {
  std::vector<uint32_t> out;
  for (uint32_t id = 0; id < grid.leaf_count(); ++id) {
    const auto proj = project(grid.leaf_center(id), frame.intrinsics, frame.pose);
    if (!proj) continue;
    const double measured = frame.depth.at(int(std::floor(proj->v)), int(std::floor(proj->u)));
    if (proj->z <= measured + tr) out.push_back(id);
  }
  return out;  // ids ascend by construction
}

KeyframeSet::InsertionCheck KeyframeSet::maybe_insert(std::shared_ptr<const RGBDFrame> frame,
                                                      const VoxelGrid& grid) {
  InsertionCheck check;
  std::vector<uint32_t> covered = covered_voxels(*frame, grid, tr_);
  check.n_current = covered.size();
  if (keyframes_.empty()) {
    check.inserted = true;
  } else {
    const std::vector<uint32_t>& last = keyframes_.back().covered;
    check.n_last = last.size();
    std::vector<uint32_t> overlap;
    std::set_intersection(covered.begin(), covered.end(), last.begin(), last.end(),
                          std::back_inserter(overlap));
    check.n_overlap = overlap.size();
    const size_t denom = check.n_current + check.n_last;
    check.ratio = denom ? double(check.n_overlap) / double(denom) : 0.0;
    check.inserted = check.ratio < insert_threshold_;
  }
  if (check.inserted) keyframes_.push_back({std::move(frame), std::move(covered)});
  return check;
}

void KeyframeSet::sync_labels(size_t leaf_count) {
  if (observed_.size() < leaf_count) observed_.resize(leaf_count, 0);
}

size_t KeyframeSet::observed_count() const {
  size_t n = 0;
  for (uint8_t v : observed_) n += v;
  return n;
}

std::vector<size_t> KeyframeSet::select_coverage(int k) {
  std::vector<size_t> selected;
  if (keyframes_.empty() || k < 1) return selected;

  auto gain = [this](const Keyframe& kf) {
    size_t g = 0;
    for (uint32_t id : kf.covered)
      if (id < observed_.size() && !observed_[id]) ++g;
    return g;
  };

  // Reset once the keyframe set cannot reach any unobserved voxel anymore
  // (everything it covers has been observed); labels then start over.
  size_t best = 0;
  for (const Keyframe& kf : keyframes_) best = std::max(best, gain(kf));
  if (best == 0) {
    std::fill(observed_.begin(), observed_.end(), 0);
    ++resets_;
  }

  std::vector<uint8_t> taken(keyframes_.size(), 0);
  const int rounds = std::min<int>(k, int(keyframes_.size()));
  for (int round = 0; round < rounds; ++round) {
    size_t best_gain = 0;
    int best_idx = -1;
    for (size_t i = 0; i < keyframes_.size(); ++i) {
      if (taken[i]) continue;
      const size_t g = gain(keyframes_[i]);
      if (best_idx < 0 || g > best_gain) {  // ties keep the earliest keyframe
        best_gain = g;
        best_idx = int(i);
      }
    }
    if (best_idx < 0) break;
    taken[best_idx] = 1;
    selected.push_back(size_t(best_idx));
    for (uint32_t id : keyframes_[best_idx].covered)
      if (id < observed_.size()) observed_[id] = 1;
  }
  return selected;
}

std::vector<size_t> KeyframeSet::select_random(int k, Rng& rng) {
  std::vector<size_t> indices(keyframes_.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  // Fisher-Yates prefix shuffle.
  const size_t take = std::min<size_t>(size_t(std::max(k, 0)), indices.size());
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + size_t(rng.uniform_index(indices.size() - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(take);
  return indices;
}

}  // namespace hybridmap
