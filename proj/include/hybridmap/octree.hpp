#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "hybridmap/geometry.hpp"
#include "hybridmap/params.hpp"

namespace hybridmap {

/// Integer leaf/vertex coordinate packed for hashing. Valid range per axis
/// is [-2^20, 2^20).
uint64_t pack_grid_coord(int32_t x, int32_t y, int32_t z);

struct RayInterval {
  double t_near = 0;
  double t_far = 0;
};

struct VoxelRecord {
  Eigen::Vector3i coord;             // leaf cell = floor(p / voxel_size)
  std::array<uint32_t, 8> vertices;  // corner k offsets: (k&1, k>>1&1, k>>2&1)
  int64_t frame_id = -1;             // frame that allocated the leaf
  bool expanded = false;             // allocated by the boundary expansion rule
};

/// Scalar-independent sparse voxel structure: the leaf map at a single
/// depth, deduplicated vertices, and ray/grid geometry. The paper-style
/// octree is stored flat; only the leaf level is ever queried.
class VoxelGrid {
 public:
  explicit VoxelGrid(double voxel_size);

  double voxel_size() const { return voxel_size_; }
  size_t leaf_count() const { return leaves_.size(); }
  size_t vertex_count() const { return vertex_coords_.size(); }
  bool empty() const { return leaves_.empty(); }

  const std::vector<VoxelRecord>& leaves() const { return leaves_; }
  const VoxelRecord& leaf(uint32_t id) const { return leaves_[id]; }
  const Eigen::Vector3i& vertex_coord(uint32_t id) const { return vertex_coords_[id]; }
  Vec3 vertex_position(uint32_t id) const { return vertex_coords_[id].cast<double>() * voxel_size_; }
  Vec3 leaf_center(uint32_t id) const {
    return (leaves_[id].coord.cast<double>() + Vec3::Constant(0.5).eval()) * voxel_size_;
  }

  Eigen::Vector3i cell_of(const Vec3& p) const;
  std::optional<uint32_t> find_leaf(const Eigen::Vector3i& cell) const;
  bool contains(const Vec3& p) const { return find_leaf(cell_of(p)).has_value(); }

  /// World-space bounds of the allocated leaves (empty grid: zero box).
  void aabb(Vec3* lo, Vec3* hi) const;
  const Eigen::Vector3i& cell_lo() const { return cell_lo_; }
  const Eigen::Vector3i& cell_hi() const { return cell_hi_; }

  /// Ordered disjoint t-intervals where the ray is inside allocated leaves.
  /// Abutting intervals across shared faces are merged. The traversal runs
  /// from max(t_min, entry into the leaf bounding box) to the box exit.
  std::vector<RayInterval> ray_intersect(const Vec3& origin, const Vec3& dir,
                                         double t_min = 0.0) const;

 protected:
  uint32_t create_leaf(const Eigen::Vector3i& cell, int64_t frame_id, bool expanded);
  /// Called whenever a new vertex is created; index equals the new count - 1.
  virtual void on_vertex_created() {}

  double voxel_size_;
  std::vector<VoxelRecord> leaves_;                 // creation order
  std::vector<Eigen::Vector3i> vertex_coords_;      // creation order
  std::unordered_map<uint64_t, uint32_t> leaf_map_;    // packed cell -> leaf id
  std::unordered_map<uint64_t, uint32_t> vertex_map_;  // packed coord -> vertex id
  Eigen::Vector3i cell_lo_ = Eigen::Vector3i::Zero();
  Eigen::Vector3i cell_hi_ = Eigen::Vector3i::Zero();
};

/// Trilinear interpolation record for one query point: the 8 vertex ids and
/// weights, so gradients can be routed back to the vertex SDF array
/// (d s^c / d s_k = weight_k).
template <typename S>
struct CoarseInterp {
  std::array<uint32_t, 8> vertex;
  std::array<S, 8> weight;
};

/// Sparse voxel octree whose leaf vertices carry optimizable coarse SDF
/// values. Uninitialized vertices default to +truncation (free space).
template <typename S>
class SparseVoxelOctree : public VoxelGrid {
 public:
  struct Config {
    double voxel_size = 0.1;
    S default_sdf = S(0.05);      // value for never-initialized vertices
    int min_points = 10;          // leaf created when count > min_points
    double expansion_band = 0.2;  // fraction of voxel_size
  };

  explicit SparseVoxelOctree(const Config& cfg);

  /// Per-frame back-projected points binned by leaf cell, kept for the
  /// expansion pass.
  struct FrameBins {
    std::map<uint64_t, std::vector<Vec3>> cells;  // ordered for determinism
    size_t total_points = 0;
  };

  struct AllocationResult {
    std::vector<uint32_t> new_leaves;
    size_t points = 0;
  };

  /// Bins the frame's back-projected depth points and creates every missing
  /// leaf holding more than min_points of them. Idempotent per frame.
  AllocationResult allocate_from_frame(const RGBDFrame& frame, FrameBins* bins_out = nullptr);

  /// Boundary expansion: for each allocated leaf whose frame points all lie
  /// within expansion_band * voxel_size of one face, allocates the missing
  /// neighbor across that face (marked expanded).
  std::vector<uint32_t> expand_voxels(const RGBDFrame& frame, const FrameBins& bins);

  /// Writes projective SDF priors D(u) - d_p into vertices not yet
  /// initialized, skipping occluded measurements
  /// (D(u) - d_p >= sqrt(6) * voxel_size). First observation wins.
  size_t initialize_priors(const RGBDFrame& frame);
  size_t initialize_priors(const RGBDFrame& frame, std::span<const uint32_t> vertex_ids);

  /// Trilinear coarse SDF at points that lie inside allocated leaves
  /// (boundary points belong to the larger-index cell). Throws QueryError
  /// for points outside every leaf.
  void query_coarse_sdf(std::span<const Vec3> points, std::span<S> out,
                        std::vector<CoarseInterp<S>>* records = nullptr) const;

  /// Trilerp evaluated inside a specific leaf; the point must lie within
  /// the leaf's closed cube (used by meshing for shared boundary nodes).
  S sdf_in_leaf(uint32_t leaf_id, const Vec3& p, CoarseInterp<S>* record = nullptr) const;

  ParamGroup<S>& vertex_sdf() { return vertex_sdf_; }
  const ParamGroup<S>& vertex_sdf() const { return vertex_sdf_; }
  bool vertex_initialized(uint32_t id) const { return vertex_initialized_[id] != 0; }
  size_t initialized_count() const;
  S default_sdf() const { return cfg_.default_sdf; }
  const Config& config() const { return cfg_; }

  /// Plain-text table, one leaf per line: "ix iy iz : s0 ... s7".
  void debug_dump(std::ostream& os) const;

 protected:
  void on_vertex_created() override;

 private:
  Config cfg_;
  ParamGroup<S> vertex_sdf_;
  std::vector<uint8_t> vertex_initialized_;
  std::vector<uint32_t> uninitialized_;  // ids still waiting for a prior
};

}  // namespace hybridmap
