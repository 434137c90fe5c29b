#include "hybridmap/octree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hybridmap/errors.hpp"

namespace hybridmap {

namespace {
constexpr int32_t kCoordBias = 1 << 20;
constexpr int kCoordBits = 21;

inline int32_t floor_div_coord(double v, double h) {
  return int32_t(std::floor(v / h));
}

inline Eigen::Vector3i unpack_grid_coord(uint64_t key) {
  const uint32_t mask = (1u << kCoordBits) - 1;
  int32_t z = int32_t(key & mask) - kCoordBias;
  int32_t y = int32_t((key >> kCoordBits) & mask) - kCoordBias;
  int32_t x = int32_t((key >> (2 * kCoordBits)) & mask) - kCoordBias;
  return {x, y, z};
}
}  // namespace

uint64_t pack_grid_coord(int32_t x, int32_t y, int32_t z) {
  const uint64_t ux = uint32_t(x + kCoordBias);
  const uint64_t uy = uint32_t(y + kCoordBias);
  const uint64_t uz = uint32_t(z + kCoordBias);
  return (ux << (2 * kCoordBits)) | (uy << kCoordBits) | uz;
}

VoxelGrid::VoxelGrid(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0)) throw InputError("voxel_size must be positive");
}

Eigen::Vector3i VoxelGrid::cell_of(const Vec3& p) const {
  return {floor_div_coord(p.x(), voxel_size_), floor_div_coord(p.y(), voxel_size_),
          floor_div_coord(p.z(), voxel_size_)};
}

std::optional<uint32_t> VoxelGrid::find_leaf(const Eigen::Vector3i& cell) const {
  auto it = leaf_map_.find(pack_grid_coord(cell.x(), cell.y(), cell.z()));
  if (it == leaf_map_.end()) return std::nullopt;
  return it->second;
}

void VoxelGrid::aabb(Vec3* lo, Vec3* hi) const {
  if (leaves_.empty()) {
    *lo = Vec3::Zero();
    *hi = Vec3::Zero();
    return;
  }
  *lo = cell_lo_.cast<double>() * voxel_size_;
  *hi = (cell_hi_ + Eigen::Vector3i::Ones()).cast<double>() * voxel_size_;
}

uint32_t VoxelGrid::create_leaf(const Eigen::Vector3i& cell, int64_t frame_id, bool expanded) {
  VoxelRecord rec;
  rec.coord = cell;
  rec.frame_id = frame_id;
  rec.expanded = expanded;
  for (int k = 0; k < 8; ++k) {
    const Eigen::Vector3i vc(cell.x() + (k & 1), cell.y() + ((k >> 1) & 1),
                             cell.z() + ((k >> 2) & 1));
    const uint64_t key = pack_grid_coord(vc.x(), vc.y(), vc.z());
    auto [it, inserted] = vertex_map_.try_emplace(key, uint32_t(vertex_coords_.size()));
    if (inserted) {
      vertex_coords_.push_back(vc);
      on_vertex_created();
    }
    rec.vertices[k] = it->second;
  }
  const uint32_t id = uint32_t(leaves_.size());
  leaves_.push_back(rec);
  leaf_map_.emplace(pack_grid_coord(cell.x(), cell.y(), cell.z()), id);
  if (id == 0) {
    cell_lo_ = cell;
    cell_hi_ = cell;
  } else {
    cell_lo_ = cell_lo_.cwiseMin(cell);
    cell_hi_ = cell_hi_.cwiseMax(cell);
  }
  return id;
}

std::vector<RayInterval> VoxelGrid::ray_intersect(const Vec3& origin, const Vec3& dir,
                                                  double t_min) const {
  std::vector<RayInterval> out;
  if (leaves_.empty()) return out;

  Vec3 lo, hi;
  aabb(&lo, &hi);
  double t0 = t_min;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return out;
      continue;
    }
    double ta = (lo[a] - origin[a]) / dir[a];
    double tb = (hi[a] - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t0 < t1)) return out;

  const double h = voxel_size_;
  const Vec3 p0 = origin + t0 * dir;
  Eigen::Vector3i cell = cell_of(p0);
  for (int a = 0; a < 3; ++a) cell[a] = std::clamp(cell[a], cell_lo_[a], cell_hi_[a]);

  int step[3];
  double t_max[3], t_delta[3];
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0) {
      step[a] = 1;
      t_delta[a] = h / dir[a];
      t_max[a] = t0 + ((cell[a] + 1) * h - p0[a]) / dir[a];
    } else if (dir[a] < 0) {
      step[a] = -1;
      t_delta[a] = -h / dir[a];
      t_max[a] = t0 + (cell[a] * h - p0[a]) / dir[a];
    } else {
      step[a] = 0;
      t_delta[a] = std::numeric_limits<double>::infinity();
      t_max[a] = std::numeric_limits<double>::infinity();
    }
  }

  // Amanatides-Woo walk over the sparse leaf grid.
  const long max_steps =
      4 * (long(cell_hi_.x() - cell_lo_.x()) + (cell_hi_.y() - cell_lo_.y()) +
           (cell_hi_.z() - cell_lo_.z()) + 3);
  double t_cur = t0;
  for (long i = 0; i < max_steps && t_cur < t1; ++i) {
    int a = 0;
    if (t_max[1] < t_max[a]) a = 1;
    if (t_max[2] < t_max[a]) a = 2;
    double t_next = std::min(t_max[a], t1);
    if (t_next < t_cur) t_next = t_cur;

    if (t_next > t_cur && find_leaf(cell)) {
      if (!out.empty() && out.back().t_far >= t_cur - 1e-12)
        out.back().t_far = t_next;
      else
        out.push_back({t_cur, t_next});
    }
    if (t_next >= t1) break;
    cell[a] += step[a];
    t_max[a] += t_delta[a];
    t_cur = t_next;
    if (cell[a] < cell_lo_[a] - 1 || cell[a] > cell_hi_[a] + 1) break;
  }
  return out;
}

// ---------------------------------------------------------------------------

template <typename S>
SparseVoxelOctree<S>::SparseVoxelOctree(const Config& cfg)
    : VoxelGrid(cfg.voxel_size), cfg_(cfg), vertex_sdf_("octree_vertex_sdf") {}

template <typename S>
void SparseVoxelOctree<S>::on_vertex_created() {
  uninitialized_.push_back(uint32_t(vertex_sdf_.size()));
  vertex_sdf_.append(cfg_.default_sdf);
  vertex_initialized_.push_back(0);
}

template <typename S>
typename SparseVoxelOctree<S>::AllocationResult SparseVoxelOctree<S>::allocate_from_frame(
    const RGBDFrame& frame, FrameBins* bins_out) {
  FrameBins local;
  FrameBins& bins = bins_out ? *bins_out : local;
  bins.cells.clear();

  const std::vector<Vec3> points = back_project(frame);
  bins.total_points = points.size();
  for (const Vec3& p : points) {
    const Eigen::Vector3i c = cell_of(p);
    bins.cells[pack_grid_coord(c.x(), c.y(), c.z())].push_back(p);
  }

  AllocationResult res;
  res.points = points.size();
  for (const auto& [key, cell_points] : bins.cells) {
    if (int(cell_points.size()) <= cfg_.min_points) continue;
    const Eigen::Vector3i cell = unpack_grid_coord(key);
    if (find_leaf(cell)) continue;
    res.new_leaves.push_back(create_leaf(cell, frame.frame_id, false));
  }
  return res;
}

template <typename S>
std::vector<uint32_t> SparseVoxelOctree<S>::expand_voxels(const RGBDFrame& frame,
                                                          const FrameBins& bins) {
  std::vector<uint32_t> created;
  const double band = cfg_.expansion_band * voxel_size_;
  for (const auto& [key, cell_points] : bins.cells) {
    if (cell_points.empty()) continue;
    const Eigen::Vector3i cell = unpack_grid_coord(key);
    if (!find_leaf(cell)) continue;
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        const double plane = (double(cell[axis]) + side) * voxel_size_;
        bool all_in_band = true;
        for (const Vec3& p : cell_points) {
          const double dist = side ? plane - p[axis] : p[axis] - plane;
          if (!(dist < band)) {
            all_in_band = false;
            break;
          }
        }
        if (!all_in_band) continue;
        Eigen::Vector3i neighbor = cell;
        neighbor[axis] += side ? 1 : -1;
        if (!find_leaf(neighbor))
          created.push_back(create_leaf(neighbor, frame.frame_id, true));
      }
    }
  }
  return created;
}

template <typename S>
size_t SparseVoxelOctree<S>::initialize_priors(const RGBDFrame& frame) {
  const std::vector<uint32_t> pending = uninitialized_;
  return initialize_priors(frame, pending);
}

template <typename S>
size_t SparseVoxelOctree<S>::initialize_priors(const RGBDFrame& frame,
                                               std::span<const uint32_t> vertex_ids) {
  const double guard = std::sqrt(6.0) * voxel_size_;
  size_t count = 0;
  for (uint32_t id : vertex_ids) {
    if (vertex_initialized_[id]) continue;
    const auto proj = project(vertex_position(id), frame.intrinsics, frame.pose);
    if (!proj) continue;
    const int row = int(std::floor(proj->v));
    const int col = int(std::floor(proj->u));
    const double measured = frame.depth.at(row, col);
    if (measured <= 0) continue;
    const double prior = measured - proj->z;
    if (!(prior < guard)) continue;  // occluded: the vertex is far behind the measurement
    vertex_sdf_.value(id) = S(prior);
    vertex_initialized_[id] = 1;
    ++count;
  }
  if (count > 0) {
    std::erase_if(uninitialized_, [this](uint32_t id) { return vertex_initialized_[id] != 0; });
  }
  return count;
}

namespace {
/// Corner weights for local coordinates u in [0,1]^3, canonical corner
/// order k -> offset (k&1, k>>1&1, k>>2&1).
inline void corner_weights(const Vec3& u, double w[8]) {
  const double wx[2] = {1.0 - u.x(), u.x()};
  const double wy[2] = {1.0 - u.y(), u.y()};
  const double wz[2] = {1.0 - u.z(), u.z()};
  for (int k = 0; k < 8; ++k) w[k] = wx[k & 1] * wy[(k >> 1) & 1] * wz[(k >> 2) & 1];
}
}  // namespace

template <typename S>
S SparseVoxelOctree<S>::sdf_in_leaf(uint32_t leaf_id, const Vec3& p,
                                    CoarseInterp<S>* record) const {
  const VoxelRecord& rec = leaves_[leaf_id];
  Vec3 u = p / voxel_size_ - rec.coord.cast<double>();
  for (int a = 0; a < 3; ++a) u[a] = std::clamp(u[a], 0.0, 1.0);
  double w[8];
  corner_weights(u, w);
  S value = S(0);
  for (int k = 0; k < 8; ++k) value += S(w[k]) * vertex_sdf_.value(rec.vertices[k]);
  if (record) {
    record->vertex = rec.vertices;
    for (int k = 0; k < 8; ++k) record->weight[k] = S(w[k]);
  }
  return value;
}

template <typename S>
void SparseVoxelOctree<S>::query_coarse_sdf(std::span<const Vec3> points, std::span<S> out,
                                            std::vector<CoarseInterp<S>>* records) const {
  if (records) records->resize(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    const auto leaf = find_leaf(cell_of(p));
    if (!leaf) {
      std::ostringstream os;
      os << "coarse SDF query outside allocated voxels: (" << p.x() << ", " << p.y() << ", "
         << p.z() << ")";
      throw QueryError(os.str());
    }
    const VoxelRecord& rec = leaves_[*leaf];
    const Vec3 u = p / voxel_size_ - rec.coord.cast<double>();
    double w[8];
    corner_weights(u, w);
    S value = S(0);
    for (int k = 0; k < 8; ++k) value += S(w[k]) * vertex_sdf_.value(rec.vertices[k]);
    out[i] = value;
    if (records) {
      (*records)[i].vertex = rec.vertices;
      for (int k = 0; k < 8; ++k) (*records)[i].weight[k] = S(w[k]);
    }
  }
}

template <typename S>
size_t SparseVoxelOctree<S>::initialized_count() const {
  size_t n = 0;
  for (uint8_t f : vertex_initialized_) n += f;
  return n;
}

template <typename S>
void SparseVoxelOctree<S>::debug_dump(std::ostream& os) const {
  char buf[64];
  for (const VoxelRecord& rec : leaves_) {
    os << rec.coord.x() << ' ' << rec.coord.y() << ' ' << rec.coord.z() << " :";
    for (int k = 0; k < 8; ++k) {
      std::snprintf(buf, sizeof(buf), " %.9g", double(vertex_sdf_.value(rec.vertices[k])));
      os << buf;
    }
    os << '\n';
  }
}

template class SparseVoxelOctree<float>;
template class SparseVoxelOctree<double>;

}  // namespace hybridmap
