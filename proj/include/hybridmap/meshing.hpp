#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "hybridmap/geometry.hpp"
#include "hybridmap/model.hpp"

namespace hybridmap {

namespace mc {
extern const int kEdgeTable[256];
extern const int kTriTable[256][16];
}  // namespace mc

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;
  std::vector<Vec3> colors;  // empty, or one [0,1] RGB per vertex

  bool has_colors() const { return !colors.empty(); }
};

/// Marching cubes of an arbitrary scalar field over a dense grid spanning
/// [lo, hi] with the given cell size (used for analytic ground-truth
/// meshes). The surface is the zero level set, field positive outside.
TriangleMesh marching_cubes(const std::function<double(const Vec3&)>& field, const Vec3& lo,
                            const Vec3& hi, double cell);

/// Zero level set of the model's SDF restricted to allocated voxels. The
/// cell size snaps to an integer subdivision of the voxel size; grid nodes
/// outside allocated leaves take the free-space default (+truncation), so
/// the surface closes at the allocation boundary. With with_color, vertex
/// colors are predicted at the mesh vertices.
template <typename S>
TriangleMesh extract_mesh(const Model<S>& model, double cell, bool with_color);

/// ASCII PLY with positions and optional uchar RGB.
void write_ply(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh read_ply(const std::filesystem::path& path);

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace hybridmap
