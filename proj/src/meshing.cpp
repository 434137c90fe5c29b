#include "hybridmap/meshing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hybridmap/errors.hpp"

namespace hybridmap {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

namespace {

// Canonical marching-cubes corner layout (z is the cube's vertical axis):
//   0:(0,0,0) 1:(1,0,0) 2:(1,1,0) 3:(0,1,0) 4:(0,0,1) 5:(1,0,1) 6:(1,1,1) 7:(0,1,1)
constexpr int kCornerOffset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeCorner[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                    {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

/// Identifies an edge by its lower node and axis so shared vertices dedup.
struct EdgeKeyer {
  Eigen::Vector3i base;  // node coordinate origin (keys must be nonnegative)

  uint64_t operator()(const Eigen::Vector3i& node_a, const Eigen::Vector3i& node_b) const {
    const Eigen::Vector3i lo = node_a.cwiseMin(node_b);
    const Eigen::Vector3i d = (node_a - node_b).cwiseAbs();
    const int axis = d.x() ? 0 : (d.y() ? 1 : 2);
    const Eigen::Vector3i rel = lo - base;
    return ((uint64_t(uint32_t(rel.x())) << 42) | (uint64_t(uint32_t(rel.y()) & 0x1fffff) << 21) |
            uint64_t(uint32_t(rel.z()) & 0x1fffff)) *
               4 +
           uint64_t(axis);
  }
};

struct MeshBuilder {
  TriangleMesh mesh;
  std::unordered_map<uint64_t, uint32_t> edge_vertex;
  EdgeKeyer key;

  /// Emits the triangles of one cell. nodes[c] are integer node coords,
  /// pos[c] world positions, v[c] field values (inside < 0).
  void polygonize(const Eigen::Vector3i nodes[8], const Vec3 pos[8], const double v[8]) {
    int cube = 0;
    for (int c = 0; c < 8; ++c)
      if (v[c] < 0) cube |= 1 << c;
    const int edges = mc::kEdgeTable[cube];
    if (edges == 0) return;

    uint32_t edge_idx[12];
    for (int e = 0; e < 12; ++e) {
      if (!(edges & (1 << e))) continue;
      const int c0 = kEdgeCorner[e][0], c1 = kEdgeCorner[e][1];
      const uint64_t k = key(nodes[c0], nodes[c1]);
      auto it = edge_vertex.find(k);
      if (it == edge_vertex.end()) {
        double t = 0.5;
        const double denom = v[c0] - v[c1];
        if (denom != 0) t = std::clamp(v[c0] / denom, 0.0, 1.0);
        mesh.vertices.push_back(pos[c0] + t * (pos[c1] - pos[c0]));
        it = edge_vertex.emplace(k, uint32_t(mesh.vertices.size() - 1)).first;
      }
      edge_idx[e] = it->second;
    }
    for (const int* t = mc::kTriTable[cube]; *t != -1; t += 3) {
      const uint32_t a = edge_idx[t[0]], b = edge_idx[t[1]], c = edge_idx[t[2]];
      if (a == b || b == c || a == c) continue;
      if (triangle_area(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]) <= 1e-12) continue;
      mesh.triangles.push_back({a, b, c});
    }
  }
};

inline int32_t ifloordiv(int32_t a, int32_t b) {
  int32_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

TriangleMesh marching_cubes(const std::function<double(const Vec3&)>& field, const Vec3& lo,
                            const Vec3& hi, double cell) {
  if (!(cell > 0)) throw InputError("marching cubes cell size must be positive");
  const int nx = std::max(1, int(std::ceil((hi.x() - lo.x()) / cell)));
  const int ny = std::max(1, int(std::ceil((hi.y() - lo.y()) / cell)));
  const int nz = std::max(1, int(std::ceil((hi.z() - lo.z()) / cell)));

  MeshBuilder builder;
  builder.key.base = Eigen::Vector3i::Zero();

  auto node_pos = [&](int i, int j, int k) {
    return Vec3(lo.x() + i * cell, lo.y() + j * cell, lo.z() + k * cell);
  };

  // Two z-planes of node values are kept in memory.
  const size_t plane = size_t(nx + 1) * (ny + 1);
  std::vector<double> planes[2] = {std::vector<double>(plane), std::vector<double>(plane)};
  auto fill_plane = [&](int k, std::vector<double>& dst) {
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) dst[size_t(j) * (nx + 1) + i] = field(node_pos(i, j, k));
  };
  fill_plane(0, planes[0]);

  for (int k = 0; k < nz; ++k) {
    fill_plane(k + 1, planes[(k + 1) & 1]);
    const std::vector<double>& z0 = planes[k & 1];
    const std::vector<double>& z1 = planes[(k + 1) & 1];
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        Eigen::Vector3i nodes[8];
        Vec3 pos[8];
        double v[8];
        for (int c = 0; c < 8; ++c) {
          const int ci = i + kCornerOffset[c][0];
          const int cj = j + kCornerOffset[c][1];
          const int ck = k + kCornerOffset[c][2];
          nodes[c] = {ci, cj, ck};
          pos[c] = node_pos(ci, cj, ck);
          v[c] = (kCornerOffset[c][2] ? z1 : z0)[size_t(cj) * (nx + 1) + ci];
        }
        builder.polygonize(nodes, pos, v);
      }
    }
  }
  return std::move(builder.mesh);
}

template <typename S>
TriangleMesh extract_mesh(const Model<S>& model, double cell, bool with_color) {
  const SparseVoxelOctree<S>& octree = model.octree();
  TriangleMesh empty;
  if (octree.empty()) return empty;

  const double h = octree.voxel_size();
  const int subdiv = std::max(1, int(std::lround(h / cell)));
  const double eff_cell = h / subdiv;
  const double outside_value = double(octree.default_sdf());

  MeshBuilder builder;
  builder.key.base = (octree.cell_lo() - Eigen::Vector3i::Ones()) * subdiv;

  // Candidate leaves that touch a node (faces/edges/corners shared).
  auto node_leaf = [&](const Eigen::Vector3i& node) -> std::optional<uint32_t> {
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      hi[a] = ifloordiv(node[a], subdiv);
      lo[a] = (node[a] % subdiv == 0) ? hi[a] - 1 : hi[a];
    }
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = lo[2]; z <= hi[2]; ++z)
          if (auto leaf = octree.find_leaf({x, y, z})) return leaf;
    return std::nullopt;
  };

  // Per-block cache of node values: local index over (subdiv+3)^3 nodes.
  const int nn = subdiv + 3;
  std::vector<double> node_value(size_t(nn) * nn * nn);
  std::vector<uint8_t> node_known(node_value.size());
  std::vector<Vec3> pending_pos;
  std::vector<uint32_t> pending_leaf, pending_slot;

  for (uint32_t leaf_id = 0; leaf_id < octree.leaf_count(); ++leaf_id) {
    const Eigen::Vector3i leaf_cell = octree.leaf(leaf_id).coord;
    const Eigen::Vector3i cell_base = leaf_cell * subdiv;
    const Eigen::Vector3i node_base = cell_base - Eigen::Vector3i::Ones();

    // Which extended-block cells does this leaf march?
    std::vector<Eigen::Vector3i> owned;
    for (int cx = -1; cx <= subdiv; ++cx) {
      for (int cy = -1; cy <= subdiv; ++cy) {
        for (int cz = -1; cz <= subdiv; ++cz) {
          const bool interior = cx >= 0 && cx < subdiv && cy >= 0 && cy < subdiv && cz >= 0 &&
                                cz < subdiv;
          const Eigen::Vector3i gcell = cell_base + Eigen::Vector3i(cx, cy, cz);
          if (interior) {
            owned.push_back(gcell);
            continue;
          }
          // Shell cell: the leaf containing its center marches it, or, if
          // none is allocated, the smallest allocated leaf whose dilated
          // block reaches it (gives boundary caps a unique owner).
          Eigen::Vector3i center_leaf;
          for (int a = 0; a < 3; ++a) center_leaf[a] = ifloordiv(gcell[a], subdiv);
          if (octree.find_leaf(center_leaf)) continue;
          bool mine = true;
          for (int x = center_leaf.x() - 1; x <= center_leaf.x() + 1 && mine; ++x) {
            for (int y = center_leaf.y() - 1; y <= center_leaf.y() + 1 && mine; ++y) {
              for (int z = center_leaf.z() - 1; z <= center_leaf.z() + 1 && mine; ++z) {
                const Eigen::Vector3i cand(x, y, z);
                bool reaches = true;
                for (int a = 0; a < 3; ++a)
                  if (gcell[a] < cand[a] * subdiv - 1 || gcell[a] > cand[a] * subdiv + subdiv)
                    reaches = false;
                if (!reaches || !octree.find_leaf(cand)) continue;
                if (std::lexicographical_compare(cand.data(), cand.data() + 3, leaf_cell.data(),
                                                 leaf_cell.data() + 3))
                  mine = false;  // a smaller allocated leaf also reaches this cell
              }
            }
          }
          if (mine) owned.push_back(gcell);
        }
      }
    }
    if (owned.empty()) continue;

    // Evaluate every node the owned cells touch. Residual+coarse SDF for
    // nodes inside allocation, free-space default outside.
    std::fill(node_known.begin(), node_known.end(), 0);
    pending_pos.clear();
    pending_leaf.clear();
    pending_slot.clear();
    auto local_index = [&](const Eigen::Vector3i& node) {
      const Eigen::Vector3i rel = node - node_base;
      return (size_t(rel.x()) * nn + rel.y()) * nn + rel.z();
    };
    for (const Eigen::Vector3i& gcell : owned) {
      for (int c = 0; c < 8; ++c) {
        const Eigen::Vector3i node(gcell.x() + kCornerOffset[c][0],
                                   gcell.y() + kCornerOffset[c][1],
                                   gcell.z() + kCornerOffset[c][2]);
        const size_t idx = local_index(node);
        if (node_known[idx]) continue;
        node_known[idx] = 1;
        const auto leaf = node_leaf(node);
        if (!leaf) {
          node_value[idx] = outside_value;
          continue;
        }
        pending_pos.push_back(node.cast<double>() * eff_cell);
        pending_leaf.push_back(*leaf);
        pending_slot.push_back(uint32_t(idx));
      }
    }
    if (!pending_pos.empty()) {
      // Coarse part per node (through its chosen leaf), residual batched.
      std::vector<S> feat(pending_pos.size() * model.geometry_encoding().feature_dim());
      model.geometry_encoding().encode(pending_pos, feat.data(), nullptr);
      std::vector<S> residual(pending_pos.size());
      model.geometry_mlp().forward(feat.data(), pending_pos.size(), residual.data(), nullptr);
      for (size_t i = 0; i < pending_pos.size(); ++i) {
        const S coarse = octree.sdf_in_leaf(pending_leaf[i], pending_pos[i], nullptr);
        node_value[pending_slot[i]] = double(coarse + residual[i]);
      }
    }

    for (const Eigen::Vector3i& gcell : owned) {
      Eigen::Vector3i nodes[8];
      Vec3 pos[8];
      double v[8];
      for (int c = 0; c < 8; ++c) {
        nodes[c] = {gcell.x() + kCornerOffset[c][0], gcell.y() + kCornerOffset[c][1],
                    gcell.z() + kCornerOffset[c][2]};
        pos[c] = nodes[c].cast<double>() * eff_cell;
        v[c] = node_value[local_index(nodes[c])];
      }
      builder.polygonize(nodes, pos, v);
    }
  }

  TriangleMesh mesh = std::move(builder.mesh);
  if (with_color && !mesh.vertices.empty()) {
    mesh.colors.resize(mesh.vertices.size());
    constexpr size_t kChunk = 65536;
    std::vector<S> rgb(kChunk * 3);
    for (size_t begin = 0; begin < mesh.vertices.size(); begin += kChunk) {
      const size_t n = std::min(kChunk, mesh.vertices.size() - begin);
      model.predict_color(std::span<const Vec3>(mesh.vertices.data() + begin, n), rgb.data());
      for (size_t i = 0; i < n; ++i)
        mesh.colors[begin + i] =
            Vec3(double(rgb[i * 3]), double(rgb[i * 3 + 1]), double(rgb[i * 3 + 2]));
    }
  }
  return mesh;
}

void write_ply(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write mesh to " + path.string());
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << mesh.vertices.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  if (mesh.has_colors())
    os << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  os << "element face " << mesh.triangles.size() << "\n";
  os << "property list uchar int vertex_indices\nend_header\n";
  char buf[160];
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", v.x(), v.y(), v.z());
    os << buf;
    if (mesh.has_colors()) {
      const Vec3& c = mesh.colors[i];
      os << ' ' << int(std::lround(std::clamp(c.x(), 0.0, 1.0) * 255))
         << ' ' << int(std::lround(std::clamp(c.y(), 0.0, 1.0) * 255))
         << ' ' << int(std::lround(std::clamp(c.z(), 0.0, 1.0) * 255));
    }
    os << '\n';
  }
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriangleMesh read_ply(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open mesh " + path.string());
  std::string line;
  if (!std::getline(is, line) || trim_copy(line) != "ply")
    throw InputError("not a PLY file: " + path.string());

  size_t n_vertices = 0, n_faces = 0;
  bool has_color = false;
  std::string element;
  std::vector<std::string> vertex_props;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw InputError("only ascii PLY supported: " + path.string());
    } else if (word == "element") {
      ls >> element;
      if (element == "vertex") ls >> n_vertices;
      if (element == "face") ls >> n_faces;
    } else if (word == "property" && element == "vertex") {
      std::string type, name;
      ls >> type >> name;
      vertex_props.push_back(name);
      if (name == "red") has_color = true;
    }
  }

  TriangleMesh mesh;
  mesh.vertices.reserve(n_vertices);
  if (has_color) mesh.colors.reserve(n_vertices);
  for (size_t i = 0; i < n_vertices; ++i) {
    if (!std::getline(is, line)) throw InputError("truncated PLY: " + path.string());
    std::istringstream ls(line);
    double x = 0, y = 0, z = 0;
    Vec3 color = Vec3::Zero();
    for (const std::string& prop : vertex_props) {
      double v;
      if (!(ls >> v)) throw InputError("bad vertex line in " + path.string());
      if (prop == "x") x = v;
      else if (prop == "y") y = v;
      else if (prop == "z") z = v;
      else if (prop == "red") color.x() = v / 255.0;
      else if (prop == "green") color.y() = v / 255.0;
      else if (prop == "blue") color.z() = v / 255.0;
    }
    mesh.vertices.emplace_back(x, y, z);
    if (has_color) mesh.colors.push_back(color);
  }
  for (size_t i = 0; i < n_faces; ++i) {
    if (!std::getline(is, line)) throw InputError("truncated PLY: " + path.string());
    std::istringstream ls(line);
    int count;
    if (!(ls >> count) || count < 3) throw InputError("bad face line in " + path.string());
    std::vector<uint32_t> idx(count);
    for (int k = 0; k < count; ++k)
      if (!(ls >> idx[k])) throw InputError("bad face line in " + path.string());
    for (int k = 2; k < count; ++k) mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
  }
  return mesh;
}

template TriangleMesh extract_mesh<float>(const Model<float>&, double, bool);
template TriangleMesh extract_mesh<double>(const Model<double>&, double, bool);

}  // namespace hybridmap
