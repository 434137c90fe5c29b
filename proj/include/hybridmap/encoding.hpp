#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hybridmap/geometry.hpp"
#include "hybridmap/params.hpp"

namespace hybridmap {

/// Multiresolution hash encoding: L levels of hashed feature tables,
/// trilinearly interpolated and concatenated into an L*F feature vector.
/// Level 0 is the coarsest; adjacent cell sizes differ by level_scale.
template <typename S>
class HashEncoding {
 public:
  struct Config {
    int levels = 4;
    int features = 2;
    uint32_t table_size = 1u << 19;
    double base_cell_size = 0.1;  // coarsest level
    double level_scale = 2.0;
    Vec3 domain_min = Vec3::Constant(-100.0);
    Vec3 domain_max = Vec3::Constant(100.0);
    double init_range = 1e-4;  // uniform init in [-init_range, init_range]
  };

  /// Interpolation record for one point: per level the 8 flat table offsets
  /// (already scaled by F) and trilerp weights.
  struct Record {
    std::vector<uint32_t> slot;  // levels * 8, offset of feature 0 in the table array
    std::vector<S> weight;       // levels * 8
  };

  HashEncoding(std::string name, const Config& cfg, uint64_t seed);

  int feature_dim() const { return cfg_.levels * cfg_.features; }
  const Config& config() const { return cfg_; }
  double level_cell_size(int level) const { return level_cell_[level]; }

  /// slot = (x*pi1 xor y*pi2 xor z*pi3) mod table_size, in 64-bit unsigned
  /// modular arithmetic (negative coordinates wrap two's-complement).
  static uint32_t hash_corner(int32_t x, int32_t y, int32_t z, uint32_t table_size);

  /// Writes points.size() rows of feature_dim() scalars into out
  /// (row-major). Throws QueryError for points outside the domain box.
  void encode(std::span<const Vec3> points, S* out, std::vector<Record>* records = nullptr) const;

  ParamGroup<S>& table() { return table_; }
  const ParamGroup<S>& table() const { return table_; }

 private:
  Config cfg_;
  std::vector<double> level_cell_;
  ParamGroup<S> table_;  // levels * table_size * features scalars
};

}  // namespace hybridmap
