#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hybridmap/geometry.hpp"
#include "hybridmap/losses.hpp"
#include "hybridmap/model.hpp"

namespace hybridmap {

enum class EarlyStopPolicy { Off, RelativeImprovement, PaperLiteral };
enum class KeyframeStrategy { Coverage, Random };

EarlyStopPolicy early_stop_from_string(const std::string& s);
std::string to_string(EarlyStopPolicy policy);
KeyframeStrategy keyframe_strategy_from_string(const std::string& s);
std::string to_string(KeyframeStrategy strategy);

/// Everything a mapping run needs, mirroring the sections of the config
/// file. Defaults are the desk-scale mapping defaults (10 cm voxels, 5 cm
/// truncation, 1 cm sampling, 4x2 hash features over 2^19-entry tables,
/// 4096 rays and up to 10 iterations per frame, K = 10 keyframes).
struct MapConfig {
  // [octree]
  double voxel_size = 0.1;
  int min_points = 10;
  double expansion_band = 0.2;

  // [encoding]
  int levels = 4;
  int features = 2;
  uint32_t table_size = 1u << 19;
  double level_scale = 2.0;
  double base_cell = 0.0;  // 0 = inherit voxel_size
  Vec3 domain_min = Vec3::Constant(-100.0);
  Vec3 domain_max = Vec3::Constant(100.0);
  double init_range = 1e-4;

  // [network]
  int hidden_width = 64;
  int geometry_hidden_layers = 1;
  int color_hidden_layers = 2;
  double lr_sdf = 1e-2;
  double lr_hash = 1e-2;
  double lr_mlp = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-15;

  // [render]
  double step = 0.01;
  double truncation = 0.05;
  int max_samples_per_ray = 512;

  // [mapper]
  int rays_per_iter = 4096;
  int keyframes_per_iter = 10;  // K
  int max_iters = 10;
  double insert_threshold = 0.2;
  LossWeights loss_weights;
  EarlyStopPolicy early_stop = EarlyStopPolicy::RelativeImprovement;
  double rel_improve = 0.01;
  int rel_patience = 2;
  KeyframeStrategy keyframe_strategy = KeyframeStrategy::Coverage;
  bool use_priors = true;
  bool use_expansion = true;

  // [run]
  uint64_t seed = 0;

  void validate() const;  // throws InputError

  template <typename S>
  ModelConfig<S> model_config() const {
    ModelConfig<S> mc;
    mc.octree.voxel_size = voxel_size;
    mc.octree.default_sdf = S(truncation);
    mc.octree.min_points = min_points;
    mc.octree.expansion_band = expansion_band;
    typename HashEncoding<S>::Config enc;
    enc.levels = levels;
    enc.features = features;
    enc.table_size = table_size;
    enc.base_cell_size = base_cell > 0 ? base_cell : voxel_size;
    enc.level_scale = level_scale;
    enc.domain_min = domain_min;
    enc.domain_max = domain_max;
    enc.init_range = init_range;
    mc.geometry_encoding = enc;
    mc.color_encoding = enc;
    mc.hidden_width = hidden_width;
    mc.geometry_hidden_layers = geometry_hidden_layers;
    mc.color_hidden_layers = color_hidden_layers;
    mc.seed = seed;
    return mc;
  }
};

MapConfig parse_map_config(const std::string& text);
MapConfig load_map_config(const std::filesystem::path& path);
std::string serialize_map_config(const MapConfig& cfg);
void save_map_config(const MapConfig& cfg, const std::filesystem::path& path);
/// The commented example written by `hybridmap config`.
std::string default_map_config_text();

}  // namespace hybridmap
