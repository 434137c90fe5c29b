#include "hybridmap/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "hybridmap/errors.hpp"

namespace hybridmap {

EarlyStopPolicy early_stop_from_string(const std::string& s) {
  if (s == "relative") return EarlyStopPolicy::RelativeImprovement;
  if (s == "paper-literal") return EarlyStopPolicy::PaperLiteral;
  if (s == "off") return EarlyStopPolicy::Off;
  throw InputError("unknown early_stop policy: " + s);
}

std::string to_string(EarlyStopPolicy policy) {
  switch (policy) {
    case EarlyStopPolicy::RelativeImprovement: return "relative";
    case EarlyStopPolicy::PaperLiteral: return "paper-literal";
    case EarlyStopPolicy::Off: return "off";
  }
  return "off";
}

KeyframeStrategy keyframe_strategy_from_string(const std::string& s) {
  if (s == "coverage") return KeyframeStrategy::Coverage;
  if (s == "random") return KeyframeStrategy::Random;
  throw InputError("unknown keyframe_strategy: " + s);
}

std::string to_string(KeyframeStrategy strategy) {
  return strategy == KeyframeStrategy::Coverage ? "coverage" : "random";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Minimal INI reader: [section], key = value, '#' comments.
class IniReader {
 public:
  explicit IniReader(const std::string& text) {
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw InputError("config line " + std::to_string(lineno) +
                                                 ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
      values_[section + "." + trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  template <typename T>
  void get(const std::string& key, T& out) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    std::istringstream is(it->second);
    T v;
    if constexpr (std::is_same_v<T, bool>) {
      std::string s = it->second;
      if (s == "true" || s == "1") v = true;
      else if (s == "false" || s == "0") v = false;
      else throw InputError("config key " + key + ": expected true/false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      v = it->second;
    } else if constexpr (std::is_same_v<T, Vec3>) {
      if (!(is >> v.x() >> v.y() >> v.z()))
        throw InputError("config key " + key + ": expected three numbers");
    } else {
      if (!(is >> v)) throw InputError("config key " + key + ": cannot parse '" + it->second + "'");
    }
    out = v;
    consumed_.insert(key);
  }

  void check_consumed() const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key)) throw InputError("unknown config key: " + key);
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace

void MapConfig::validate() const {
  if (!(voxel_size > 0) || !(truncation > 0) || !(step > 0))
    throw InputError("config: voxel_size, truncation and step must be positive");
  if (rays_per_iter < 1 || keyframes_per_iter < 1 || max_iters < 1)
    throw InputError("config: rays_per_iter, keyframes_per_iter and max_iters must be >= 1");
  if (levels < 1 || features < 1 || table_size < 1)
    throw InputError("config: encoding sizes must be >= 1");
  if (!(insert_threshold > 0)) throw InputError("config: insert_threshold must be positive");
  if (max_samples_per_ray < 1) throw InputError("config: max_samples_per_ray must be >= 1");
  for (int a = 0; a < 3; ++a)
    if (!(domain_min[a] < domain_max[a])) throw InputError("config: empty encoding domain");
}

MapConfig parse_map_config(const std::string& text) {
  IniReader ini(text);
  MapConfig c;
  ini.get("octree.voxel_size", c.voxel_size);
  ini.get("octree.min_points", c.min_points);
  ini.get("octree.expansion_band", c.expansion_band);

  ini.get("encoding.levels", c.levels);
  ini.get("encoding.features", c.features);
  ini.get("encoding.table_size", c.table_size);
  ini.get("encoding.level_scale", c.level_scale);
  ini.get("encoding.base_cell", c.base_cell);
  ini.get("encoding.domain_min", c.domain_min);
  ini.get("encoding.domain_max", c.domain_max);
  ini.get("encoding.init_range", c.init_range);

  ini.get("network.hidden_width", c.hidden_width);
  ini.get("network.geometry_hidden_layers", c.geometry_hidden_layers);
  ini.get("network.color_hidden_layers", c.color_hidden_layers);
  ini.get("network.lr_sdf", c.lr_sdf);
  ini.get("network.lr_hash", c.lr_hash);
  ini.get("network.lr_mlp", c.lr_mlp);
  ini.get("network.beta1", c.beta1);
  ini.get("network.beta2", c.beta2);
  ini.get("network.adam_eps", c.adam_eps);

  ini.get("render.step", c.step);
  ini.get("render.truncation", c.truncation);
  ini.get("render.max_samples_per_ray", c.max_samples_per_ray);

  ini.get("mapper.rays_per_iter", c.rays_per_iter);
  ini.get("mapper.keyframes_per_iter", c.keyframes_per_iter);
  ini.get("mapper.max_iters", c.max_iters);
  ini.get("mapper.insert_threshold", c.insert_threshold);
  ini.get("mapper.alpha_sdf", c.loss_weights.sdf);
  ini.get("mapper.alpha_fs", c.loss_weights.fs);
  ini.get("mapper.alpha_d", c.loss_weights.depth);
  ini.get("mapper.alpha_rgb", c.loss_weights.rgb);
  std::string early_stop = to_string(c.early_stop);
  ini.get("mapper.early_stop", early_stop);
  c.early_stop = early_stop_from_string(early_stop);
  ini.get("mapper.rel_improve", c.rel_improve);
  ini.get("mapper.rel_patience", c.rel_patience);
  std::string strategy = to_string(c.keyframe_strategy);
  ini.get("mapper.keyframe_strategy", strategy);
  c.keyframe_strategy = keyframe_strategy_from_string(strategy);
  ini.get("mapper.use_priors", c.use_priors);
  ini.get("mapper.use_expansion", c.use_expansion);

  ini.get("run.seed", c.seed);

  ini.check_consumed();
  c.validate();
  return c;
}

MapConfig load_map_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config file " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return parse_map_config(os.str());
}

std::string serialize_map_config(const MapConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "[octree]\n";
  os << "voxel_size = " << c.voxel_size << "\n";
  os << "min_points = " << c.min_points << "\n";
  os << "expansion_band = " << c.expansion_band << "\n\n";
  os << "[encoding]\n";
  os << "levels = " << c.levels << "\n";
  os << "features = " << c.features << "\n";
  os << "table_size = " << c.table_size << "\n";
  os << "level_scale = " << c.level_scale << "\n";
  os << "base_cell = " << c.base_cell << "\n";
  os << "domain_min = " << c.domain_min.x() << " " << c.domain_min.y() << " " << c.domain_min.z()
     << "\n";
  os << "domain_max = " << c.domain_max.x() << " " << c.domain_max.y() << " " << c.domain_max.z()
     << "\n";
  os << "init_range = " << c.init_range << "\n\n";
  os << "[network]\n";
  os << "hidden_width = " << c.hidden_width << "\n";
  os << "geometry_hidden_layers = " << c.geometry_hidden_layers << "\n";
  os << "color_hidden_layers = " << c.color_hidden_layers << "\n";
  os << "lr_sdf = " << c.lr_sdf << "\n";
  os << "lr_hash = " << c.lr_hash << "\n";
  os << "lr_mlp = " << c.lr_mlp << "\n";
  os << "beta1 = " << c.beta1 << "\n";
  os << "beta2 = " << c.beta2 << "\n";
  os << "adam_eps = " << c.adam_eps << "\n\n";
  os << "[render]\n";
  os << "step = " << c.step << "\n";
  os << "truncation = " << c.truncation << "\n";
  os << "max_samples_per_ray = " << c.max_samples_per_ray << "\n\n";
  os << "[mapper]\n";
  os << "rays_per_iter = " << c.rays_per_iter << "\n";
  os << "keyframes_per_iter = " << c.keyframes_per_iter << "\n";
  os << "max_iters = " << c.max_iters << "\n";
  os << "insert_threshold = " << c.insert_threshold << "\n";
  os << "alpha_sdf = " << c.loss_weights.sdf << "\n";
  os << "alpha_fs = " << c.loss_weights.fs << "\n";
  os << "alpha_d = " << c.loss_weights.depth << "\n";
  os << "alpha_rgb = " << c.loss_weights.rgb << "\n";
  os << "early_stop = " << to_string(c.early_stop) << "\n";
  os << "rel_improve = " << c.rel_improve << "\n";
  os << "rel_patience = " << c.rel_patience << "\n";
  os << "keyframe_strategy = " << to_string(c.keyframe_strategy) << "\n";
  os << "use_priors = " << (c.use_priors ? "true" : "false") << "\n";
  os << "use_expansion = " << (c.use_expansion ? "true" : "false") << "\n\n";
  os << "[run]\n";
  os << "seed = " << c.seed << "\n";
  return os.str();
}

void save_map_config(const MapConfig& cfg, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write config file " + path.string());
  os << serialize_map_config(cfg);
}

std::string default_map_config_text() {
  return R"(# hybridmap configuration. Every key is optional; the values below are the
# defaults. CLI flags override file values.

[octree]
voxel_size = 0.1        # leaf edge length, meters
min_points = 10         # a leaf is created when a cell holds more than this many points
expansion_band = 0.2    # face band (fraction of voxel_size) triggering boundary expansion

[encoding]
levels = 4              # hash grid resolution levels
features = 2            # feature scalars per level
table_size = 524288     # hash table entries per level (2^19)
level_scale = 2.0       # cell size ratio between adjacent levels
base_cell = 0           # coarsest cell size, meters; 0 = inherit voxel_size
domain_min = -100 -100 -100   # encoding bounding box, meters
domain_max = 100 100 100
init_range = 0.0001     # uniform feature init in [-init_range, init_range]

[network]
hidden_width = 64
geometry_hidden_layers = 1
color_hidden_layers = 2
lr_sdf = 0.01           # learning rate, octree vertex SDFs
lr_hash = 0.01          # learning rate, hash tables
lr_mlp = 0.001          # learning rate, decoder weights
beta1 = 0.9
beta2 = 0.99
adam_eps = 1e-15

[render]
step = 0.01             # spacing of ray samples, meters
truncation = 0.05       # SDF truncation distance, meters
max_samples_per_ray = 512

[mapper]
rays_per_iter = 4096    # pixels drawn per optimization iteration
keyframes_per_iter = 10 # K, keyframes selected per frame
max_iters = 10          # optimization iterations per frame
insert_threshold = 0.2  # keyframe insertion: insert when overlap ratio is below this
alpha_sdf = 1.0
alpha_fs = 1.0
alpha_d = 0.1
alpha_rgb = 5.0
early_stop = relative   # relative | paper-literal | off
rel_improve = 0.01      # relative policy: minimum per-iteration improvement
rel_patience = 2        # ...for this many consecutive iterations
keyframe_strategy = coverage   # coverage | random
use_priors = true       # initialize vertex SDFs from projective depth
use_expansion = true    # allocate neighbors when points hug a voxel face

[run]
seed = 0
)";
}

}  // namespace hybridmap
