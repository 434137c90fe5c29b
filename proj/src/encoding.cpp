#include "hybridmap/encoding.hpp"

#include <cmath>
#include <sstream>

#include "hybridmap/errors.hpp"
#include "hybridmap/rng.hpp"

namespace hybridmap {

template <typename S>
HashEncoding<S>::HashEncoding(std::string name, const Config& cfg, uint64_t seed)
    : cfg_(cfg), table_(std::move(name)) {
  if (cfg_.levels < 1 || cfg_.features < 1 || cfg_.table_size < 1)
    throw InputError("hash encoding: levels, features and table_size must be >= 1");
  if (!(cfg_.base_cell_size > 0) || !(cfg_.level_scale > 1))
    throw InputError("hash encoding: bad cell size or level scale");
  level_cell_.resize(cfg_.levels);
  for (int l = 0; l < cfg_.levels; ++l)
    level_cell_[l] = cfg_.base_cell_size / std::pow(cfg_.level_scale, l);

  table_.resize(size_t(cfg_.levels) * cfg_.table_size * cfg_.features);
  Rng rng(seed);
  for (S& v : table_.values()) v = S(rng.uniform(-cfg_.init_range, cfg_.init_range));
}

template <typename S>
uint32_t HashEncoding<S>::hash_corner(int32_t x, int32_t y, int32_t z, uint32_t table_size) {
  // Primes from the usual spatial-hash construction; pi1 = 1 keeps small
  // positive grids collision-free along x.
  constexpr uint64_t pi2 = 2654435761ull;
  constexpr uint64_t pi3 = 805459861ull;
  const uint64_t ux = uint64_t(int64_t(x));
  const uint64_t uy = uint64_t(int64_t(y));
  const uint64_t uz = uint64_t(int64_t(z));
  return uint32_t((ux ^ (uy * pi2) ^ (uz * pi3)) % table_size);
}

template <typename S>
void HashEncoding<S>::encode(std::span<const Vec3> points, S* out,
                             std::vector<Record>* records) const {
  const int L = cfg_.levels;
  const int F = cfg_.features;
  const int dim = L * F;
  if (records) {
    records->resize(points.size());
    for (auto& r : *records) {
      r.slot.resize(size_t(L) * 8);
      r.weight.resize(size_t(L) * 8);
    }
  }

  for (size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    for (int a = 0; a < 3; ++a) {
      if (p[a] < cfg_.domain_min[a] || p[a] > cfg_.domain_max[a]) {
        std::ostringstream os;
        os << "encode point outside domain: (" << p.x() << ", " << p.y() << ", " << p.z() << ")";
        throw QueryError(os.str());
      }
    }
    S* row = out + i * dim;
    for (int l = 0; l < L; ++l) {
      const double h = level_cell_[l];
      const Eigen::Vector3i cell(int32_t(std::floor(p.x() / h)), int32_t(std::floor(p.y() / h)),
                                 int32_t(std::floor(p.z() / h)));
      const Vec3 u(p.x() / h - cell.x(), p.y() / h - cell.y(), p.z() / h - cell.z());
      const double wx[2] = {1.0 - u.x(), u.x()};
      const double wy[2] = {1.0 - u.y(), u.y()};
      const double wz[2] = {1.0 - u.z(), u.z()};

      for (int f = 0; f < F; ++f) row[l * F + f] = S(0);
      for (int k = 0; k < 8; ++k) {
        const uint32_t slot =
            hash_corner(cell.x() + (k & 1), cell.y() + ((k >> 1) & 1), cell.z() + ((k >> 2) & 1),
                        cfg_.table_size);
        const uint32_t base = (uint32_t(l) * cfg_.table_size + slot) * uint32_t(F);
        const S w = S(wx[k & 1] * wy[(k >> 1) & 1] * wz[(k >> 2) & 1]);
        for (int f = 0; f < F; ++f) row[l * F + f] += w * table_.value(base + f);
        if (records) {
          (*records)[i].slot[size_t(l) * 8 + k] = base;
          (*records)[i].weight[size_t(l) * 8 + k] = w;
        }
      }
    }
  }
}

template class HashEncoding<float>;
template class HashEncoding<double>;

}  // namespace hybridmap
