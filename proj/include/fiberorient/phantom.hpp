#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fiberorient/errors.hpp"
#include "fiberorient/grid.hpp"
#include "fiberorient/math.hpp"
#include "fiberorient/parallel.hpp"

namespace fiberorient {

/// Gray levels on a nominal 0-255 scale; fiber > matrix >= air.
struct PhantomGrays {
  double air = 0.0;
  double matrix = 80.0;
  double fiber = 200.0;
};

struct PhantomResult {
  Volume volume;
  SymMat3 axes_tensor{};   // average outer product of the placed fiber axes
  std::vector<Vec3> axes;  // canonical axis per fiber

  struct LayerTruth {
    double z_lo_um = 0.0;
    double z_hi_um = 0.0;
    SymMat3 tensor{};
  };
  std::vector<LayerTruth> layer_truth;  // shell-core phantoms only
};

namespace detail {

struct Capsule {
  Vec3 a;         // first endpoint, um
  Vec3 ab;        // b - a
  double len2 = 0.0;
};

inline double dist2_point_capsule(const Vec3& p, const Capsule& c) {
  double t = 0.0;
  if (c.len2 > 0.0) t = std::clamp((p - c.a).dot(c.ab) / c.len2, 0.0, 1.0);
  const Vec3 d = p - (c.a + c.ab * t);
  return d.dot(d);
}

/// Clips the line p0 + s*u against the volume box padded by `pad` on every
/// side, returning a capsule spanning the intersection.
inline Capsule clip_line_to_box(const Vec3& p0, const Vec3& u, const Vec3& box_hi, double pad) {
  double smin = -1e18, smax = 1e18;
  const double lo[3] = {-pad, -pad, -pad};
  const double hi[3] = {box_hi.x + pad, box_hi.y + pad, box_hi.z + pad};
  const double p[3] = {p0.x, p0.y, p0.z};
  const double d[3] = {u.x, u.y, u.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) continue;
    double s0 = (lo[a] - p[a]) / d[a];
    double s1 = (hi[a] - p[a]) / d[a];
    if (s0 > s1) std::swap(s0, s1);
    smin = std::max(smin, s0);
    smax = std::min(smax, s1);
  }
  Capsule c;
  c.a = p0 + u * smin;
  c.ab = u * (smax - smin);
  c.len2 = c.ab.dot(c.ab);
  return c;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

/// Anti-aliased capsule rasterization: each voxel's coverage is the fraction
/// of its 2x2x2 sub-sample points lying inside any fiber. A coarse bucket
/// grid over the volume keeps the per-voxel candidate list short.
inline Volume rasterize_capsules(Dims dims, Vec3 spacing, const std::vector<Capsule>& caps,
                                 double radius_um, const PhantomGrays& grays, double noise_sigma,
                                 std::uint64_t seed, int threads) {
  Volume v(dims, spacing);
  const double r2 = radius_um * radius_um;
  const double min_sp = std::min({spacing.x, spacing.y, spacing.z});

  const int bucket_vox = std::max(8, static_cast<int>(std::ceil(4.0 * radius_um / min_sp)));
  const Dims bdims{(dims.nx + bucket_vox - 1) / bucket_vox, (dims.ny + bucket_vox - 1) / bucket_vox,
                   (dims.nz + bucket_vox - 1) / bucket_vox};
  std::vector<std::vector<std::uint32_t>> buckets(bdims.size());
  for (std::uint32_t ci = 0; ci < caps.size(); ++ci) {
    const Capsule& c = caps[ci];
    const Vec3 b = c.a + c.ab;
    const double pad[3] = {radius_um + 1.5 * spacing.x, radius_um + 1.5 * spacing.y,
                           radius_um + 1.5 * spacing.z};
    const double lo[3] = {std::min(c.a.x, b.x) - pad[0], std::min(c.a.y, b.y) - pad[1],
                          std::min(c.a.z, b.z) - pad[2]};
    const double hi[3] = {std::max(c.a.x, b.x) + pad[0], std::max(c.a.y, b.y) + pad[1],
                          std::max(c.a.z, b.z) + pad[2]};
    const double sp[3] = {spacing.x, spacing.y, spacing.z};
    int blo[3], bhi[3];
    const int bn[3] = {bdims.nx, bdims.ny, bdims.nz};
    for (int a = 0; a < 3; ++a) {
      blo[a] = std::clamp(static_cast<int>(std::floor(lo[a] / sp[a])) / bucket_vox, 0, bn[a] - 1);
      bhi[a] = std::clamp(static_cast<int>(std::floor(hi[a] / sp[a])) / bucket_vox, 0, bn[a] - 1);
    }
    for (int bz = blo[2]; bz <= bhi[2]; ++bz)
      for (int by = blo[1]; by <= bhi[1]; ++by)
        for (int bx = blo[0]; bx <= bhi[0]; ++bx)
          buckets[bdims.index_of(bx, by, bz)].push_back(ci);
  }

  parallel_chunks(dims.nz, threads, [&](std::int64_t z0, std::int64_t z1) {
    for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z) {
      for (int y = 0; y < dims.ny; ++y) {
        for (int x = 0; x < dims.nx; ++x) {
          const auto& cand =
              buckets[bdims.index_of(x / bucket_vox, y / bucket_vox, z / bucket_vox)];
          int inside_mask = 0;
          if (!cand.empty()) {
            // 2x2x2 sub-sample points at voxel quarter positions.
            Vec3 samples[8];
            int s = 0;
            for (int dz = 0; dz < 2; ++dz)
              for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                  samples[s++] = Vec3{(x + 0.25 + 0.5 * dx) * spacing.x,
                                      (y + 0.25 + 0.5 * dy) * spacing.y,
                                      (z + 0.25 + 0.5 * dz) * spacing.z};
            for (std::uint32_t ci : cand) {
              const Capsule& c = caps[ci];
              for (int k = 0; k < 8; ++k) {
                if (inside_mask & (1 << k)) continue;
                if (dist2_point_capsule(samples[k], c) <= r2) inside_mask |= 1 << k;
              }
              if (inside_mask == 0xFF) break;
            }
          }
          const double coverage = std::popcount(static_cast<unsigned>(inside_mask)) / 8.0;
          v(x, y, z) = static_cast<float>(grays.matrix + coverage * (grays.fiber - grays.matrix));
        }
      }
      if (noise_sigma > 0.0) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(z)));
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (int y = 0; y < dims.ny; ++y)
          for (int x = 0; x < dims.nx; ++x) v(x, y, z) += static_cast<float>(noise(rng));
      }
    }
  });
  return v;
}

inline void check_phantom_args(Dims dims, Vec3 spacing, double radius_um,
                               const PhantomGrays& grays) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
    throw ArgumentError("phantom: dims must be positive");
  if (spacing.x <= 0 || spacing.y <= 0 || spacing.z <= 0)
    throw ArgumentError("phantom: spacing must be positive");
  const double min_sp = std::min({spacing.x, spacing.y, spacing.z});
  if (radius_um < 0.3 * min_sp)
    throw ArgumentError("phantom: fiber radius below 0.3 voxel; fibers would vanish");
  if (!(grays.fiber > grays.matrix && grays.matrix >= grays.air))
    throw ArgumentError("phantom: gray levels must satisfy fiber > matrix >= air");
}

}  // namespace detail

/// Straight parallel fibers along `direction`, placed on a jittered lattice
/// in the perpendicular plane. Ground truth tensor is the outer product of
/// the (canonical) direction.
inline PhantomResult gen_straight_bundle(Dims dims, Vec3 spacing, Vec3 direction, double radius_um,
                                         int n_fibers, std::uint64_t seed,
                                         PhantomGrays grays = {}, double noise_sigma = 0.0,
                                         int threads = 1) {
  detail::check_phantom_args(dims, spacing, radius_um, grays);
  if (n_fibers < 0) throw ArgumentError("phantom: n_fibers must be >= 0");
  const double un = direction.norm();
  if (un == 0.0) throw ArgumentError("phantom: direction must be nonzero");
  const Vec3 u = direction / un;

  // Orthonormal in-plane basis. An exactly axis-aligned direction takes the
  // remaining unit axes in index order, which makes phantoms for different
  // coordinate axes exact transposes of each other for the same seed.
  Vec3 e1, e2;
  const Vec3 au{std::abs(u.x), std::abs(u.y), std::abs(u.z)};
  if (au.x == 1.0 || au.y == 1.0 || au.z == 1.0) {
    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const int k = au.x == 1.0 ? 0 : au.y == 1.0 ? 1 : 2;
    e1 = axes[k == 0 ? 1 : 0];
    e2 = axes[k == 2 ? 1 : 2];
  } else {
    const Vec3 seed_axis = au.x < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    e1 = u.cross(seed_axis).normalized();
    e2 = u.cross(e1);
  }

  const Vec3 box{dims.nx * spacing.x, dims.ny * spacing.y, dims.nz * spacing.z};
  double lo1 = 1e18, hi1 = -1e18, lo2 = 1e18, hi2 = -1e18;
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 c{(corner & 1) ? box.x : 0.0, (corner & 2) ? box.y : 0.0, (corner & 4) ? box.z : 0.0};
    lo1 = std::min(lo1, c.dot(e1));
    hi1 = std::max(hi1, c.dot(e1));
    lo2 = std::min(lo2, c.dot(e2));
    hi2 = std::max(hi2, c.dot(e2));
  }

  PhantomResult res;
  res.axes.assign(static_cast<std::size_t>(n_fibers), canonical_direction(u));
  res.axes_tensor = n_fibers > 0 ? SymMat3::outer(canonical_direction(u)) : SymMat3{};

  std::vector<detail::Capsule> caps;
  if (n_fibers > 0) {
    const double w1 = hi1 - lo1, w2 = hi2 - lo2;
    int m1 = std::max(1, static_cast<int>(std::ceil(std::sqrt(n_fibers * w1 / std::max(w2, 1e-9)))));
    int m2 = std::max(1, (n_fibers + m1 - 1) / m1);
    const double pitch1 = w1 / m1, pitch2 = w2 / m2;
    if (std::min(pitch1, pitch2) < 2.0 * radius_um)
      throw ArgumentError("phantom: cannot place " + std::to_string(n_fibers) +
                          " fibers of radius " + std::to_string(radius_um) +
                          " um without overlap; reduce n_fibers or radius");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jit(-0.3, 0.3);
    const double t0 = (box * 0.5).dot(u);
    const double pad = 2.0 * radius_um + 2.0 * std::max({spacing.x, spacing.y, spacing.z});
    caps.reserve(static_cast<std::size_t>(n_fibers));
    for (int k = 0; k < n_fibers; ++k) {
      const int i = k % m1, j = k / m1;
      const double c1 = lo1 + (i + 0.5 + jit(rng)) * pitch1;
      const double c2 = lo2 + (j + 0.5 + jit(rng)) * pitch2;
      const Vec3 p0 = u * t0 + e1 * c1 + e2 * c2;
      caps.push_back(detail::clip_line_to_box(p0, u, box, pad));
    }
  }
  res.volume = detail::rasterize_capsules(dims, spacing, caps, radius_um, grays, noise_sigma, seed,
                                          threads);
  return res;
}

/// Fibers with area-uniform random axes on the upper half-sphere and random
/// chord placements. The reported ground truth is the average outer product
/// of the axes actually placed, not the asymptotic isotropic tensor.
inline PhantomResult gen_isotropic_fibers(Dims dims, Vec3 spacing, double radius_um, int n_fibers,
                                          std::uint64_t seed, PhantomGrays grays = {},
                                          double noise_sigma = 0.0, int threads = 1) {
  detail::check_phantom_args(dims, spacing, radius_um, grays);
  if (n_fibers < 0) throw ArgumentError("phantom: n_fibers must be >= 0");

  const Vec3 box{dims.nx * spacing.x, dims.ny * spacing.y, dims.nz * spacing.z};
  const double pad = 2.0 * radius_um + 2.0 * std::max({spacing.x, spacing.y, spacing.z});

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  PhantomResult res;
  std::vector<detail::Capsule> caps;
  caps.reserve(static_cast<std::size_t>(n_fibers));
  SymMat3 sum{};
  for (int k = 0; k < n_fibers; ++k) {
    const double zc = u01(rng);  // cos(theta), area-uniform on the hemisphere
    const double phi = 2.0 * 3.14159265358979323846 * u01(rng);
    const double rxy = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    const Vec3 axis = canonical_direction({rxy * std::cos(phi), rxy * std::sin(phi), zc});
    const Vec3 p0{u01(rng) * box.x, u01(rng) * box.y, u01(rng) * box.z};
    caps.push_back(detail::clip_line_to_box(p0, axis, box, pad));
    res.axes.push_back(axis);
    sum += SymMat3::outer(axis);
  }
  if (n_fibers > 0) res.axes_tensor = sum * (1.0 / n_fibers);
  res.volume = detail::rasterize_capsules(dims, spacing, caps, radius_um, grays, noise_sigma, seed,
                                          threads);
  return res;
}

/// Three-layer laminate: top and bottom thirds carry y-fibers, the central
/// third x-fibers. Emits per-layer ground-truth tensors for profile tests.
inline PhantomResult gen_shell_core(Dims dims, Vec3 spacing, double radius_um, std::uint64_t seed,
                                    double fill_fraction = 0.25, PhantomGrays grays = {},
                                    double noise_sigma = 0.0, int threads = 1) {
  detail::check_phantom_args(dims, spacing, radius_um, grays);
  if (dims.nz < 3) throw ArgumentError("shell_core: nz must allow three layers (nz >= 3)");
  const double layer_um = dims.nz * spacing.z / 3.0;
  if (layer_um < 4.0 * radius_um)
    throw ArgumentError("shell_core: layer thickness below 4 fiber radii; reduce radius");
  if (!(fill_fraction > 0.0 && fill_fraction < 0.7))
    throw ArgumentError("shell_core: fill_fraction must be in (0, 0.7)");

  const Vec3 box{dims.nx * spacing.x, dims.ny * spacing.y, dims.nz * spacing.z};
  const double pad = 2.0 * radius_um + 2.0 * std::max({spacing.x, spacing.y, spacing.z});
  const double pitch = radius_um * std::sqrt(3.14159265358979323846 / fill_fraction);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jit(-0.3, 0.3);

  PhantomResult res;
  std::vector<detail::Capsule> caps;
  SymMat3 sum{};

  const double z_edges[4] = {0.0, layer_um, 2.0 * layer_um, box.z};
  for (int layer = 0; layer < 3; ++layer) {
    const double z_lo = z_edges[layer], z_hi = z_edges[layer + 1];
    const bool along_y = layer != 1;
    const Vec3 axis = along_y ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    const double w_inplane = along_y ? box.x : box.y;  // lattice axis perpendicular to fibers
    const double w_z = (z_hi - z_lo) - 2.0 * radius_um;

    const int m1 = std::max(1, static_cast<int>(std::round(w_inplane / pitch)));
    const int m2 = std::max(1, static_cast<int>(std::round(w_z / pitch)));
    for (int j = 0; j < m2; ++j) {
      for (int i = 0; i < m1; ++i) {
        const double c1 = (i + 0.5 + jit(rng)) * (w_inplane / m1);
        const double cz = z_lo + radius_um + (j + 0.5 + jit(rng)) * (w_z / m2);
        const Vec3 p0 = along_y ? Vec3{c1, 0.5 * box.y, cz} : Vec3{0.5 * box.x, c1, cz};
        caps.push_back(detail::clip_line_to_box(p0, axis, box, pad));
        res.axes.push_back(canonical_direction(axis));
        sum += SymMat3::outer(canonical_direction(axis));
      }
    }
    res.layer_truth.push_back({z_lo, z_hi, SymMat3::outer(axis)});
  }
  if (!res.axes.empty()) res.axes_tensor = sum * (1.0 / static_cast<double>(res.axes.size()));
  res.volume = detail::rasterize_capsules(dims, spacing, caps, radius_um, grays, noise_sigma, seed,
                                          threads);
  return res;
}

}  // namespace fiberorient
