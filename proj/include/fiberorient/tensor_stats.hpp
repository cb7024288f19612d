#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "fiberorient/eigen_sym3.hpp"
#include "fiberorient/grid.hpp"
#include "fiberorient/parallel.hpp"

namespace fiberorient {

/// Raw accumulation of outer products over a voxel region.
struct TensorSum {
  SymMat3 sum{};
  std::uint64_t count = 0;

  /// Empirical second moment (trace 1 up to rounding). Only valid for count > 0.
  SymMat3 mean() const { return sum * (1.0 / static_cast<double>(count)); }
};

/// Sum of u u^T over the valid voxels of a box region [lo, hi). Sequential
/// x-fastest fold, so results are reproducible.
inline TensorSum orientation_tensor_region(const OrientationField& f, std::array<int, 3> lo,
                                           std::array<int, 3> hi) {
  TensorSum acc;
  for (int z = lo[2]; z < hi[2]; ++z)
    for (int y = lo[1]; y < hi[1]; ++y)
      for (int x = lo[0]; x < hi[0]; ++x) {
        const std::size_t i = f.dims.index_of(x, y, z);
        if (!f.is_valid(i)) continue;
        acc.sum += SymMat3::outer(f.direction(i));
        ++acc.count;
      }
  return acc;
}

/// Second-order orientation tensor over the whole field: the average of
/// u u^T over all valid voxels. count = 0 marks an empty region.
inline TensorSum orientation_tensor(const OrientationField& f) {
  return orientation_tensor_region(f, {0, 0, 0}, {f.dims.nx, f.dims.ny, f.dims.nz});
}

/// Anisotropy index alpha = 1 - l_min/l_max of a positive semi-definite
/// tensor, clamped into [0,1]; 0 means perfect isotropy, 1 unidirectional or
/// transversally isotropic.
inline double anisotropy_index(const SymMat3& t) {
  const EigenDecomposition e = eigen_sym3(t);
  const double lmax = e.max_value();
  if (lmax <= 0.0) throw NumericError("anisotropy_index: degenerate tensor (l_max <= 0)");
  const double a = 1.0 - e.min_value() / lmax;
  return std::clamp(a, 0.0, 1.0);
}

/// Preferred direction: eigenvector of the largest eigenvalue, reported only
/// when the anisotropy index reaches alpha_report; below that the tensor is
/// too isotropic for a mean direction to be meaningful.
inline std::optional<Vec3> mean_direction(const SymMat3& t, double alpha_report = 0.6) {
  const EigenDecomposition e = eigen_sym3(t);
  const double lmax = e.max_value();
  if (lmax <= 0.0) throw NumericError("mean_direction: degenerate tensor (l_max <= 0)");
  const double alpha = std::clamp(1.0 - e.min_value() / lmax, 0.0, 1.0);
  if (alpha < alpha_report) return std::nullopt;
  return canonical_direction(e.max_value_vector());
}

struct Tile {
  SymMat3 tensor{};  // trace-normalized; meaningful iff count > 0
  std::uint64_t count = 0;
  double alpha = 0.0;  // meaningful iff count > 0
  std::optional<Vec3> mean_dir;
  bool valid = false;    // count >= min_fiber_voxels
  bool partial = false;  // clipped by the volume boundary
};

/// Cubic tiling of the orientation field, each tile carrying an orientation
/// tensor, valid-voxel count, anisotropy index, and gated mean direction.
struct TileGrid {
  Dims grid{};  // number of tiles per axis
  int edge_vox = 0;
  Dims vol_dims{};
  Vec3 spacing{1.0, 1.0, 1.0};
  double alpha_report = 0.6;
  std::uint64_t min_fiber_voxels = 1;
  std::vector<Tile> tiles;

  Tile& at(int tx, int ty, int tz) { return tiles[grid.index_of(tx, ty, tz)]; }
  const Tile& at(int tx, int ty, int tz) const { return tiles[grid.index_of(tx, ty, tz)]; }

  std::array<int, 3> tile_lo(int tx, int ty, int tz) const {
    return {tx * edge_vox, ty * edge_vox, tz * edge_vox};
  }
  std::array<int, 3> tile_hi(int tx, int ty, int tz) const {
    return {std::min(vol_dims.nx, (tx + 1) * edge_vox), std::min(vol_dims.ny, (ty + 1) * edge_vox),
            std::min(vol_dims.nz, (tz + 1) * edge_vox)};
  }
  Vec3 tile_center_um(int tx, int ty, int tz) const {
    const auto lo = tile_lo(tx, ty, tz);
    const auto hi = tile_hi(tx, ty, tz);
    return {0.5 * (lo[0] + hi[0]) * spacing.x, 0.5 * (lo[1] + hi[1]) * spacing.y,
            0.5 * (lo[2] + hi[2]) * spacing.z};
  }

  /// Count-weighted combination of all tile tensors (no min-count exclusion),
  /// folded in tile raster order. Matches the whole-field tensor up to the
  /// summation grouping.
  TensorSum weighted_global() const {
    SymMat3 sum{};
    std::uint64_t n = 0;
    for (const Tile& t : tiles) {
      if (t.count == 0) continue;
      sum += t.tensor * static_cast<double>(t.count);
      n += t.count;
    }
    return {sum, n};
  }
};

/// Partitions the field into axis-aligned cubes of tile_edge_vox voxels
/// (trailing partial tiles kept and flagged) and computes per-tile statistics.
/// Tiles with fewer than min_fiber_voxels valid voxels are marked invalid.
inline TileGrid tile_analysis(const OrientationField& field, int tile_edge_vox,
                              std::uint64_t min_fiber_voxels, Vec3 spacing_um = {1.0, 1.0, 1.0},
                              double alpha_report = 0.6, int threads = 1) {
  if (tile_edge_vox < 2) throw ArgumentError("tile_analysis: tile edge must be >= 2 voxels");
  if (min_fiber_voxels < 1) throw ArgumentError("tile_analysis: min_fiber_voxels must be >= 1");

  TileGrid g;
  g.edge_vox = tile_edge_vox;
  g.vol_dims = field.dims;
  g.spacing = spacing_um;
  g.alpha_report = alpha_report;
  g.min_fiber_voxels = min_fiber_voxels;
  g.grid = Dims{(field.dims.nx + tile_edge_vox - 1) / tile_edge_vox,
                (field.dims.ny + tile_edge_vox - 1) / tile_edge_vox,
                (field.dims.nz + tile_edge_vox - 1) / tile_edge_vox};
  g.tiles.resize(g.grid.size());

  const std::int64_t n_tiles = static_cast<std::int64_t>(g.grid.size());
  parallel_chunks(n_tiles, threads, [&](std::int64_t t0, std::int64_t t1) {
    for (std::int64_t ti = t0; ti < t1; ++ti) {
      const auto [tx, ty, tz] = g.grid.coord_of(static_cast<std::size_t>(ti));
      const auto lo = g.tile_lo(tx, ty, tz);
      const auto hi = g.tile_hi(tx, ty, tz);
      Tile& tile = g.tiles[static_cast<std::size_t>(ti)];
      tile.partial = (hi[0] - lo[0] != tile_edge_vox) || (hi[1] - lo[1] != tile_edge_vox) ||
                     (hi[2] - lo[2] != tile_edge_vox);
      const TensorSum acc = orientation_tensor_region(field, lo, hi);
      tile.count = acc.count;
      if (acc.count == 0) continue;
      tile.tensor = acc.mean();
      tile.alpha = anisotropy_index(tile.tensor);
      tile.valid = acc.count >= min_fiber_voxels;
      if (tile.valid && tile.alpha >= alpha_report)
        tile.mean_dir = mean_direction(tile.tensor, alpha_report);
    }
  });
  return g;
}

struct ProfileLayer {
  bool present = false;
  double center_um = 0.0;
  SymMat3 tensor{};  // trace re-normalized to 1
  double alpha = 0.0;
  double weight = 0.0;  // fiber-voxel weight behind the average
};

struct LayerProfile {
  int axis = 2;  // 0=x, 1=y, 2=z
  std::vector<ProfileLayer> layers;
};

namespace detail {

inline void finalize_layer(ProfileLayer& L, const SymMat3& wsum, double wn) {
  if (wn <= 0.0) return;
  SymMat3 t = wsum * (1.0 / wn);
  const double tr = t.trace();
  if (tr <= 0.0) return;
  t = t * (1.0 / tr);
  L.tensor = t;
  L.alpha = anisotropy_index(t);
  L.weight = wn;
  L.present = true;
}

}  // namespace detail

/// Fiber-count-weighted average of valid tile tensors per layer of tiles
/// along the chosen axis, re-normalized to trace 1; alpha recomputed from the
/// averaged tensor. Layers without valid tiles are marked absent.
inline LayerProfile axis_profile(const TileGrid& g, int axis) {
  if (axis < 0 || axis > 2) throw ArgumentError("axis_profile: axis must be 0, 1, or 2");
  if (g.tiles.empty()) throw ArgumentError("axis_profile: empty tile grid");

  const int n_layers = axis == 0 ? g.grid.nx : axis == 1 ? g.grid.ny : g.grid.nz;
  LayerProfile p;
  p.axis = axis;
  p.layers.resize(static_cast<std::size_t>(n_layers));

  for (int L = 0; L < n_layers; ++L) {
    SymMat3 wsum{};
    double wn = 0.0;
    for (int tz = 0; tz < g.grid.nz; ++tz)
      for (int ty = 0; ty < g.grid.ny; ++ty)
        for (int tx = 0; tx < g.grid.nx; ++tx) {
          const int li = axis == 0 ? tx : axis == 1 ? ty : tz;
          if (li != L) continue;
          const Tile& t = g.at(tx, ty, tz);
          if (!t.valid) continue;
          wsum += t.tensor * static_cast<double>(t.count);
          wn += static_cast<double>(t.count);
        }
    ProfileLayer& layer = p.layers[static_cast<std::size_t>(L)];
    const int lo = L * g.edge_vox;
    const int hi = std::min(axis == 0 ? g.vol_dims.nx : axis == 1 ? g.vol_dims.ny : g.vol_dims.nz,
                            (L + 1) * g.edge_vox);
    const double sp = axis == 0 ? g.spacing.x : axis == 1 ? g.spacing.y : g.spacing.z;
    layer.center_um = 0.5 * (lo + hi) * sp;
    detail::finalize_layer(layer, wsum, wn);
  }
  return p;
}

/// Re-bins tiles along z into n_layers equal-thickness bands over the full
/// z extent and averages as in axis_profile. A tile contributes to each band
/// proportionally to the overlap of its z range with the band, so coarse
/// tilings still populate every band; when bands coincide with tile layers
/// this reduces to axis_profile along z.
inline LayerProfile layer_resample(const TileGrid& g, int n_layers = 12) {
  if (n_layers < 1) throw ArgumentError("layer_resample: n_layers must be >= 1");
  if (g.tiles.empty()) throw ArgumentError("layer_resample: empty tile grid");

  const double extent = g.vol_dims.nz * g.spacing.z;
  const double band = extent / n_layers;

  LayerProfile p;
  p.axis = 2;
  p.layers.resize(static_cast<std::size_t>(n_layers));

  std::vector<SymMat3> wsum(static_cast<std::size_t>(n_layers));
  std::vector<double> wn(static_cast<std::size_t>(n_layers), 0.0);

  for (int tz = 0; tz < g.grid.nz; ++tz) {
    const double t_lo = tz * g.edge_vox * g.spacing.z;
    const double t_hi = std::min(g.vol_dims.nz, (tz + 1) * g.edge_vox) * g.spacing.z;
    const double t_len = t_hi - t_lo;
    if (t_len <= 0.0) continue;
    const int b0 = std::clamp(static_cast<int>(t_lo / band), 0, n_layers - 1);
    const int b1 = std::clamp(static_cast<int>((t_hi - 1e-12 * extent) / band), 0, n_layers - 1);
    for (int b = b0; b <= b1; ++b) {
      const double overlap = std::min(t_hi, (b + 1) * band) - std::max(t_lo, b * band);
      if (overlap <= 0.0) continue;
      const double frac = overlap / t_len;
      for (int ty = 0; ty < g.grid.ny; ++ty)
        for (int tx = 0; tx < g.grid.nx; ++tx) {
          const Tile& t = g.at(tx, ty, tz);
          if (!t.valid) continue;
          const double w = static_cast<double>(t.count) * frac;
          wsum[static_cast<std::size_t>(b)] += t.tensor * w;
          wn[static_cast<std::size_t>(b)] += w;
        }
    }
  }

  for (int b = 0; b < n_layers; ++b) {
    ProfileLayer& layer = p.layers[static_cast<std::size_t>(b)];
    layer.center_um = (b + 0.5) * band;
    detail::finalize_layer(layer, wsum[static_cast<std::size_t>(b)], wn[static_cast<std::size_t>(b)]);
  }
  return p;
}

/// Whole-region summary: count-weighted global tensor (see weighted_global),
/// anisotropy index, and gated mean direction.
struct GlobalStats {
  SymMat3 tensor{};
  std::uint64_t count = 0;
  double alpha = 0.0;
  std::optional<Vec3> mean_dir;
};

inline GlobalStats global_stats(const TileGrid& g) {
  GlobalStats s;
  const TensorSum acc = g.weighted_global();
  s.count = acc.count;
  if (acc.count == 0) return s;
  s.tensor = acc.sum * (1.0 / static_cast<double>(acc.count));
  s.alpha = anisotropy_index(s.tensor);
  if (s.alpha >= g.alpha_report) s.mean_dir = mean_direction(s.tensor, g.alpha_report);
  return s;
}

}  // namespace fiberorient
