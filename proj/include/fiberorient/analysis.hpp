#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "fiberorient/filters.hpp"
#include "fiberorient/grid.hpp"
#include "fiberorient/orientation.hpp"
#include "fiberorient/segmentation.hpp"
#include "fiberorient/tensor_stats.hpp"

namespace fiberorient {

enum class Method { Hessian, StructureTensor };

inline const char* method_name(Method m) {
  return m == Method::Hessian ? "hessian" : "structure-tensor";
}

/// Full configuration of an analysis run. Thread count never changes results
/// and is therefore not part of the provenance echo written to outputs.
struct AnalysisConfig {
  double part_threshold = std::numeric_limits<double>::quiet_NaN();  // required, gray value
  double fiber_threshold_factor = 1.25;  // scales Otsu's threshold for the fiber phase
  double fiber_diameter_um = 0.0;        // required > 0
  double sigma_factor = 1.0;             // smoothing sigma = factor * fiber radius
  Method method = Method::Hessian;
  double st_sigma_int_factor = 1.0;  // structure tensor: integration scale / gradient scale
  double tile_edge_um = 218.0;
  double min_fiber_fraction = 0.01;  // of tile volume; tiles below are excluded
  double alpha_report = 0.6;         // mean direction reported only at alpha >= this
  int profile_layers = 12;
  int threads = 0;  // 0 = hardware concurrency
};

struct AnalysisResult {
  Dims dims{};
  Vec3 spacing{1.0, 1.0, 1.0};
  Mask part;
  Mask fiber;
  OrientationField field;
  TileGrid tiles;
  GlobalStats global;
  LayerProfile profile_x, profile_y, profile_z;
  LayerProfile layers;  // z re-binned into profile_layers equal-thickness bands

  double otsu_value = 0.0;       // unscaled Otsu threshold over part voxels
  double fiber_threshold = 0.0;  // factor * otsu_value
  Vec3 sigma_vox{0, 0, 0};
  bool used_fallback = false;
  int tile_edge_vox = 0;
  std::uint64_t min_fiber_voxels = 1;
};

inline void validate_config(const AnalysisConfig& cfg) {
  if (!std::isfinite(cfg.part_threshold))
    throw ArgumentError("config: part-threshold is required (manually chosen gray value)");
  if (!(cfg.fiber_threshold_factor > 0.0))
    throw ArgumentError("config: fiber-threshold-factor must be > 0");
  if (!(cfg.fiber_diameter_um > 0.0)) throw ArgumentError("config: fiber-diameter must be > 0");
  if (!(cfg.sigma_factor > 0.0)) throw ArgumentError("config: sigma-factor must be > 0");
  if (!(cfg.st_sigma_int_factor > 0.0))
    throw ArgumentError("config: st-sigma-int-factor must be > 0");
  if (!(cfg.tile_edge_um > 0.0)) throw ArgumentError("config: tile-edge must be > 0");
  if (!(cfg.min_fiber_fraction >= 0.0 && cfg.min_fiber_fraction <= 1.0))
    throw ArgumentError("config: min-fiber-fraction must be in [0,1]");
  if (!(cfg.alpha_report >= 0.0 && cfg.alpha_report <= 1.0))
    throw ArgumentError("config: alpha-report must be in [0,1]");
  if (cfg.profile_layers < 1) throw ArgumentError("config: profile-layers must be >= 1");
}

/// End-to-end pipeline on an in-memory volume: part mask, fiber mask,
/// smoothing, per-voxel orientations, tile tensors, and layer profiles.
inline AnalysisResult analyze_volume(const Volume& v, const AnalysisConfig& cfg) {
  validate_config(cfg);
  const int threads = resolve_threads(cfg.threads);

  AnalysisResult res;
  res.dims = v.dims();
  res.spacing = v.spacing;

  res.tile_edge_vox = static_cast<int>(std::llround(cfg.tile_edge_um / v.spacing.x));
  if (res.tile_edge_vox < 2)
    throw ArgumentError("config: tile edge of " + std::to_string(cfg.tile_edge_um) +
                        " um is smaller than 2 voxels at spacing " + std::to_string(v.spacing.x) +
                        " um; increase tile-edge");

  res.part = part_mask(v, cfg.part_threshold, threads);
  {
    const Histogram h = build_histogram(v, &res.part);
    res.otsu_value = otsu_threshold(h);
  }
  res.fiber_threshold = cfg.fiber_threshold_factor * res.otsu_value;
  res.fiber = fiber_mask(v, res.part, cfg.fiber_threshold_factor);

  // Smoothing scale rule: sigma matches the fiber radius; below 3 voxels per
  // diameter the sampled Gaussian is impossible and the 3x3x3 mask steps in.
  const double radius_um = 0.5 * cfg.fiber_diameter_um;
  const double max_sp = std::max({v.spacing.x, v.spacing.y, v.spacing.z});
  res.used_fallback = cfg.fiber_diameter_um / max_sp < 3.0;
  res.sigma_vox = Vec3{cfg.sigma_factor * radius_um / v.spacing.x,
                       cfg.sigma_factor * radius_um / v.spacing.y,
                       cfg.sigma_factor * radius_um / v.spacing.z};

  if (cfg.method == Method::Hessian) {
    OrientationConfig ocfg;
    ocfg.sigma_vox = res.sigma_vox;
    ocfg.use_fallback = res.used_fallback;
    ocfg.threads = threads;
    res.field = orientation_field(v, res.fiber, ocfg);
  } else {
    if (res.used_fallback) {
      const Volume pre = binomial_smooth(v, threads);
      res.field = orientation_field_structure_tensor(
          pre, res.fiber, 0.0, cfg.st_sigma_int_factor * 1.0, 1e-12, threads);
    } else {
      const double sg = res.sigma_vox.x;
      res.field = orientation_field_structure_tensor(v, res.fiber, sg,
                                                     cfg.st_sigma_int_factor * sg, 1e-12, threads);
    }
  }

  const double tile_volume = static_cast<double>(res.tile_edge_vox) * res.tile_edge_vox *
                             res.tile_edge_vox;
  res.min_fiber_voxels =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cfg.min_fiber_fraction * tile_volume));

  res.tiles = tile_analysis(res.field, res.tile_edge_vox, res.min_fiber_voxels, v.spacing,
                            cfg.alpha_report, threads);
  res.global = global_stats(res.tiles);
  res.profile_x = axis_profile(res.tiles, 0);
  res.profile_y = axis_profile(res.tiles, 1);
  res.profile_z = axis_profile(res.tiles, 2);
  res.layers = layer_resample(res.tiles, cfg.profile_layers);
  return res;
}

}  // namespace fiberorient
