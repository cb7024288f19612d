#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include "fiberorient/eigen_sym3.hpp"
#include "fiberorient/filters.hpp"
#include "fiberorient/grid.hpp"
#include "fiberorient/parallel.hpp"

namespace fiberorient {

/// Per-voxel orientation extraction settings. sigma_vox is the Gaussian scale
/// in voxels per axis (fiber radius / spacing); use_fallback selects the
/// 3x3x3 binomial mask for fiber diameters sampled by fewer than 3 voxels.
struct OrientationConfig {
  Vec3 sigma_vox{1.0, 1.0, 1.0};
  bool use_fallback = false;
  double min_norm_rel = 1e-12;  // tensors below rel * reference are "no orientation"
  int threads = 1;
};

/// Local fiber orientation from a Hessian: the eigenvector of the smallest
/// (in magnitude) eigenvalue — along a bright ridge the gray values are
/// curved the least in the fiber direction. Exactly tied magnitudes resolve
/// to the eigenvector closest to +z. A zero matrix yields no orientation.
inline std::optional<Vec3> local_orientation(const SymMat3& hessian) {
  if (hessian.frobenius_norm() == 0.0) return std::nullopt;
  const EigenDecomposition e = eigen_sym3(hessian);
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    const double ai = std::abs(e.values[static_cast<std::size_t>(i)]);
    const double ak = std::abs(e.values[static_cast<std::size_t>(k)]);
    if (ai < ak) k = i;
    else if (ai == ak && std::abs(e.vectors[static_cast<std::size_t>(i)].z) >
                             std::abs(e.vectors[static_cast<std::size_t>(k)].z))
      k = i;
  }
  return canonical_direction(e.vectors[static_cast<std::size_t>(k)]);
}

namespace detail {

inline float max_abs_value(const Volume& v) {
  float m = 0.0f;
  for (float x : v.data()) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Smooths the volume per config and derives a local orientation in each
/// fiber-mask voxel from the Hessian eigen-analysis. Voxels outside the mask,
/// with a (near-)zero Hessian, or with failed extraction are invalid.
inline OrientationField orientation_field(const Volume& v, const Mask& fiber,
                                          const OrientationConfig& cfg) {
  if (fiber.dims() != v.dims())
    throw ArgumentError("orientation_field: mask dims do not match volume");

  const Volume smoothed =
      cfg.use_fallback ? binomial_smooth(v, cfg.threads) : gaussian_smooth(v, cfg.sigma_vox, cfg.threads);
  const double min_norm = cfg.min_norm_rel * detail::max_abs_value(smoothed);
  const std::array<float, 6> scale = hessian_physical_scale(v.spacing);

  const Dims& d = v.dims();
  OrientationField field(d);
  parallel_chunks(d.nz, cfg.threads, [&](std::int64_t z0, std::int64_t z1) {
    for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const std::size_t i = d.index_of(x, y, z);
          if (!fiber[i]) continue;
          std::array<float, 6> h = hessian_at(smoothed, x, y, z);
          for (int c = 0; c < 6; ++c) h[static_cast<std::size_t>(c)] *= scale[static_cast<std::size_t>(c)];
          const SymMat3 hm = SymMat3::from_array(h);
          if (!hm.all_finite())
            throw NumericError("orientation_field: non-finite Hessian at voxel (" +
                               std::to_string(x) + "," + std::to_string(y) + "," +
                               std::to_string(z) + ")");
          if (hm.frobenius_norm() < min_norm) continue;  // flat region, no ridge
          if (const auto u = local_orientation(hm)) field.set(i, *u);
        }
  });
  return field;
}

/// Structure-tensor variant: orientation is the eigenvector of the smallest
/// eigenvalue of the Gaussian-integrated gradient outer product.
inline OrientationField orientation_field_structure_tensor(const Volume& v, const Mask& fiber,
                                                           double sigma_grad, double sigma_int,
                                                           double min_norm_rel = 1e-12,
                                                           int threads = 1) {
  if (fiber.dims() != v.dims())
    throw ArgumentError("orientation_field: mask dims do not match volume");
  const TensorField st = structure_tensor_field(v, sigma_grad, sigma_int, threads);

  double max_trace = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const auto& t = st[i];
    max_trace = std::max(max_trace, static_cast<double>(t[0]) + t[1] + t[2]);
  }
  const double min_norm = min_norm_rel * max_trace;

  const Dims& d = v.dims();
  OrientationField field(d);
  parallel_chunks(d.nz, threads, [&](std::int64_t z0, std::int64_t z1) {
    for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const std::size_t i = d.index_of(x, y, z);
          if (!fiber[i]) continue;
          const SymMat3 t = SymMat3::from_array(st[i]);
          if (t.frobenius_norm() <= min_norm) continue;
          const EigenDecomposition e = eigen_sym3(t);
          field.set(i, canonical_direction(e.min_value_vector()));
        }
  });
  return field;
}

}  // namespace fiberorient
