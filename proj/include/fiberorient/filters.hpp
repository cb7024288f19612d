#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fiberorient/errors.hpp"
#include "fiberorient/grid.hpp"
#include "fiberorient/math.hpp"
#include "fiberorient/parallel.hpp"

namespace fiberorient {

/// Mirror (half-sample symmetric) boundary index: ..., 1, 0 | 0, 1, ..., n-1 | n-1, n-2, ...
/// This extension conserves the total mass of symmetric smoothing kernels.
inline int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int p = 2 * n;
  i %= p;
  if (i < 0) i += p;
  return i < n ? i : p - 1 - i;
}

/// Odd-length 1D correlation kernel: out(i) = sum_j taps[j+r] * src(i+j).
struct Kernel1D {
  std::vector<double> taps;

  int radius() const { return static_cast<int>(taps.size() / 2); }
  double sum() const {
    double s = 0.0;
    for (double t : taps) s += t;
    return s;
  }
};

/// Sampled Gaussian truncated at +-ceil(3*sigma) taps and renormalized to
/// sum 1. sigma = 0 degenerates to the identity kernel.
inline Kernel1D gaussian_kernel(double sigma_vox) {
  if (sigma_vox < 0.0) throw ArgumentError("gaussian_kernel: sigma must be >= 0");
  if (sigma_vox == 0.0) return Kernel1D{{1.0}};
  const int r = static_cast<int>(std::ceil(3.0 * sigma_vox));
  Kernel1D k;
  k.taps.resize(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma_vox * sigma_vox));
    k.taps[static_cast<std::size_t>(i + r)] = w;
    sum += w;
  }
  for (auto& t : k.taps) t /= sum;
  return k;
}

/// Minimal 3-tap smoothing kernel [1,2,1]/4; the three axes together form the
/// 3x3x3 mask used when the fiber diameter is sampled by fewer than 3 voxels.
inline Kernel1D binomial3_kernel() { return Kernel1D{{0.25, 0.5, 0.25}}; }

/// Correlates src with a 1D kernel along one axis (0=x, 1=y, 2=z), mirror
/// boundaries, output dims unchanged.
inline void convolve_axis(const Volume& src, Volume& dst, int axis, const Kernel1D& kernel,
                          int threads = 1) {
  const Dims& d = src.dims();
  const int r = kernel.radius();
  const int n_axis = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
  const double* taps = kernel.taps.data();

  parallel_chunks(d.nz, threads, [&](std::int64_t z0, std::int64_t z1) {
    for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const int c[3] = {x, y, z};
          double acc = 0.0;
          if (c[axis] >= r && c[axis] + r < n_axis) {
            int q[3] = {x, y, z};
            q[axis] -= r;
            for (int j = 0; j < 2 * r + 1; ++j) {
              acc += taps[j] * src(q[0], q[1], q[2]);
              ++q[axis];
            }
          } else {
            for (int j = -r; j <= r; ++j) {
              int q[3] = {x, y, z};
              q[axis] = mirror_index(c[axis] + j, n_axis);
              acc += taps[j + r] * src(q[0], q[1], q[2]);
            }
          }
          dst(x, y, z) = static_cast<float>(acc);
        }
      }
    }
  });
}

/// Separable smoothing along x, then y, then z with per-axis sigmas (voxels).
inline Volume gaussian_smooth(const Volume& v, Vec3 sigma_vox, int threads = 1) {
  if (sigma_vox.x < 0 || sigma_vox.y < 0 || sigma_vox.z < 0)
    throw ArgumentError("gaussian_smooth: sigma must be >= 0 on every axis");
  Volume a = v, b(v.dims(), v.spacing);
  convolve_axis(a, b, 0, gaussian_kernel(sigma_vox.x), threads);
  convolve_axis(b, a, 1, gaussian_kernel(sigma_vox.y), threads);
  convolve_axis(a, b, 2, gaussian_kernel(sigma_vox.z), threads);
  return b;
}

/// 3x3x3 binomial fallback smoothing ([1,2,1]/4 per axis).
inline Volume binomial_smooth(const Volume& v, int threads = 1) {
  Volume a = v, b(v.dims(), v.spacing);
  const Kernel1D k = binomial3_kernel();
  convolve_axis(a, b, 0, k, threads);
  convolve_axis(b, a, 1, k, threads);
  convolve_axis(a, b, 2, k, threads);
  return b;
}

/// Second-order central differences of a (pre-smoothed) volume at one voxel,
/// mirror boundaries. Pure stencils: [1,-2,1] on-axis, composed [-1/2,0,1/2]
/// for mixed terms. Returned in voxel units, packed xx,yy,zz,xy,xz,yz.
inline std::array<float, 6> hessian_at(const Volume& s, int x, int y, int z) {
  const Dims& d = s.dims();
  const int xm = mirror_index(x - 1, d.nx), xp = mirror_index(x + 1, d.nx);
  const int ym = mirror_index(y - 1, d.ny), yp = mirror_index(y + 1, d.ny);
  const int zm = mirror_index(z - 1, d.nz), zp = mirror_index(z + 1, d.nz);

  const float c = s(x, y, z);
  const float hxx = s(xm, y, z) - 2.0f * c + s(xp, y, z);
  const float hyy = s(x, ym, z) - 2.0f * c + s(x, yp, z);
  const float hzz = s(x, y, zm) - 2.0f * c + s(x, y, zp);
  const float hxy = 0.25f * (s(xp, yp, z) - s(xm, yp, z) - s(xp, ym, z) + s(xm, ym, z));
  const float hxz = 0.25f * (s(xp, y, zp) - s(xm, y, zp) - s(xp, y, zm) + s(xm, y, zm));
  const float hyz = 0.25f * (s(x, yp, zp) - s(x, ym, zp) - s(x, yp, zm) + s(x, ym, zm));
  return {hxx, hyy, hzz, hxy, hxz, hyz};
}

/// Scale factors that convert voxel-unit second derivatives to physical units
/// (per um^2), packed to match hessian_at.
inline std::array<float, 6> hessian_physical_scale(const Vec3& spacing) {
  return {static_cast<float>(1.0 / (spacing.x * spacing.x)),
          static_cast<float>(1.0 / (spacing.y * spacing.y)),
          static_cast<float>(1.0 / (spacing.z * spacing.z)),
          static_cast<float>(1.0 / (spacing.x * spacing.y)),
          static_cast<float>(1.0 / (spacing.x * spacing.z)),
          static_cast<float>(1.0 / (spacing.y * spacing.z))};
}

/// Hessian of an already-smoothed volume in every voxel, in physical units.
inline TensorField hessian_field(const Volume& smoothed, int threads = 1) {
  const Dims& d = smoothed.dims();
  TensorField out(d);
  const std::array<float, 6> scale = hessian_physical_scale(smoothed.spacing);
  parallel_chunks(d.nz, threads, [&](std::int64_t z0, std::int64_t z1) {
    for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          std::array<float, 6> h = hessian_at(smoothed, x, y, z);
          for (int i = 0; i < 6; ++i) {
            h[static_cast<std::size_t>(i)] *= scale[static_cast<std::size_t>(i)];
            if (!std::isfinite(h[static_cast<std::size_t>(i)]))
              throw NumericError("hessian_field: non-finite value at voxel (" + std::to_string(x) +
                                 "," + std::to_string(y) + "," + std::to_string(z) + ")");
          }
          out(x, y, z) = h;
        }
  });
  return out;
}

/// Gradient by central differences of a pre-smoothed volume, physical units.
inline Vec3 gradient_at(const Volume& s, int x, int y, int z) {
  const Dims& d = s.dims();
  const double gx = 0.5 * (s(mirror_index(x + 1, d.nx), y, z) - s(mirror_index(x - 1, d.nx), y, z));
  const double gy = 0.5 * (s(x, mirror_index(y + 1, d.ny), z) - s(x, mirror_index(y - 1, d.ny), z));
  const double gz = 0.5 * (s(x, y, mirror_index(z + 1, d.nz)) - s(x, y, mirror_index(z - 1, d.nz)));
  return {gx / s.spacing.x, gy / s.spacing.y, gz / s.spacing.z};
}

/// Structure tensor field: outer product of the Gaussian-derivative gradient
/// (scale sigma_grad), componentwise Gaussian-integrated at sigma_int. The
/// local fiber orientation for this method is the eigenvector of the smallest
/// eigenvalue (the gradient is perpendicular to the fiber axis).
inline TensorField structure_tensor_field(const Volume& v, double sigma_grad, double sigma_int,
                                          int threads = 1) {
  if (sigma_grad < 0 || sigma_int < 0)
    throw ArgumentError("structure_tensor_field: sigmas must be >= 0");
  const Dims& d = v.dims();
  const Volume s = gaussian_smooth(v, {sigma_grad, sigma_grad, sigma_grad}, threads);

  std::array<Volume, 6> comp;
  for (auto& c : comp) c = Volume(d, v.spacing);
  parallel_chunks(d.nz, threads, [&](std::int64_t z0, std::int64_t z1) {
    for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z)
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          const Vec3 g = gradient_at(s, x, y, z);
          comp[0](x, y, z) = static_cast<float>(g.x * g.x);
          comp[1](x, y, z) = static_cast<float>(g.y * g.y);
          comp[2](x, y, z) = static_cast<float>(g.z * g.z);
          comp[3](x, y, z) = static_cast<float>(g.x * g.y);
          comp[4](x, y, z) = static_cast<float>(g.x * g.z);
          comp[5](x, y, z) = static_cast<float>(g.y * g.z);
        }
  });

  TensorField out(d);
  for (int i = 0; i < 6; ++i) {
    const Volume sm = gaussian_smooth(comp[static_cast<std::size_t>(i)],
                                      {sigma_int, sigma_int, sigma_int}, threads);
    for (std::size_t j = 0; j < sm.size(); ++j) out[j][static_cast<std::size_t>(i)] = sm[j];
  }
  return out;
}

}  // namespace fiberorient
