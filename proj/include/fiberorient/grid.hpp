#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fiberorient/errors.hpp"
#include "fiberorient/math.hpp"

namespace fiberorient {

/// Voxel counts of a 3D grid. Element order everywhere in this library is
/// x fastest, then y, then z; all index arithmetic goes through index_of /
/// coord_of so the convention lives in exactly one place.
struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  constexpr bool operator==(const Dims&) const = default;

  constexpr std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }

  constexpr std::size_t index_of(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
  }

  constexpr std::array<int, 3> coord_of(std::size_t i) const {
    const std::size_t sx = static_cast<std::size_t>(nx);
    const std::size_t sxy = sx * static_cast<std::size_t>(ny);
    return {static_cast<int>(i % sx), static_cast<int>((i / sx) % static_cast<std::size_t>(ny)),
            static_cast<int>(i / sxy)};
  }

  constexpr bool contains(int x, int y, int z) const {
    return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
  }
};

/// Dense 3D grid of scalars, x-fastest storage.
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  explicit Grid3(Dims dims, T fill = T{}) : dims_(dims), data_(dims.size(), fill) {}

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int x, int y, int z) { return data_[dims_.index_of(x, y, z)]; }
  const T& operator()(int x, int y, int z) const { return data_[dims_.index_of(x, y, z)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid3&) const = default;

 private:
  Dims dims_{};
  std::vector<T> data_;
};

/// Scalar volume with physical voxel spacing in micrometers. Gray values are
/// stored as 32-bit float regardless of the on-disk element type.
class Volume : public Grid3<float> {
 public:
  Vec3 spacing{1.0, 1.0, 1.0};  // um per voxel, per axis

  Volume() = default;
  explicit Volume(Dims dims, Vec3 spacing_um = {1.0, 1.0, 1.0}, float fill = 0.0f)
      : Grid3<float>(dims, fill), spacing(spacing_um) {}
};

using Mask = Grid3<std::uint8_t>;

/// Per-voxel symmetric 3x3 tensor components, stored xx,yy,zz,xy,xz,yz.
using TensorField = Grid3<std::array<float, 6>>;

/// Per-voxel orientation axis plus validity flag. A voxel is valid when it
/// belongs to the fiber phase and the eigen-analysis produced a direction;
/// valid entries hold canonical upper-half-sphere unit vectors.
struct OrientationField {
  Dims dims{};
  std::vector<std::array<float, 3>> dir;
  std::vector<std::uint8_t> valid;

  OrientationField() = default;
  explicit OrientationField(Dims d) : dims(d), dir(d.size(), {0.f, 0.f, 0.f}), valid(d.size(), 0) {}

  bool is_valid(std::size_t i) const { return valid[i] != 0; }
  Vec3 direction(std::size_t i) const { return {dir[i][0], dir[i][1], dir[i][2]}; }
  void set(std::size_t i, const Vec3& u) {
    dir[i] = {static_cast<float>(u.x), static_cast<float>(u.y), static_cast<float>(u.z)};
    valid[i] = 1;
  }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v;
    return n;
  }
};

/// Sub-volume copy over [lo, hi), identical spacing, values copied bit-exactly.
inline Volume crop(const Volume& v, std::array<int, 3> lo, std::array<int, 3> hi) {
  const Dims& d = v.dims();
  const std::array<int, 3> n = {d.nx, d.ny, d.nz};
  constexpr const char* axis_name[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    if (lo[a] < 0 || hi[a] > n[a] || lo[a] >= hi[a]) {
      throw ArgumentError("crop: bounds [" + std::to_string(lo[a]) + "," + std::to_string(hi[a]) +
                          ") invalid on axis " + axis_name[a] + " (extent " +
                          std::to_string(n[a]) + ")");
    }
  }
  Volume out(Dims{hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}, v.spacing);
  for (int z = lo[2]; z < hi[2]; ++z)
    for (int y = lo[1]; y < hi[1]; ++y)
      for (int x = lo[0]; x < hi[0]; ++x)
        out(x - lo[0], y - lo[1], z - lo[2]) = v(x, y, z);
  return out;
}

/// Block-mean downsampling by an integer factor. Trailing partial blocks are
/// averaged over the voxels they actually cover; spacing scales by the factor.
inline Volume downsample(const Volume& v, int factor) {
  if (factor < 1) throw ArgumentError("downsample: factor must be >= 1");
  if (factor == 1) return v;
  const Dims& d = v.dims();
  const Dims od{(d.nx + factor - 1) / factor, (d.ny + factor - 1) / factor,
                (d.nz + factor - 1) / factor};
  Volume out(od, v.spacing * static_cast<double>(factor));
  for (int Z = 0; Z < od.nz; ++Z) {
    const int z0 = Z * factor, z1 = std::min(d.nz, z0 + factor);
    for (int Y = 0; Y < od.ny; ++Y) {
      const int y0 = Y * factor, y1 = std::min(d.ny, y0 + factor);
      for (int X = 0; X < od.nx; ++X) {
        const int x0 = X * factor, x1 = std::min(d.nx, x0 + factor);
        double sum = 0.0;
        for (int z = z0; z < z1; ++z)
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) sum += v(x, y, z);
        const double n = static_cast<double>(x1 - x0) * (y1 - y0) * (z1 - z0);
        out(X, Y, Z) = static_cast<float>(sum / n);
      }
    }
  }
  return out;
}

}  // namespace fiberorient
