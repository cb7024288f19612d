#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>

#include "fiberorient/errors.hpp"
#include "fiberorient/grid.hpp"
#include "fiberorient/parallel.hpp"

namespace fiberorient {

/// Gray-value histogram with 256 bins spanning [lo, hi] of the values that
/// were counted. Degenerate inputs (all values equal) collapse into bin 0.
struct Histogram {
  static constexpr int kBins = 256;

  double lo = 0.0;
  double hi = 0.0;
  std::array<std::uint64_t, kBins> counts{};
  std::uint64_t total = 0;

  double bin_width() const { return (hi - lo) / kBins; }
  double bin_center(int i) const { return lo + (i + 0.5) * bin_width(); }
  /// Upper edge of bin i == lower edge of bin i+1.
  double bin_upper_edge(int i) const { return lo + (i + 1) * bin_width(); }

  int bin_of(double v) const {
    if (hi <= lo) return 0;
    const int i = static_cast<int>((v - lo) / bin_width());
    return std::clamp(i, 0, kBins - 1);
  }

  void add(double v) {
    ++counts[static_cast<std::size_t>(bin_of(v))];
    ++total;
  }

  int nonempty_bins() const {
    int n = 0;
    for (auto c : counts) n += c > 0;
    return n;
  }
};

/// Histogram over all voxels, or over mask voxels only when mask != nullptr.
inline Histogram build_histogram(const Volume& v, const Mask* mask = nullptr) {
  if (mask && mask->dims() != v.dims())
    throw ArgumentError("histogram: mask dims do not match volume");
  Histogram h;
  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
  bool any = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
    any = true;
  }
  if (!any) throw NumericError("histogram: no voxels to consider");
  h.lo = lo;
  h.hi = hi;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    h.add(v[i]);
  }
  return h;
}

/// Index of the bin k maximizing the between-class variance of the split
/// [0..k] vs [k+1..255]. Ties resolve to the lowest qualifying bin.
inline int otsu_bin(const Histogram& h) {
  if (h.nonempty_bins() < 2)
    throw NumericError("otsu: degenerate histogram (fewer than 2 nonempty bins)");

  double total_n = 0.0, total_s = 0.0;
  for (int i = 0; i < Histogram::kBins; ++i) {
    total_n += static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
    total_s += static_cast<double>(i) * static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
  }

  int best_k = -1;
  double best_bcv = -1.0;
  double n0 = 0.0, s0 = 0.0;
  for (int k = 0; k < Histogram::kBins - 1; ++k) {
    n0 += static_cast<double>(h.counts[static_cast<std::size_t>(k)]);
    s0 += static_cast<double>(k) * static_cast<double>(h.counts[static_cast<std::size_t>(k)]);
    const double n1 = total_n - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    // w0*w1*(mu0-mu1)^2, written over class sums to avoid early division.
    const double num = s0 * total_n - total_s * n0;
    const double bcv = num * num / (n0 * n1);
    if (bcv > best_bcv) {
      best_bcv = bcv;
      best_k = k;
    }
  }
  if (best_k < 0) throw NumericError("otsu: no valid split found");
  return best_k;
}

/// Otsu's threshold as a gray value: the edge between the two classes.
inline double otsu_threshold(const Histogram& h) { return h.bin_upper_edge(otsu_bin(h)); }

namespace detail {

/// Separable min/max filter with window 3 along one axis; out-of-volume
/// neighbors count as background. Composing the three axes equals the cube op.
template <bool TakeMin>
inline void minmax3_axis(const Mask& src, Mask& dst, int axis, int threads) {
  const Dims& d = src.dims();
  const int n[3] = {d.nx, d.ny, d.nz};
  parallel_chunks(d.nz, threads, [&](std::int64_t z0, std::int64_t z1) {
    for (int z = static_cast<int>(z0); z < static_cast<int>(z1); ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const int c[3] = {x, y, z};
          std::uint8_t acc = TakeMin ? 1 : 0;
          for (int o = -1; o <= 1; ++o) {
            int q[3] = {c[0], c[1], c[2]};
            q[axis] += o;
            const std::uint8_t val =
                (q[axis] < 0 || q[axis] >= n[axis]) ? 0 : (src(q[0], q[1], q[2]) ? 1 : 0);
            if constexpr (TakeMin) acc = std::min(acc, val);
            else acc = std::max(acc, val);
          }
          dst(x, y, z) = acc;
        }
      }
    }
  });
}

}  // namespace detail

/// Erosion by the 3x3x3 cube; border treated as background.
inline Mask erode3(const Mask& m, int threads = 1) {
  Mask a(m.dims()), b(m.dims());
  detail::minmax3_axis<true>(m, a, 0, threads);
  detail::minmax3_axis<true>(a, b, 1, threads);
  detail::minmax3_axis<true>(b, a, 2, threads);
  return a;
}

/// Dilation by the 3x3x3 cube; contributions outside the volume are background.
inline Mask dilate3(const Mask& m, int threads = 1) {
  Mask a(m.dims()), b(m.dims());
  detail::minmax3_axis<false>(m, a, 0, threads);
  detail::minmax3_axis<false>(a, b, 1, threads);
  detail::minmax3_axis<false>(b, a, 2, threads);
  return a;
}

/// Morphological opening with the 3x3x3 cube: erosion then dilation.
inline Mask morphological_opening(const Mask& m, int threads = 1) {
  return dilate3(erode3(m, threads), threads);
}

/// Part mask: gray >= threshold, smoothed by a 3x3x3 morphological opening.
/// Separates solid matter from surrounding air given a manual threshold.
inline Mask part_mask(const Volume& v, double threshold, int threads = 1) {
  Mask m(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) m[i] = v[i] >= threshold ? 1 : 0;
  return morphological_opening(m, threads);
}

/// Fiber-phase mask: voxels inside the part whose gray value reaches
/// factor * Otsu's threshold, the histogram being restricted to part voxels.
/// The default factor 1.25 drops fiber-edge voxels on purpose.
inline Mask fiber_mask(const Volume& v, const Mask& part, double factor = 1.25) {
  if (part.dims() != v.dims()) throw ArgumentError("fiber_mask: part mask dims do not match volume");
  if (!(factor > 0.0)) throw ArgumentError("fiber_mask: factor must be > 0");
  const Histogram h = build_histogram(v, &part);
  const double t = factor * otsu_threshold(h);
  Mask out(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (part[i] && v[i] >= t) ? 1 : 0;
  return out;
}

}  // namespace fiberorient
