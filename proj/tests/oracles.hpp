#pragma once

// Independent reference implementations used as oracles by the test suites.
// Everything here is deliberately brute force and shares no code with the
// library paths it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fiberorient/grid.hpp"
#include "fiberorient/math.hpp"
#include "fiberorient/segmentation.hpp"

namespace oracle {

using fiberorient::Dims;
using fiberorient::Histogram;
using fiberorient::Mask;
using fiberorient::SymMat3;
using fiberorient::Vec3;
using fiberorient::Volume;

// ---------------------------------------------------------------------------
// Jacobi eigensolver: fixed 100 cyclic sweeps over a plain 3x3 array.

struct EigenResult {
  std::array<double, 3> values{};
  std::array<Vec3, 3> vectors{};
};

inline EigenResult jacobi_eigen(const SymMat3& m) {
  double a[3][3] = {{m.xx, m.xy, m.xz}, {m.xy, m.yy, m.yz}, {m.xz, m.yz, m.zz}};
  double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 3; ++p)
      for (int q = p + 1; q < 3; ++q) off += a[p][q] * a[p][q];
    if (off == 0.0) break;
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double phi = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
        const double c = std::cos(phi), s = std::sin(phi);
        double r[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        r[p][p] = c;
        r[q][q] = c;
        r[p][q] = s;
        r[q][p] = -s;
        // a = r^T a r
        double t[3][3];
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            t[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) t[i][j] += a[i][k] * r[k][j];
          }
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            a[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) a[i][j] += r[k][i] * t[k][j];
          }
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            t[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) t[i][j] += v[i][k] * r[k][j];
          }
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) v[i][j] = t[i][j];
      }
    }
  }

  EigenResult res;
  for (int i = 0; i < 3; ++i) {
    res.values[static_cast<std::size_t>(i)] = a[i][i];
    res.vectors[static_cast<std::size_t>(i)] = Vec3{v[0][i], v[1][i], v[2][i]}.normalized();
  }
  return res;
}

inline std::array<double, 3> sorted_by_value(std::array<double, 3> w) {
  std::sort(w.begin(), w.end());
  return w;
}

// ---------------------------------------------------------------------------
// Dense 3D convolution with per-axis half-sample mirror extension.

inline int mirror(int i, int n) {
  if (n == 1) return 0;
  const int p = 2 * n;
  i %= p;
  if (i < 0) i += p;
  return i < n ? i : p - 1 - i;
}

inline Volume dense_convolve(const Volume& src, const std::vector<double>& kx,
                             const std::vector<double>& ky, const std::vector<double>& kz) {
  const Dims& d = src.dims();
  const int rx = static_cast<int>(kx.size() / 2);
  const int ry = static_cast<int>(ky.size() / 2);
  const int rz = static_cast<int>(kz.size() / 2);
  Volume out(d, src.spacing);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        double acc = 0.0;
        for (int cz = -rz; cz <= rz; ++cz)
          for (int cy = -ry; cy <= ry; ++cy)
            for (int cx = -rx; cx <= rx; ++cx) {
              const double w = kx[static_cast<std::size_t>(cx + rx)] *
                               ky[static_cast<std::size_t>(cy + ry)] *
                               kz[static_cast<std::size_t>(cz + rz)];
              acc += w * src(mirror(x + cx, d.nx), mirror(y + cy, d.ny), mirror(z + cz, d.nz));
            }
        out(x, y, z) = static_cast<float>(acc);
      }
  return out;
}

// ---------------------------------------------------------------------------
// Block-mean downsampling, partial trailing blocks included.

inline Volume block_mean(const Volume& v, int f) {
  const Dims& d = v.dims();
  const Dims od{(d.nx + f - 1) / f, (d.ny + f - 1) / f, (d.nz + f - 1) / f};
  Volume out(od, v.spacing * static_cast<double>(f));
  for (int Z = 0; Z < od.nz; ++Z)
    for (int Y = 0; Y < od.ny; ++Y)
      for (int X = 0; X < od.nx; ++X) {
        double sum = 0.0;
        int n = 0;
        for (int z = Z * f; z < std::min(d.nz, (Z + 1) * f); ++z)
          for (int y = Y * f; y < std::min(d.ny, (Y + 1) * f); ++y)
            for (int x = X * f; x < std::min(d.nx, (X + 1) * f); ++x) {
              sum += v(x, y, z);
              ++n;
            }
        out(X, Y, Z) = static_cast<float>(sum / n);
      }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive Otsu search: recomputes class weights and means from scratch for
// every candidate split and maximizes w0*w1*(mu0-mu1)^2.

inline int otsu_exhaustive(const Histogram& h) {
  int best_k = -1;
  double best = -1.0;
  for (int k = 0; k < Histogram::kBins - 1; ++k) {
    double w0 = 0.0, s0 = 0.0, w1 = 0.0, s1 = 0.0;
    for (int i = 0; i <= k; ++i) {
      w0 += static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
      s0 += static_cast<double>(i) * static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
    }
    for (int i = k + 1; i < Histogram::kBins; ++i) {
      w1 += static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
      s1 += static_cast<double>(i) * static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
    }
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = s0 / w0, mu1 = s1 / w1;
    const double bcv = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (bcv > best) {
      best = bcv;
      best_k = k;
    }
  }
  return best_k;
}

// ---------------------------------------------------------------------------
// Naive 27-neighborhood morphology; out-of-volume neighbors are background.

inline Mask erode27(const Mask& m) {
  const Dims& d = m.dims();
  Mask out(d);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        std::uint8_t acc = 1;
        for (int cz = -1; cz <= 1 && acc; ++cz)
          for (int cy = -1; cy <= 1 && acc; ++cy)
            for (int cx = -1; cx <= 1 && acc; ++cx) {
              const int qx = x + cx, qy = y + cy, qz = z + cz;
              if (!d.contains(qx, qy, qz) || !m(qx, qy, qz)) acc = 0;
            }
        out(x, y, z) = acc;
      }
  return out;
}

inline Mask dilate27(const Mask& m) {
  const Dims& d = m.dims();
  Mask out(d);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        std::uint8_t acc = 0;
        for (int cz = -1; cz <= 1 && !acc; ++cz)
          for (int cy = -1; cy <= 1 && !acc; ++cy)
            for (int cx = -1; cx <= 1 && !acc; ++cx) {
              const int qx = x + cx, qy = y + cy, qz = z + cz;
              if (d.contains(qx, qy, qz) && m(qx, qy, qz)) acc = 1;
            }
        out(x, y, z) = acc;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Test data helpers.

inline Volume random_volume(Dims d, std::uint64_t seed, float lo = 0.0f, float hi = 255.0f) {
  Volume v(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  for (auto& x : v.data()) x = u(rng);
  return v;
}

inline Volume random_u8_volume(Dims d, std::uint64_t seed) {
  Volume v(d);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  for (auto& x : v.data()) x = static_cast<float>(u(rng));
  return v;
}

inline Mask random_mask(Dims d, std::uint64_t seed, double p_true = 0.5) {
  Mask m(d);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(p_true);
  for (auto& x : m.data()) x = b(rng) ? 1 : 0;
  return m;
}

inline SymMat3 random_sym(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v{n(rng), n(rng), n(rng)};
  while (v.norm() < 1e-6) v = Vec3{n(rng), n(rng), n(rng)};
  return v.normalized();
}

}  // namespace oracle
