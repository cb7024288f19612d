#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "fiberorient/errors.hpp"
#include "fiberorient/math.hpp"

namespace fiberorient {

/// Eigen pairs of a symmetric 3x3 matrix, sorted by ascending |eigenvalue|,
/// eigenvectors orthonormal and stored in matching order. For positive
/// semi-definite matrices (orientation tensors) this coincides with sorting
/// by value.
struct EigenDecomposition {
  std::array<double, 3> values{};
  std::array<Vec3, 3> vectors{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

  double min_value() const { return std::min({values[0], values[1], values[2]}); }
  double max_value() const { return std::max({values[0], values[1], values[2]}); }
  Vec3 max_value_vector() const {
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(k)]) k = i;
    return vectors[static_cast<std::size_t>(k)];
  }
  Vec3 min_value_vector() const {
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (values[static_cast<std::size_t>(i)] < values[static_cast<std::size_t>(k)]) k = i;
    return vectors[static_cast<std::size_t>(k)];
  }
};

namespace detail {

/// Cyclic Jacobi rotations; robust path for (near-)degenerate spectra.
inline void jacobi_eigen_sym3(const SymMat3& m, std::array<double, 3>& w,
                              std::array<Vec3, 3>& v) {
  double a[3][3] = {{m.xx, m.xy, m.xz}, {m.xy, m.yy, m.yz}, {m.xz, m.yz, m.zz}};
  double q[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off =
        a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
    if (off <= 1e-30 * (diag + off) || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int r = p + 1; r < 3; ++r) {
        if (a[p][r] == 0.0) continue;
        const double theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akr = a[k][r];
          a[k][p] = c * akp - s * akr;
          a[k][r] = s * akp + c * akr;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], ark = a[r][k];
          a[p][k] = c * apk - s * ark;
          a[r][k] = s * apk + c * ark;
        }
        for (int k = 0; k < 3; ++k) {
          const double qkp = q[k][p], qkr = q[k][r];
          q[k][p] = c * qkp - s * qkr;
          q[k][r] = s * qkp + c * qkr;
        }
      }
    }
  }
  for (int i = 0; i < 3; ++i) {
    w[static_cast<std::size_t>(i)] = a[i][i];
    v[static_cast<std::size_t>(i)] = Vec3{q[0][i], q[1][i], q[2][i]}.normalized();
  }
}

/// Eigenvector of (m - lambda*I) from the largest cross product of its rows.
/// Returns a zero vector when all cross products vanish (degenerate case).
inline Vec3 rowcross_eigenvector(const SymMat3& m, double lambda) {
  const Vec3 r0{m.xx - lambda, m.xy, m.xz};
  const Vec3 r1{m.xy, m.yy - lambda, m.yz};
  const Vec3 r2{m.xz, m.yz, m.zz - lambda};
  const Vec3 c01 = r0.cross(r1);
  const Vec3 c02 = r0.cross(r2);
  const Vec3 c12 = r1.cross(r2);
  const double n01 = c01.dot(c01), n02 = c02.dot(c02), n12 = c12.dot(c12);
  if (n01 >= n02 && n01 >= n12) return n01 > 0 ? c01 / std::sqrt(n01) : Vec3{};
  if (n02 >= n12) return n02 > 0 ? c02 / std::sqrt(n02) : Vec3{};
  return n12 > 0 ? c12 / std::sqrt(n12) : Vec3{};
}

inline void sort_by_abs_value(std::array<double, 3>& w, std::array<Vec3, 3>& v) {
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int i, int j) {
    return std::abs(w[static_cast<std::size_t>(i)]) < std::abs(w[static_cast<std::size_t>(j)]);
  });
  const std::array<double, 3> w0 = w;
  const std::array<Vec3, 3> v0 = v;
  for (int i = 0; i < 3; ++i) {
    w[static_cast<std::size_t>(i)] = w0[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    v[static_cast<std::size_t>(i)] = v0[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
  }
}

}  // namespace detail

/// Symmetric 3x3 eigendecomposition. Closed-form (trigonometric) eigenvalues
/// with eigenvectors from row cross products; falls back to Jacobi sweeps when
/// the relative discriminant is below 1e-12 or the closed form loses accuracy.
/// Deterministic for identical inputs.
inline EigenDecomposition eigen_sym3(const SymMat3& m) {
  if (!m.all_finite()) throw ArgumentError("eigen_sym3: non-finite matrix entry");

  EigenDecomposition e;
  const double scale = std::max({std::abs(m.xx), std::abs(m.yy), std::abs(m.zz),
                                 std::abs(m.xy), std::abs(m.xz), std::abs(m.yz)});
  if (scale == 0.0) {
    e.values = {0.0, 0.0, 0.0};
    return e;  // zero matrix, identity basis
  }

  const double p1 = m.xy * m.xy + m.xz * m.xz + m.yz * m.yz;
  std::array<double, 3>& w = e.values;
  std::array<Vec3, 3>& v = e.vectors;

  if (p1 <= 1e-28 * scale * scale) {
    // Effectively diagonal.
    w = {m.xx, m.yy, m.zz};
    v = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    detail::sort_by_abs_value(w, v);
    return e;
  }

  const double q = m.trace() / 3.0;
  const double p2 = (m.xx - q) * (m.xx - q) + (m.yy - q) * (m.yy - q) +
                    (m.zz - q) * (m.zz - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);

  bool ok = p > 1e-12 * scale;  // relative discriminant guard
  if (ok) {
    // det((A - qI)/p) / 2, expanded over the shifted entries.
    const double bxx = (m.xx - q) / p, byy = (m.yy - q) / p, bzz = (m.zz - q) / p;
    const double bxy = m.xy / p, bxz = m.xz / p, byz = m.yz / p;
    double r = 0.5 * (bxx * (byy * bzz - byz * byz) - bxy * (bxy * bzz - byz * bxz) +
                      bxz * (bxy * byz - byy * bxz));
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;

    const double lam_hi = q + 2.0 * p * std::cos(phi);
    const double lam_lo = q + 2.0 * p * std::cos(phi + 2.0 * 3.14159265358979323846 / 3.0);
    const double lam_mid = 3.0 * q - lam_hi - lam_lo;

    Vec3 v_hi = detail::rowcross_eigenvector(m, lam_hi);
    Vec3 v_lo = detail::rowcross_eigenvector(m, lam_lo);
    if (v_hi.dot(v_hi) == 0.0 || v_lo.dot(v_lo) == 0.0 || std::abs(v_hi.dot(v_lo)) > 1e-4) {
      ok = false;
    } else {
      Vec3 v_mid = v_hi.cross(v_lo).normalized();
      v_lo = v_mid.cross(v_hi);  // exact orthonormal triple
      w = {lam_lo, lam_mid, lam_hi};
      v = {v_lo, v_mid, v_hi};

      const double tol = 1e-7 * m.frobenius_norm();
      for (int i = 0; i < 3 && ok; ++i) {
        const Vec3 res = m.apply(v[static_cast<std::size_t>(i)]) -
                         v[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
        if (res.norm() > tol) ok = false;
      }
    }
  }

  if (!ok) detail::jacobi_eigen_sym3(m, w, v);
  detail::sort_by_abs_value(w, v);
  return e;
}

}  // namespace fiberorient
