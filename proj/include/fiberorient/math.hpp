#pragma once

#include <array>
#include <cmath>

namespace fiberorient {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0.0 ? *this / n : Vec3{};
  }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Symmetric 3x3 matrix, six stored components. Used for the Hessian, the
/// structure tensor, and the second-order orientation tensor.
struct SymMat3 {
  double xx = 0.0, yy = 0.0, zz = 0.0;
  double xy = 0.0, xz = 0.0, yz = 0.0;

  static constexpr SymMat3 identity() { return {1.0, 1.0, 1.0, 0.0, 0.0, 0.0}; }

  /// u u^T for a direction u; has unit trace when u is a unit vector.
  static constexpr SymMat3 outer(const Vec3& u) {
    return {u.x * u.x, u.y * u.y, u.z * u.z, u.x * u.y, u.x * u.z, u.y * u.z};
  }

  static constexpr SymMat3 from_array(const std::array<float, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  constexpr std::array<float, 6> to_array() const {
    return {static_cast<float>(xx), static_cast<float>(yy), static_cast<float>(zz),
            static_cast<float>(xy), static_cast<float>(xz), static_cast<float>(yz)};
  }

  constexpr double trace() const { return xx + yy + zz; }

  double frobenius_norm() const {
    return std::sqrt(xx * xx + yy * yy + zz * zz + 2.0 * (xy * xy + xz * xz + yz * yz));
  }

  constexpr Vec3 apply(const Vec3& v) const {
    return {xx * v.x + xy * v.y + xz * v.z,
            xy * v.x + yy * v.y + yz * v.z,
            xz * v.x + yz * v.y + zz * v.z};
  }

  constexpr Vec3 row(int i) const {
    return i == 0 ? Vec3{xx, xy, xz} : i == 1 ? Vec3{xy, yy, yz} : Vec3{xz, yz, zz};
  }

  SymMat3& operator+=(const SymMat3& o) {
    xx += o.xx;
    yy += o.yy;
    zz += o.zz;
    xy += o.xy;
    xz += o.xz;
    yz += o.yz;
    return *this;
  }
  constexpr SymMat3 operator+(const SymMat3& o) const {
    return {xx + o.xx, yy + o.yy, zz + o.zz, xy + o.xy, xz + o.xz, yz + o.yz};
  }
  constexpr SymMat3 operator-(const SymMat3& o) const {
    return {xx - o.xx, yy - o.yy, zz - o.zz, xy - o.xy, xz - o.xz, yz - o.yz};
  }
  constexpr SymMat3 operator*(double s) const {
    return {xx * s, yy * s, zz * s, xy * s, xz * s, yz * s};
  }

  bool all_finite() const {
    return std::isfinite(xx) && std::isfinite(yy) && std::isfinite(zz) &&
           std::isfinite(xy) && std::isfinite(xz) && std::isfinite(yz);
  }
};

/// Canonical representative of an orientation axis on the upper half-sphere:
/// u_z > 0, or (u_z = 0 and u_y > 0), or (u_z = u_y = 0 and u_x > 0).
/// u and -u map to the same representative; the result is a unit vector.
inline Vec3 canonical_direction(Vec3 v) {
  v = v.normalized();
  if (v.z < 0.0 || (v.z == 0.0 && (v.y < 0.0 || (v.y == 0.0 && v.x < 0.0)))) {
    v = -v;
  }
  // Clear negative zeros so equal axes serialize identically.
  if (v.x == 0.0) v.x = 0.0;
  if (v.y == 0.0) v.y = 0.0;
  if (v.z == 0.0) v.z = 0.0;
  return v;
}

inline bool is_canonical_direction(const Vec3& v, double eps = 1e-6) {
  if (std::abs(v.norm() - 1.0) > eps) return false;
  if (v.z > 0.0) return true;
  if (v.z == 0.0 && v.y > 0.0) return true;
  return v.z == 0.0 && v.y == 0.0 && v.x > 0.0;
}

/// Angle between two axes (orientation vectors, sign-insensitive), radians.
inline double axis_angle(const Vec3& a, const Vec3& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(c > 1.0 ? 1.0 : c);
}

inline constexpr double deg_to_rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }

}  // namespace fiberorient
