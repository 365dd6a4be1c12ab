#pragma once

#include <cmath>

namespace afr {

inline constexpr double pi = 3.14159265358979323846;

// -----------------------------------------------------------------------------
// VECTORS
// -----------------------------------------------------------------------------

struct vec3 {
  double x = 0, y = 0, z = 0;

  constexpr vec3& operator+=(const vec3& o) {
    x += o.x, y += o.y, z += o.z;
    return *this;
  }
  constexpr vec3& operator-=(const vec3& o) {
    x -= o.x, y -= o.y, z -= o.z;
    return *this;
  }
  constexpr vec3& operator*=(double s) {
    x *= s, y *= s, z *= s;
    return *this;
  }
  friend constexpr bool operator==(const vec3&, const vec3&) = default;
};

constexpr vec3 operator+(vec3 a, const vec3& b) { return a += b; }
constexpr vec3 operator-(vec3 a, const vec3& b) { return a -= b; }
constexpr vec3 operator-(const vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr vec3 operator*(vec3 a, double s) { return a *= s; }
constexpr vec3 operator*(double s, vec3 a) { return a *= s; }
constexpr vec3 operator/(const vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }

constexpr double dot(const vec3& a, const vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr vec3 cross(const vec3& a, const vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const vec3& a) { return std::sqrt(dot(a, a)); }
inline vec3 normalize(const vec3& a) {
  auto l = length(a);
  return l > 0 ? a / l : a;
}
constexpr vec3 lerp(const vec3& a, const vec3& b, double u) { return a * (1 - u) + b * u; }
constexpr vec3 reflect(const vec3& d, const vec3& n) { return d - n * (2 * dot(d, n)); }
inline bool isfinite(const vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

// -----------------------------------------------------------------------------
// COLORS
// -----------------------------------------------------------------------------

// Linear RGB.
struct rgb {
  double r = 0, g = 0, b = 0;

  constexpr rgb& operator+=(const rgb& o) {
    r += o.r, g += o.g, b += o.b;
    return *this;
  }
  constexpr rgb& operator*=(double s) {
    r *= s, g *= s, b *= s;
    return *this;
  }
  friend constexpr bool operator==(const rgb&, const rgb&) = default;
};

constexpr rgb operator+(rgb a, const rgb& b) { return a += b; }
constexpr rgb operator*(rgb a, double s) { return a *= s; }
constexpr rgb operator*(double s, rgb a) { return a *= s; }
constexpr rgb operator*(const rgb& a, const rgb& b) { return {a.r * b.r, a.g * b.g, a.b * b.b}; }
constexpr rgb operator/(const rgb& a, double s) { return {a.r / s, a.g / s, a.b / s}; }

// Rec. 709 luma weights on linear RGB.
constexpr double luminance(const rgb& c) { return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b; }

// -----------------------------------------------------------------------------
// ROTATIONS
// -----------------------------------------------------------------------------

struct quat {
  double w = 1, x = 0, y = 0, z = 0;
  friend constexpr bool operator==(const quat&, const quat&) = default;
};

inline quat axis_angle(const vec3& axis, double angle) {
  auto a = normalize(axis);
  auto s = std::sin(angle / 2);
  return {std::cos(angle / 2), a.x * s, a.y * s, a.z * s};
}

constexpr quat operator*(const quat& a, const quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}
constexpr quat conjugate(const quat& q) { return {q.w, -q.x, -q.y, -q.z}; }

constexpr vec3 rotate(const quat& q, const vec3& v) {
  // v' = v + 2w(u x v) + 2u x (u x v)
  auto u = vec3{q.x, q.y, q.z};
  auto t = cross(u, v) * 2;
  return v + t * q.w + cross(u, t);
}

inline quat slerp(const quat& a, quat b, double u) {
  auto d = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
  if (d < 0) b = {-b.w, -b.x, -b.y, -b.z}, d = -d;
  double ka, kb;
  if (d > 0.9995) {
    ka = 1 - u, kb = u;
  } else {
    auto theta = std::acos(d);
    auto s     = std::sin(theta);
    ka = std::sin((1 - u) * theta) / s, kb = std::sin(u * theta) / s;
  }
  quat q = {ka * a.w + kb * b.w, ka * a.x + kb * b.x, ka * a.y + kb * b.y, ka * a.z + kb * b.z};
  auto n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Rotation about a pivot followed by a translation: p' = R(p - pivot) + pivot + T.
struct rigid_transform {
  quat rotation;
  vec3 translation;
  vec3 pivot;

  vec3 apply(const vec3& p) const { return rotate(rotation, p - pivot) + pivot + translation; }
  vec3 apply_inverse(const vec3& p) const {
    return rotate(conjugate(rotation), p - pivot - translation) + pivot;
  }
  vec3 apply_direction(const vec3& d) const { return rotate(rotation, d); }
};

}  // namespace afr
