#pragma once

#include <afr/scene.hpp>

#include <cmath>

namespace afr::testing {

inline material diffuse_material(rgb color) {
  material m;
  m.diffuse = color;
  return m;
}

inline primitive sphere_primitive(vec3 center, double radius, int material = 0) {
  return {sphere{center, radius}, material};
}

inline camera_path fixed_camera(vec3 eye, vec3 look_at, double fov = pi / 3) {
  camera_path path;
  path.keyframes.push_back({0, eye, look_at, {0, 1, 0}, fov});
  return path;
}

// Empty scene looking down -z from the origin.
inline scene empty_scene(rgb background = {0.1, 0.2, 0.3}) {
  scene s;
  s.background = background;
  s.materials.push_back(diffuse_material({0.8, 0.8, 0.8}));
  s.camera = fixed_camera({0, 0, 0}, {0, 0, -1});
  finalize_scene(s);
  return s;
}

inline double relative_error(double a, double b) {
  auto scale = std::max(std::abs(a), std::abs(b));
  return scale > 0 ? std::abs(a - b) / scale : 0;
}

// Independent pinhole projection: image y grows downwards, vertical fov.
inline bool project_oracle(const vec3& eye, const vec3& forward, const vec3& right,
    const vec3& up, double fov, image_size size, const vec3& p, double& x, double& y) {
  auto d     = p - eye;
  auto depth = d.x * forward.x + d.y * forward.y + d.z * forward.z;
  if (depth <= 0) return false;
  auto half_h = std::tan(fov / 2);
  auto half_w = half_h * size.width / size.height;
  auto u      = (d.x * right.x + d.y * right.y + d.z * right.z) / depth;
  auto v      = (d.x * up.x + d.y * up.y + d.z * up.z) / depth;
  x = (u / half_w + 1) / 2 * size.width;
  y = (1 - v / half_h) / 2 * size.height;
  return true;
}

}  // namespace afr::testing
