#pragma once

#include <afr/math.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace afr {

// Raised for invalid scenes, camera paths and run configurations.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct image_size {
  int width  = 0;
  int height = 0;
  int pixels() const { return width * height; }
  friend bool operator==(const image_size&, const image_size&) = default;
};

// -----------------------------------------------------------------------------
// CAMERA
// -----------------------------------------------------------------------------

struct camera_keyframe {
  double time = 0;
  vec3   eye;
  vec3   look_at = {0, 0, -1};
  vec3   up      = {0, 1, 0};
  double fov     = pi / 3;  // vertical, radians
};

struct camera_path {
  std::vector<camera_keyframe> keyframes;
};

// Eye position and orthonormal basis. Image y grows downwards.
struct camera_pose {
  vec3   eye;
  vec3   right   = {1, 0, 0};
  vec3   up      = {0, 1, 0};
  vec3   forward = {0, 0, -1};
  double fov     = pi / 3;
};

camera_pose make_pose(const vec3& eye, const vec3& look_at, const vec3& up, double fov);

// Piecewise-linear interpolation of eye, look-at, up and fov; clamps outside the key range.
camera_pose evaluate_camera(const camera_path& path, double t);

struct ray {
  vec3 origin;
  vec3 direction;  // unit length
};

// Primary ray through the continuous image position (x, y).
ray camera_ray(const camera_pose& pose, image_size size, double x, double y);

struct projection {
  double x = 0, y = 0;
  double depth   = 0;
  bool on_screen = false;
};

// Pinhole projection; empty for points on or behind the eye plane.
std::optional<projection> project(const camera_pose& pose, image_size size, const vec3& p);

// -----------------------------------------------------------------------------
// SCENE
// -----------------------------------------------------------------------------

struct sphere {
  vec3   center;
  double radius = 1;
};

struct triangle {
  vec3 v0, v1, v2;
};

struct primitive {
  std::variant<sphere, triangle> shape;
  int material = 0;
};

struct material {
  rgb    diffuse     = {0.8, 0.8, 0.8};
  double ambient     = 0;  // fraction of diffuse returned regardless of lighting
  double specular    = 0;
  double shininess   = 32;
  double reflectivity = 0;
};

struct point_light {
  vec3 position;
  rgb  intensity = {1, 1, 1};
};

struct animation_keyframe {
  double time = 0;
  quat   rotation;
  vec3   translation;
};

// Rigid motion of one primitive. Translation is interpolated linearly and rotation
// spherically; evaluation clamps outside the key range.
struct animation_track {
  int target = 0;
  vec3 pivot;
  std::vector<animation_keyframe> keyframes;

  rigid_transform evaluate(double t) const;
};

struct bvh_node {
  vec3 lo, hi;
  int  first = 0, count = 0;  // leaf range into bvh::order when count > 0
  int  right = -1;            // second child of an interior node; first child is next
};

// Bounding volume hierarchy over the primitives that never move.
struct bvh {
  std::vector<bvh_node> nodes;
  std::vector<int>      order;
};

struct scene {
  std::vector<primitive>       primitives;
  std::vector<material>        materials;
  std::vector<point_light>     lights;
  rgb                          background;
  std::vector<animation_track> animations;
  camera_path                  camera;

  // Derived by finalize_scene().
  std::vector<int> track_of;  // primitive -> animation index or -1
  std::vector<int> dynamic;   // animated primitive ids
  bvh              accel;
};

// Validates invariants and builds the derived lookup tables. Throws config_error.
void finalize_scene(scene& s);

// Scene with all animation tracks and the camera path frozen at their state at t = 0.
scene freeze_scene(const scene& s);

inline constexpr double ray_epsilon      = 1e-4;
inline constexpr double far_distance     = 1000;
inline constexpr double velocity_delta   = 1e-3;
inline constexpr int    max_reflect_depth = 2;

struct trace_result {
  rgb  color;
  bool hit = false;
  vec3 world_point;
  int  primitive = -1;
  vec3 velocity;
};

// Geometry of a scene posed at one instant. Cheap to build; traces against it share
// the animated transforms.
class scene_instant {
 public:
  scene_instant(const scene& s, double t);

  double time() const { return time_; }
  const scene& source() const { return *scene_; }

  trace_result trace(const ray& r) const;
  trace_result trace_pixel(const camera_pose& pose, image_size size, double x, double y) const {
    return trace(camera_ray(pose, size, x, y));
  }
  // True iff the open segment from the eye to the point (shortened by ray_epsilon)
  // crosses no primitive.
  bool visible(const vec3& point, const vec3& eye) const;

 private:
  struct hit_record {
    double distance = 0;
    int    primitive = -1;
    vec3   normal;
  };

  bool intersect(const ray& r, double tmin, double tmax, hit_record& hit, bool any) const;
  bool intersect_primitive(const ray& r, int id, double tmin, double tmax, hit_record& hit) const;
  rgb  shade(const ray& r, int depth, hit_record* first) const;
  vec3 velocity_at(int id, const vec3& p) const;

  const scene* scene_;
  double       time_;
  std::vector<primitive>       posed_;   // animated primitives, indexed like scene_->dynamic
  std::vector<rigid_transform> motion_;  // their transforms at time_
};

trace_result trace(const scene& s, const camera_pose& pose, image_size size, double x,
    double y, double t);
bool occlusion_query(const scene& s, const vec3& point, const vec3& eye, double t);

// -----------------------------------------------------------------------------
// SCENE FILES
// -----------------------------------------------------------------------------

// JSON document with keys primitives, materials, lights, background, animations and
// camera_path. Unknown keys are rejected with config_error.
scene load_scene(const std::filesystem::path& path);
scene parse_scene(const std::string& text);
std::string format_scene(const scene& s);
void save_scene(const std::filesystem::path& path, const scene& s);

// -----------------------------------------------------------------------------
// BUNDLED SCENES
// -----------------------------------------------------------------------------

// Ids: "bart-like", "toycar-like", "interactive-like", "static".
std::vector<std::string> bundled_animations();
scene bundled_scene(const std::string& id);

}  // namespace afr
