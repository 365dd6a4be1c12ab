#include <afr/scene.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

namespace afr {

// -----------------------------------------------------------------------------
// CAMERA
// -----------------------------------------------------------------------------

camera_pose make_pose(const vec3& eye, const vec3& look_at, const vec3& up, double fov) {
  auto forward = normalize(look_at - eye);
  auto right   = normalize(cross(forward, up));
  return {eye, right, cross(right, forward), forward, fov};
}

camera_pose evaluate_camera(const camera_path& path, double t) {
  const auto& keys = path.keyframes;
  if (keys.empty()) throw config_error("camera path has no keyframes");
  auto pose_of = [](const camera_keyframe& k) {
    return make_pose(k.eye, k.look_at, k.up, k.fov);
  };
  if (t <= keys.front().time) return pose_of(keys.front());
  if (t >= keys.back().time) return pose_of(keys.back());
  auto next = std::upper_bound(keys.begin(), keys.end(), t,
      [](double v, const camera_keyframe& k) { return v < k.time; });
  const auto& b = *next;
  const auto& a = *(next - 1);
  auto u = (t - a.time) / (b.time - a.time);
  return make_pose(lerp(a.eye, b.eye, u), lerp(a.look_at, b.look_at, u), lerp(a.up, b.up, u),
      a.fov * (1 - u) + b.fov * u);
}

ray camera_ray(const camera_pose& pose, image_size size, double x, double y) {
  auto tan_half = std::tan(pose.fov / 2);
  auto aspect   = double(size.width) / size.height;
  auto u        = (2 * x / size.width - 1) * tan_half * aspect;
  auto v        = (1 - 2 * y / size.height) * tan_half;
  return {pose.eye, normalize(pose.forward + pose.right * u + pose.up * v)};
}

std::optional<projection> project(const camera_pose& pose, image_size size, const vec3& p) {
  auto d     = p - pose.eye;
  auto depth = dot(d, pose.forward);
  if (depth <= 1e-9) return std::nullopt;
  auto tan_half = std::tan(pose.fov / 2);
  auto aspect   = double(size.width) / size.height;
  auto u        = dot(d, pose.right) / depth;
  auto v        = dot(d, pose.up) / depth;
  auto x        = (u / (tan_half * aspect) + 1) * size.width / 2;
  auto y        = (1 - v / tan_half) * size.height / 2;
  return projection{x, y, depth, x >= 0 && x < size.width && y >= 0 && y < size.height};
}

// -----------------------------------------------------------------------------
// ANIMATION
// -----------------------------------------------------------------------------

rigid_transform animation_track::evaluate(double t) const {
  if (keyframes.empty()) return {{}, {}, pivot};
  auto at = [this](const animation_keyframe& k) {
    return rigid_transform{k.rotation, k.translation, pivot};
  };
  if (t <= keyframes.front().time) return at(keyframes.front());
  if (t >= keyframes.back().time) return at(keyframes.back());
  auto next = std::upper_bound(keyframes.begin(), keyframes.end(), t,
      [](double v, const animation_keyframe& k) { return v < k.time; });
  const auto& b = *next;
  const auto& a = *(next - 1);
  auto u = (t - a.time) / (b.time - a.time);
  return {slerp(a.rotation, b.rotation, u), lerp(a.translation, b.translation, u), pivot};
}

static primitive transformed(const primitive& p, const rigid_transform& m) {
  auto out = p;
  if (auto s = std::get_if<sphere>(&out.shape)) {
    s->center = m.apply(s->center);
  } else if (auto tr = std::get_if<triangle>(&out.shape)) {
    tr->v0 = m.apply(tr->v0), tr->v1 = m.apply(tr->v1), tr->v2 = m.apply(tr->v2);
  }
  return out;
}

// -----------------------------------------------------------------------------
// BVH
// -----------------------------------------------------------------------------

static void bounds_of(const primitive& p, vec3& lo, vec3& hi) {
  if (auto s = std::get_if<sphere>(&p.shape)) {
    auto r = vec3{s->radius, s->radius, s->radius};
    lo = s->center - r, hi = s->center + r;
  } else {
    const auto& t = std::get<triangle>(p.shape);
    lo = {std::min({t.v0.x, t.v1.x, t.v2.x}), std::min({t.v0.y, t.v1.y, t.v2.y}),
        std::min({t.v0.z, t.v1.z, t.v2.z})};
    hi = {std::max({t.v0.x, t.v1.x, t.v2.x}), std::max({t.v0.y, t.v1.y, t.v2.y}),
        std::max({t.v0.z, t.v1.z, t.v2.z})};
  }
}

static double axis_of(const vec3& v, int axis) { return axis == 0 ? v.x : axis == 1 ? v.y : v.z; }

static int build_node(bvh& tree, const std::vector<vec3>& lo, const std::vector<vec3>& hi,
    int first, int count) {
  auto index = int(tree.nodes.size());
  tree.nodes.push_back({});
  auto box_lo = vec3{1e300, 1e300, 1e300}, box_hi = vec3{-1e300, -1e300, -1e300};
  auto cen_lo = box_lo, cen_hi = box_hi;
  for (auto i = first; i < first + count; i++) {
    auto id = tree.order[i];
    box_lo  = {std::min(box_lo.x, lo[id].x), std::min(box_lo.y, lo[id].y), std::min(box_lo.z, lo[id].z)};
    box_hi  = {std::max(box_hi.x, hi[id].x), std::max(box_hi.y, hi[id].y), std::max(box_hi.z, hi[id].z)};
    auto c  = (lo[id] + hi[id]) * 0.5;
    cen_lo  = {std::min(cen_lo.x, c.x), std::min(cen_lo.y, c.y), std::min(cen_lo.z, c.z)};
    cen_hi  = {std::max(cen_hi.x, c.x), std::max(cen_hi.y, c.y), std::max(cen_hi.z, c.z)};
  }
  tree.nodes[index].lo = box_lo;
  tree.nodes[index].hi = box_hi;
  if (count <= 4) {
    tree.nodes[index].first = first;
    tree.nodes[index].count = count;
    return index;
  }
  auto extent = cen_hi - cen_lo;
  auto axis   = extent.x >= extent.y && extent.x >= extent.z ? 0 : extent.y >= extent.z ? 1 : 2;
  auto mid    = first + count / 2;
  std::nth_element(tree.order.begin() + first, tree.order.begin() + mid,
      tree.order.begin() + first + count, [&](int a, int b) {
        return axis_of(lo[a] + hi[a], axis) < axis_of(lo[b] + hi[b], axis);
      });
  build_node(tree, lo, hi, first, mid - first);
  auto right = build_node(tree, lo, hi, mid, first + count - mid);
  tree.nodes[index].right = right;
  return index;
}

static bool hit_box(const bvh_node& n, const ray& r, const vec3& inv, double tmin, double tmax) {
  for (auto axis = 0; axis < 3; axis++) {
    auto o  = axis_of(r.origin, axis);
    auto t0 = (axis_of(n.lo, axis) - o) * axis_of(inv, axis);
    auto t1 = (axis_of(n.hi, axis) - o) * axis_of(inv, axis);
    if (t0 > t1) std::swap(t0, t1);
    tmin = t0 > tmin ? t0 : tmin;
    tmax = t1 < tmax ? t1 : tmax;
    if (tmax < tmin) return false;
  }
  return true;
}

// -----------------------------------------------------------------------------
// SCENE SETUP
// -----------------------------------------------------------------------------

static bool valid_color(const rgb& c) {
  return c.r >= 0 && c.g >= 0 && c.b >= 0 && std::isfinite(c.r) && std::isfinite(c.g) &&
         std::isfinite(c.b);
}

void finalize_scene(scene& s) {
  for (auto& m : s.materials) {
    if (!valid_color(m.diffuse)) throw config_error("material color channels must be >= 0");
    if (m.reflectivity < 0 || m.reflectivity > 1)
      throw config_error("material reflectivity must lie in [0, 1]");
    if (m.ambient < 0 || m.specular < 0) throw config_error("material coefficients must be >= 0");
  }
  for (auto& p : s.primitives) {
    if (p.material < 0 || p.material >= int(s.materials.size()))
      throw config_error("primitive references a missing material");
    if (auto sp = std::get_if<sphere>(&p.shape); sp && !(sp->radius > 0))
      throw config_error("sphere radius must be positive");
  }
  for (auto& l : s.lights)
    if (!valid_color(l.intensity)) throw config_error("light intensity must be >= 0");
  if (!valid_color(s.background)) throw config_error("background must be >= 0");

  s.track_of.assign(s.primitives.size(), -1);
  for (auto i = 0; i < int(s.animations.size()); i++) {
    const auto& track = s.animations[i];
    if (track.target < 0 || track.target >= int(s.primitives.size()))
      throw config_error("animation targets a missing primitive");
    if (s.track_of[track.target] >= 0)
      throw config_error("primitive has more than one animation track");
    for (auto k = 1; k < int(track.keyframes.size()); k++)
      if (!(track.keyframes[k].time > track.keyframes[k - 1].time))
        throw config_error("animation keyframe times must be strictly increasing");
    s.track_of[track.target] = i;
  }
  for (auto k = 0; k < int(s.camera.keyframes.size()); k++) {
    const auto& key = s.camera.keyframes[k];
    if (!(key.fov > 0 && key.fov < pi)) throw config_error("camera fov must lie in (0, pi)");
    if (key.eye == key.look_at) throw config_error("camera eye equals look-at");
    if (k > 0 && !(key.time > s.camera.keyframes[k - 1].time))
      throw config_error("camera keyframe times must be strictly increasing");
  }

  s.dynamic.clear();
  s.accel = {};
  std::vector<vec3> lo(s.primitives.size()), hi(s.primitives.size());
  for (auto i = 0; i < int(s.primitives.size()); i++) {
    if (s.track_of[i] >= 0) {
      s.dynamic.push_back(i);
    } else {
      s.accel.order.push_back(i);
      bounds_of(s.primitives[i], lo[i], hi[i]);
    }
  }
  if (!s.accel.order.empty()) build_node(s.accel, lo, hi, 0, int(s.accel.order.size()));
}

scene freeze_scene(const scene& s) {
  auto frozen = s;
  for (auto& track : frozen.animations) {
    auto m = track.evaluate(0);
    track.keyframes = {{0, m.rotation, m.translation}};
  }
  if (!frozen.camera.keyframes.empty()) {
    auto first = frozen.camera.keyframes.front();
    first.time = 0;
    frozen.camera.keyframes = {first};
  }
  finalize_scene(frozen);
  return frozen;
}

// -----------------------------------------------------------------------------
// RAY TRACING
// -----------------------------------------------------------------------------

scene_instant::scene_instant(const scene& s, double t) : scene_(&s), time_(t) {
  posed_.reserve(s.dynamic.size());
  motion_.reserve(s.dynamic.size());
  for (auto id : s.dynamic) {
    auto m = s.animations[s.track_of[id]].evaluate(t);
    motion_.push_back(m);
    posed_.push_back(transformed(s.primitives[id], m));
  }
}

static bool intersect_shape(const primitive& p, const ray& r, double tmin, double tmax,
    double& distance, vec3& normal) {
  if (auto s = std::get_if<sphere>(&p.shape)) {
    auto oc   = r.origin - s->center;
    auto b    = dot(oc, r.direction);
    auto c    = dot(oc, oc) - s->radius * s->radius;
    auto disc = b * b - c;
    if (disc < 0) return false;
    auto sq = std::sqrt(disc);
    auto d  = -b - sq;
    if (d <= tmin || d >= tmax) {
      d = -b + sq;
      if (d <= tmin || d >= tmax) return false;
    }
    distance = d;
    normal   = (r.origin + r.direction * d - s->center) / s->radius;
    return true;
  }
  // Moller-Trumbore
  const auto& t  = std::get<triangle>(p.shape);
  auto        e1 = t.v1 - t.v0, e2 = t.v2 - t.v0;
  auto        pv = cross(r.direction, e2);
  auto        det = dot(e1, pv);
  if (std::abs(det) < 1e-12) return false;
  auto inv = 1 / det;
  auto tv  = r.origin - t.v0;
  auto u   = dot(tv, pv) * inv;
  if (u < 0 || u > 1) return false;
  auto qv = cross(tv, e1);
  auto v  = dot(r.direction, qv) * inv;
  if (v < 0 || u + v > 1) return false;
  auto d = dot(e2, qv) * inv;
  if (d <= tmin || d >= tmax) return false;
  distance = d;
  normal   = normalize(cross(e1, e2));
  return true;
}

bool scene_instant::intersect_primitive(
    const ray& r, int id, double tmin, double tmax, hit_record& hit) const {
  double distance;
  vec3   normal;
  if (!intersect_shape(scene_->primitives[id], r, tmin, tmax, distance, normal)) return false;
  hit = {distance, id, normal};
  return true;
}

bool scene_instant::intersect(
    const ray& r, double tmin, double tmax, hit_record& hit, bool any) const {
  auto found = false;
  const auto& tree = scene_->accel;
  if (!tree.nodes.empty()) {
    auto inv   = vec3{1 / r.direction.x, 1 / r.direction.y, 1 / r.direction.z};
    int  stack[64];
    auto top   = 0;
    stack[top++] = 0;
    while (top > 0) {
      const auto& node = tree.nodes[stack[--top]];
      if (!hit_box(node, r, inv, tmin, tmax)) continue;
      if (node.count > 0) {
        for (auto i = node.first; i < node.first + node.count; i++) {
          if (intersect_primitive(r, tree.order[i], tmin, tmax, hit)) {
            if (any) return true;
            tmax  = hit.distance;
            found = true;
          }
        }
      } else {
        auto self = int(&node - tree.nodes.data());
        stack[top++] = node.right;
        stack[top++] = self + 1;
      }
    }
  }
  for (auto k = 0; k < int(posed_.size()); k++) {
    double distance;
    vec3   normal;
    if (intersect_shape(posed_[k], r, tmin, tmax, distance, normal)) {
      if (any) return true;
      hit   = {distance, scene_->dynamic[k], normal};
      tmax  = distance;
      found = true;
    }
  }
  return found;
}

rgb scene_instant::shade(const ray& r, int depth, hit_record* first) const {
  hit_record hit;
  if (!intersect(r, 0, std::numeric_limits<double>::infinity(), hit, false)) {
    if (first) first->primitive = -1;
    return scene_->background;
  }
  if (first) *first = hit;
  const auto& mat = scene_->materials[scene_->primitives[hit.primitive].material];
  auto        p   = r.origin + r.direction * hit.distance;
  auto        n   = dot(hit.normal, r.direction) > 0 ? -hit.normal : hit.normal;
  auto        v   = -r.direction;

  auto local = mat.diffuse * mat.ambient;
  for (const auto& light : scene_->lights) {
    auto to_light = light.position - p;
    auto dist     = length(to_light);
    auto l        = to_light / dist;
    auto ndotl    = dot(n, l);
    if (ndotl <= 0) continue;
    hit_record blocker;
    if (intersect({p + n * ray_epsilon, l}, 0, dist - ray_epsilon, blocker, true)) continue;
    local += mat.diffuse * light.intensity * ndotl;
    if (mat.specular > 0) {
      auto rdotv = dot(reflect(-l, n), v);
      if (rdotv > 0) local += light.intensity * (mat.specular * std::pow(rdotv, mat.shininess));
    }
  }
  if (mat.reflectivity > 0 && depth < max_reflect_depth) {
    auto mirrored = shade({p + n * ray_epsilon, reflect(r.direction, n)}, depth + 1, nullptr);
    return local * (1 - mat.reflectivity) + mirrored * mat.reflectivity;
  }
  return local;
}

vec3 scene_instant::velocity_at(int id, const vec3& p) const {
  auto k = scene_->track_of[id];
  if (k < 0) return {};
  const auto& track = scene_->animations[k];
  auto slot = int(std::find(scene_->dynamic.begin(), scene_->dynamic.end(), id) -
                  scene_->dynamic.begin());
  auto rest   = motion_[slot].apply_inverse(p);
  auto before = track.evaluate(time_ - velocity_delta).apply(rest);
  auto after  = track.evaluate(time_ + velocity_delta).apply(rest);
  return (after - before) / (2 * velocity_delta);
}

trace_result scene_instant::trace(const ray& r) const {
  hit_record first;
  trace_result result;
  result.color = shade(r, 0, &first);
  if (first.primitive < 0) {
    result.world_point = r.origin + r.direction * far_distance;
    return result;
  }
  result.hit         = true;
  result.primitive   = first.primitive;
  result.world_point = r.origin + r.direction * first.distance;
  result.velocity    = velocity_at(first.primitive, result.world_point);
  return result;
}

bool scene_instant::visible(const vec3& point, const vec3& eye) const {
  auto d    = point - eye;
  auto dist = length(d);
  if (dist <= ray_epsilon) return true;
  hit_record hit;
  return !intersect({eye, d / dist}, 0, dist - ray_epsilon, hit, true);
}

trace_result trace(const scene& s, const camera_pose& pose, image_size size, double x,
    double y, double t) {
  return scene_instant(s, t).trace_pixel(pose, size, x, y);
}

bool occlusion_query(const scene& s, const vec3& point, const vec3& eye, double t) {
  return scene_instant(s, t).visible(point, eye);
}

}  // namespace afr
