#include <afr/input.hpp>
#include <afr/scene.hpp>

namespace afr {

namespace {

struct builder {
  scene s;

  int add_material(const material& m) {
    s.materials.push_back(m);
    return int(s.materials.size()) - 1;
  }
  int add_sphere(const vec3& c, double r, int mat) {
    s.primitives.push_back({sphere{c, r}, mat});
    return int(s.primitives.size()) - 1;
  }
  int add_triangle(const vec3& a, const vec3& b, const vec3& c, int mat) {
    s.primitives.push_back({triangle{a, b, c}, mat});
    return int(s.primitives.size()) - 1;
  }
  std::vector<int> add_quad(const vec3& a, const vec3& b, const vec3& c, const vec3& d, int mat) {
    return {add_triangle(a, b, c, mat), add_triangle(a, c, d, mat)};
  }
  // Axis-aligned box resting on its min corner.
  std::vector<int> add_box(const vec3& lo, const vec3& hi, int mat) {
    vec3 p[8] = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
        {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    int faces[6][4] = {{0, 1, 2, 3}, {5, 4, 7, 6}, {4, 0, 3, 7}, {1, 5, 6, 2}, {3, 2, 6, 7},
        {4, 5, 1, 0}};
    std::vector<int> ids;
    for (auto& f : faces) {
      auto q = add_quad(p[f[0]], p[f[1]], p[f[2]], p[f[3]], mat);
      ids.insert(ids.end(), q.begin(), q.end());
    }
    return ids;
  }
  void animate(const std::vector<int>& ids, const vec3& pivot,
      const std::vector<animation_keyframe>& keys) {
    for (auto id : ids) s.animations.push_back({id, pivot, keys});
  }
};

// Desk-scale room: geometric checker floor, striped back wall, a few solids.
builder make_room() {
  builder b;
  b.s.background = {0.35, 0.5, 0.75};
  b.s.lights     = {{{3, 5, 2}, {0.75, 0.75, 0.72}}, {{-4, 4, -2}, {0.35, 0.35, 0.4}}};

  auto light_tile = b.add_material({{0.85, 0.85, 0.8}, 0.15, 0.1, 16, 0});
  auto dark_tile  = b.add_material({{0.12, 0.12, 0.15}, 0.15, 0.1, 16, 0.15});
  for (auto i = 0; i < 10; i++) {
    for (auto k = 0; k < 10; k++) {
      auto x0 = -5.0 + i, z0 = -9.0 + k;
      b.add_quad({x0, 0, z0}, {x0, 0, z0 + 1}, {x0 + 1, 0, z0 + 1}, {x0 + 1, 0, z0},
          (i + k) % 2 ? dark_tile : light_tile);
    }
  }

  auto wall = b.add_material({{0.7, 0.65, 0.55}, 0.2, 0, 8, 0});
  auto trim = b.add_material({{0.55, 0.15, 0.1}, 0.2, 0.05, 8, 0});
  b.add_quad({-5, 0, -9}, {5, 0, -9}, {5, 4, -9}, {-5, 4, -9}, wall);
  for (auto i = 0; i < 5; i++) {
    auto x0 = -4.5 + 2.0 * i;
    b.add_quad({x0, 0.5, -8.99}, {x0 + 0.5, 0.5, -8.99}, {x0 + 0.5, 3.5, -8.99},
        {x0, 3.5, -8.99}, trim);
  }

  auto red    = b.add_material({{0.8, 0.12, 0.1}, 0.1, 0.5, 40, 0});
  auto mirror = b.add_material({{0.25, 0.25, 0.25}, 0.05, 0.8, 80, 0.6});
  auto blue   = b.add_material({{0.15, 0.25, 0.7}, 0.1, 0.2, 20, 0});
  b.add_sphere({-1.6, 0.7, -3.8}, 0.7, red);
  b.add_sphere({1.6, 0.6, -4.8}, 0.6, mirror);
  b.add_box({-0.2, 0, -6.8}, {0.8, 1.0, -5.8}, blue);
  return b;
}

camera_keyframe key(double t, const vec3& eye, const vec3& at, double fov_deg = 50) {
  return {t, eye, at, {0, 1, 0}, fov_deg * pi / 180};
}

scene toycar_like() {
  auto b = make_room();
  auto body  = b.add_material({{0.9, 0.75, 0.1}, 0.1, 0.6, 60, 0.1});
  auto cabin = b.add_material({{0.2, 0.6, 0.25}, 0.1, 0.3, 30, 0});
  auto tyre  = b.add_material({{0.05, 0.05, 0.05}, 0.1, 0.2, 10, 0});
  std::vector<int> car;
  auto add = [&](std::vector<int> ids) { car.insert(car.end(), ids.begin(), ids.end()); };
  add(b.add_box({-0.6, 0.18, -2.6}, {0.6, 0.48, -2.0}, body));
  add(b.add_box({-0.3, 0.48, -2.55}, {0.3, 0.75, -2.05}, cabin));
  for (auto x : {-0.38, 0.38})
    for (auto z : {-2.6, -2.0}) car.push_back(b.add_sphere({x, 0.18, z}, 0.18, tyre));
  b.animate(car, {0, 0, -2.3},
      {{0, {}, {-2.6, 0, 0}}, {4.5, {}, {0.4, 0, 0}}, {5.5, axis_angle({0, 1, 0}, 0.6), {1.0, 0, -0.3}},
          {10, axis_angle({0, 1, 0}, 0.6), {2.6, 0, -1.2}}});
  b.s.camera.keyframes = {key(0, {0, 1.5, 2.5}, {0, 0.4, -3.5})};
  finalize_scene(b.s);
  return b.s;
}

scene bart_like() {
  auto b = make_room();
  auto gold = b.add_material({{0.85, 0.6, 0.15}, 0.1, 0.7, 60, 0.2});
  auto ball = b.add_sphere({0.2, 0.45, -2.6}, 0.45, gold);
  b.s.animations.push_back({ball, {},
      {{0, {}, {}}, {1.25, {}, {0, 0.8, 0}}, {2.5, {}, {}}, {3.75, {}, {0, 0.8, 0}}, {5, {}, {}},
          {6.25, {}, {0, 0.8, 0}}, {7.5, {}, {}}, {8.75, {}, {0, 0.8, 0}}, {10, {}, {}}}});
  // Posts and solids at several depths so the flight produces parallax occlusion.
  auto stone = b.add_material({{0.55, 0.5, 0.45}, 0.15, 0.2, 20, 0});
  auto green = b.add_material({{0.2, 0.55, 0.3}, 0.1, 0.4, 30, 0});
  b.add_box({-3.2, 0, -2.2}, {-2.8, 2.4, -1.8}, stone);
  b.add_box({2.6, 0, -3.2}, {3.0, 2.4, -2.8}, stone);
  b.add_box({-0.9, 0, -0.6}, {-0.6, 1.2, -0.3}, stone);
  b.add_sphere({1.0, 0.35, -1.2}, 0.35, green);
  b.add_box({-2.6, 0, -6.0}, {-1.8, 1.6, -5.2}, green);
  b.s.camera.keyframes = {key(0, {-2.4, 1.9, 3.0}, {0.2, 0.5, -4.0}),
      key(2.5, {-1.0, 1.6, 1.8}, {0.4, 0.5, -4.2}), key(5, {0.6, 1.4, 1.4}, {-0.2, 0.6, -4.4}),
      key(7.5, {1.8, 1.6, 2.0}, {-0.6, 0.5, -4.0}), key(10, {2.6, 1.9, 3.0}, {-0.4, 0.5, -3.8})};
  finalize_scene(b.s);
  return b.s;
}

// A scripted viewing session fed through the live-service input model at 30 Hz and
// recorded as camera keyframes: idle stretches broken by bursts of rapid turning.
scene interactive_like() {
  auto b = make_room();
  struct segment {
    double until, yaw_rate, pitch_rate;
    vec3 move_rate;
  };
  const segment script[] = {{1.5, 0, 0, {}}, {2.3, 0.45, 0, {}}, {3.8, 0, 0, {}},
      {4.8, -0.35, 0.05, {0, 0, 0.5}}, {6.2, 0, 0, {}}, {6.9, 0.5, -0.08, {0.2, 0, 0}},
      {8.4, 0, 0, {}}, {9.2, -0.4, 0.03, {}}, {10, 0, 0, {}}};
  auto state = from_pose({-0.5, 1.6, 2.6}, {0.0, 0.5, -4.0}, 50 * pi / 180);
  auto step  = 1.0 / 30;
  auto seg   = 0;
  auto record = [&](double t) {
    auto pose = to_pose(state);
    b.s.camera.keyframes.push_back({t, state.eye, state.eye + pose.forward, {0, 1, 0}, state.fov});
  };
  record(0);
  for (auto i = 1; i <= 300; i++) {
    auto t = i * step;
    while (seg + 1 < int(std::size(script)) && t > script[seg].until + 1e-9) seg++;
    const auto& s = script[seg];
    input_event e;
    e.ts_ms = t * 1000;
    e.yaw   = s.yaw_rate * step;
    e.pitch = s.pitch_rate * step;
    e.move  = s.move_rate * step;
    state   = apply_input(state, e);
    record(t);
  }
  finalize_scene(b.s);
  return b.s;
}

scene static_room() {
  auto b = make_room();
  b.s.camera.keyframes = {key(0, {-0.5, 1.6, 2.6}, {0.0, 0.5, -4.0})};
  finalize_scene(b.s);
  return b.s;
}

}  // namespace

std::vector<std::string> bundled_animations() {
  return {"bart-like", "toycar-like", "interactive-like", "static"};
}

scene bundled_scene(const std::string& id) {
  if (id == "bart-like") return bart_like();
  if (id == "toycar-like") return toycar_like();
  if (id == "interactive-like") return interactive_like();
  if (id == "static") return static_room();
  throw config_error("unknown animation id '" + id + "'");
}

}  // namespace afr
