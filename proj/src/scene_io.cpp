#include <afr/scene.hpp>

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace afr {

using json = nlohmann::ordered_json;

static void expect_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw config_error(std::string(what) + " must be an object");
  for (auto& [key, value] : j.items())
    if (!allowed.count(key)) throw config_error("unknown key '" + key + "' in " + what);
}

static const json& require(const json& j, const char* key, const char* what) {
  if (!j.contains(key))
    throw config_error(std::string("missing key '") + key + "' in " + what);
  return j.at(key);
}

static double number(const json& j, const char* what) {
  if (!j.is_number()) throw config_error(std::string(what) + " must be a number");
  return j.get<double>();
}

static vec3 to_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw config_error(std::string(what) + " must be a 3-element array");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

static rgb to_rgb(const json& j, const char* what) {
  auto v = to_vec3(j, what);
  return {v.x, v.y, v.z};
}

static json from(const vec3& v) { return json::array({v.x, v.y, v.z}); }
static json from(const rgb& c) { return json::array({c.r, c.g, c.b}); }

scene parse_scene(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("scene file is not valid JSON: ") + e.what());
  }
  expect_keys(doc,
      {"primitives", "materials", "lights", "background", "animations", "camera_path"}, "scene");

  scene s;
  for (const auto& jp : require(doc, "primitives", "scene")) {
    auto type = require(jp, "type", "primitive");
    primitive p;
    if (type == "sphere") {
      expect_keys(jp, {"type", "center", "radius", "material"}, "sphere");
      p.shape = sphere{to_vec3(require(jp, "center", "sphere"), "center"),
          number(require(jp, "radius", "sphere"), "radius")};
    } else if (type == "triangle") {
      expect_keys(jp, {"type", "vertices", "material"}, "triangle");
      const auto& v = require(jp, "vertices", "triangle");
      if (!v.is_array() || v.size() != 3) throw config_error("triangle needs 3 vertices");
      p.shape = triangle{to_vec3(v[0], "vertex"), to_vec3(v[1], "vertex"), to_vec3(v[2], "vertex")};
    } else {
      throw config_error("unknown primitive type");
    }
    p.material = int(number(require(jp, "material", "primitive"), "material"));
    s.primitives.push_back(p);
  }

  for (const auto& jm : require(doc, "materials", "scene")) {
    expect_keys(jm, {"diffuse", "ambient", "specular", "shininess", "reflectivity"}, "material");
    material m;
    m.diffuse = to_rgb(require(jm, "diffuse", "material"), "diffuse");
    if (jm.contains("ambient")) m.ambient = number(jm["ambient"], "ambient");
    if (jm.contains("specular")) m.specular = number(jm["specular"], "specular");
    if (jm.contains("shininess")) m.shininess = number(jm["shininess"], "shininess");
    if (jm.contains("reflectivity")) m.reflectivity = number(jm["reflectivity"], "reflectivity");
    s.materials.push_back(m);
  }

  for (const auto& jl : require(doc, "lights", "scene")) {
    expect_keys(jl, {"position", "intensity"}, "light");
    s.lights.push_back({to_vec3(require(jl, "position", "light"), "position"),
        to_rgb(require(jl, "intensity", "light"), "intensity")});
  }

  s.background = to_rgb(require(doc, "background", "scene"), "background");

  if (doc.contains("animations")) {
    for (const auto& ja : doc["animations"]) {
      expect_keys(ja, {"target", "pivot", "keyframes"}, "animation");
      animation_track track;
      track.target = int(number(require(ja, "target", "animation"), "target"));
      if (ja.contains("pivot")) track.pivot = to_vec3(ja["pivot"], "pivot");
      for (const auto& jk : require(ja, "keyframes", "animation")) {
        expect_keys(jk, {"time", "axis", "angle", "translation"}, "animation keyframe");
        animation_keyframe key;
        key.time = number(require(jk, "time", "animation keyframe"), "time");
        if (jk.contains("angle")) {
          auto axis = jk.contains("axis") ? to_vec3(jk["axis"], "axis") : vec3{0, 1, 0};
          key.rotation = axis_angle(axis, number(jk["angle"], "angle"));
        }
        if (jk.contains("translation")) key.translation = to_vec3(jk["translation"], "translation");
        track.keyframes.push_back(key);
      }
      s.animations.push_back(track);
    }
  }

  for (const auto& jc : require(doc, "camera_path", "scene")) {
    expect_keys(jc, {"time", "eye", "look_at", "up", "fov"}, "camera keyframe");
    camera_keyframe key;
    key.time    = number(require(jc, "time", "camera keyframe"), "time");
    key.eye     = to_vec3(require(jc, "eye", "camera keyframe"), "eye");
    key.look_at = to_vec3(require(jc, "look_at", "camera keyframe"), "look_at");
    if (jc.contains("up")) key.up = to_vec3(jc["up"], "up");
    if (jc.contains("fov")) key.fov = number(jc["fov"], "fov");
    s.camera.keyframes.push_back(key);
  }
  if (s.camera.keyframes.empty()) throw config_error("camera_path must not be empty");

  finalize_scene(s);
  return s;
}

scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open scene file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scene(buffer.str());
}

// Rotations are written as axis/angle; the quaternion sign is canonicalized first.
static void write_rotation(json& jk, quat q) {
  if (q.w < 0) q = {-q.w, -q.x, -q.y, -q.z};
  auto s = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (s < 1e-15) return;
  jk["axis"]  = from(vec3{q.x / s, q.y / s, q.z / s});
  jk["angle"] = 2 * std::atan2(s, q.w);
}

std::string format_scene(const scene& s) {
  json doc;
  doc["primitives"] = json::array();
  for (const auto& p : s.primitives) {
    json jp;
    if (auto sp = std::get_if<sphere>(&p.shape)) {
      jp["type"]   = "sphere";
      jp["center"] = from(sp->center);
      jp["radius"] = sp->radius;
    } else {
      const auto& t = std::get<triangle>(p.shape);
      jp["type"]     = "triangle";
      jp["vertices"] = json::array({from(t.v0), from(t.v1), from(t.v2)});
    }
    jp["material"] = p.material;
    doc["primitives"].push_back(jp);
  }
  doc["materials"] = json::array();
  for (const auto& m : s.materials) {
    doc["materials"].push_back({{"diffuse", from(m.diffuse)}, {"ambient", m.ambient},
        {"specular", m.specular}, {"shininess", m.shininess}, {"reflectivity", m.reflectivity}});
  }
  doc["lights"] = json::array();
  for (const auto& l : s.lights)
    doc["lights"].push_back({{"position", from(l.position)}, {"intensity", from(l.intensity)}});
  doc["background"] = from(s.background);
  doc["animations"] = json::array();
  for (const auto& track : s.animations) {
    json ja;
    ja["target"]    = track.target;
    ja["pivot"]     = from(track.pivot);
    ja["keyframes"] = json::array();
    for (const auto& k : track.keyframes) {
      json jk;
      jk["time"] = k.time;
      write_rotation(jk, k.rotation);
      jk["translation"] = from(k.translation);
      ja["keyframes"].push_back(jk);
    }
    doc["animations"].push_back(ja);
  }
  doc["camera_path"] = json::array();
  for (const auto& k : s.camera.keyframes) {
    doc["camera_path"].push_back({{"time", k.time}, {"eye", from(k.eye)},
        {"look_at", from(k.look_at)}, {"up", from(k.up)}, {"fov", k.fov}});
  }
  return doc.dump(1);
}

void save_scene(const std::filesystem::path& path, const scene& s) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write scene file " + path.string());
  out << format_scene(s) << "\n";
}

}  // namespace afr
