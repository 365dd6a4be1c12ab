#include <afr/input.hpp>

#include <json.hpp>

#include <algorithm>

namespace afr {

static vec3 forward_of(double yaw, double pitch) {
  return {std::cos(pitch) * std::sin(yaw), std::sin(pitch), -std::cos(pitch) * std::cos(yaw)};
}

camera_pose to_pose(const camera_state& c) {
  auto forward = forward_of(c.yaw, c.pitch);
  return make_pose(c.eye, c.eye + forward, {0, 1, 0}, c.fov);
}

camera_state from_pose(const vec3& eye, const vec3& look_at, double fov) {
  auto d     = normalize(look_at - eye);
  auto pitch = std::asin(std::clamp(d.y, -1.0, 1.0));
  auto yaw   = std::atan2(d.x, -d.z);
  return {eye, yaw, std::clamp(pitch, -max_pitch, max_pitch), fov};
}

camera_state apply_input(const camera_state& current, const input_event& event) {
  auto finite = std::isfinite(event.yaw) && std::isfinite(event.pitch) && isfinite(event.move);
  if (event.pose)
    finite = finite && isfinite(event.pose->eye) && std::isfinite(event.pose->yaw) &&
             std::isfinite(event.pose->pitch) && std::isfinite(event.pose->fov);
  if (!finite) throw protocol_error("input event contains non-finite values");

  auto next = event.pose ? *event.pose : current;
  next.yaw   = std::remainder(next.yaw + event.yaw, 2 * pi);
  next.pitch = std::clamp(next.pitch + event.pitch, -max_pitch, max_pitch);
  if (event.move != vec3{}) {
    auto pose = to_pose(next);
    next.eye += pose.right * event.move.x + pose.up * event.move.y + pose.forward * event.move.z;
  }
  return next;
}

input_event parse_input_event(const std::string& text) {
  using json = nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw protocol_error(std::string("malformed input event: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string())
    throw protocol_error("input event needs a string 'type'");

  auto num = [&](const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number()) throw protocol_error(std::string("'") + key + "' must be a number");
    return doc[key].get<double>();
  };
  auto vec = [&](const char* key) {
    if (!doc.contains(key)) return vec3{};
    const auto& v = doc[key];
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
        !v[2].is_number())
      throw protocol_error(std::string("'") + key + "' must be a 3-number array");
    return vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  };

  input_event event;
  event.ts_ms = num("ts", 0);
  auto type   = doc["type"].get<std::string>();
  if (type == "input") {
    for (auto& [key, value] : doc.items())
      if (key != "type" && key != "yaw" && key != "pitch" && key != "move" && key != "ts")
        throw protocol_error("unknown key '" + key + "' in input event");
    event.yaw   = num("yaw", 0);
    event.pitch = num("pitch", 0);
    event.move  = vec("move");
  } else if (type == "pose") {
    for (auto& [key, value] : doc.items())
      if (key != "type" && key != "eye" && key != "yaw" && key != "pitch" && key != "fov" &&
          key != "ts")
        throw protocol_error("unknown key '" + key + "' in pose event");
    event.pose = camera_state{vec("eye"), num("yaw", 0), num("pitch", 0), num("fov", pi / 3)};
    if (!(event.pose->fov > 0 && event.pose->fov < pi))
      throw protocol_error("pose fov must lie in (0, pi)");
  } else {
    throw protocol_error("unknown event type '" + type + "'");
  }
  if (!std::isfinite(event.ts_ms)) throw protocol_error("non-finite timestamp");
  return event;
}

}  // namespace afr
