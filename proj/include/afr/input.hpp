#pragma once

#include <afr/scene.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace afr {

struct protocol_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// First-person camera: yaw about world +y (0 looks down -z), pitch towards +y.
struct camera_state {
  vec3   eye;
  double yaw   = 0;
  double pitch = 0;
  double fov   = pi / 3;
};

inline constexpr double max_pitch = pi / 2 - 0.01;

camera_pose to_pose(const camera_state& c);
camera_state from_pose(const vec3& eye, const vec3& look_at, double fov);

struct input_event {
  double ts_ms = 0;
  // Relative motion: yaw/pitch in radians, move in the camera frame (right, up, forward).
  double yaw   = 0;
  double pitch = 0;
  vec3   move;
  // Absolute pose; replaces the state before deltas are applied.
  std::optional<camera_state> pose;
};

// Composes the event onto the camera. Pitch is clamped to +-max_pitch. Throws
// protocol_error for non-finite values.
camera_state apply_input(const camera_state& current, const input_event& event);

// Parses {"type":"input","yaw":..,"pitch":..,"move":[x,y,z],"ts":..} or
// {"type":"pose","eye":[x,y,z],"yaw":..,"pitch":..,"fov":..,"ts":..}. Throws protocol_error.
input_event parse_input_event(const std::string& text);

}  // namespace afr
