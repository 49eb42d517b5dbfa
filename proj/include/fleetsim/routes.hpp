#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fleetsim/time.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

struct Waypoint {
  double x = 0;      // meters
  double y = 0;      // meters
  double speed = 0;  // m/s while travelling toward the next waypoint
};

using Route = std::vector<Waypoint>;

struct Pose {
  int vehicle_id = 0;
  VirtualTime t;
  double x = 0;
  double y = 0;
  double heading = 0;  // radians, direction of travel
};

/// Position along a route at time t: piecewise-linear interpolation between
/// waypoints at constant per-leg speed; the vehicle holds the final waypoint
/// after the route ends. Heading is the current leg direction.
inline Pose pose_on_route(const Route& route, int vehicle_id, VirtualTime t) {
  if (route.size() < 2) throw SimError("route needs at least two waypoints");
  Pose pose;
  pose.vehicle_id = vehicle_id;
  pose.t = t;
  double remaining = t.seconds();
  for (std::size_t leg = 0; leg + 1 < route.size(); ++leg) {
    const Waypoint& a = route[leg];
    const Waypoint& b = route[leg + 1];
    double dx = b.x - a.x;
    double dy = b.y - a.y;
    double length = std::hypot(dx, dy);
    double heading = std::atan2(dy, dx);
    if (a.speed <= 0) throw SimError("waypoint speed must be positive");
    double leg_time = length / a.speed;
    if (remaining < leg_time || leg_time == 0.0) {
      double frac = leg_time == 0.0 ? 1.0 : remaining / leg_time;
      pose.x = a.x + dx * frac;
      pose.y = a.y + dy * frac;
      pose.heading = heading;
      return pose;
    }
    remaining -= leg_time;
    pose.heading = heading;
  }
  pose.x = route.back().x;
  pose.y = route.back().y;
  return pose;
}

inline double distance_2d(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// 24-byte wire encoding: x, y, heading as little-endian doubles.
inline std::vector<std::uint8_t> pose_payload(const Pose& pose) {
  std::vector<std::uint8_t> buf;
  buf.reserve(24);
  wire::put_f64(buf, pose.x);
  wire::put_f64(buf, pose.y);
  wire::put_f64(buf, pose.heading);
  return buf;
}

inline Pose pose_from_payload(const std::vector<std::uint8_t>& payload, int vehicle_id,
                              VirtualTime t) {
  if (payload.size() != 24) throw SimError("pose payload must be 24 bytes");
  Pose pose;
  pose.vehicle_id = vehicle_id;
  pose.t = t;
  pose.x = wire::get_f64(payload.data());
  pose.y = wire::get_f64(payload.data() + 8);
  pose.heading = wire::get_f64(payload.data() + 16);
  return pose;
}

}  // namespace fleetsim
