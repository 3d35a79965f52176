#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "toss/rng.hpp"

namespace toss::sim {

inline constexpr double kGravity = 9.81;     // m/s^2, downward
inline constexpr double kFloorZ = 0.0;       // m
inline constexpr double kFlightTimeCap = 10.0;  // s, guards pathological flights

/// Single-link arm swinging in a vertical plane; yaw rotates that plane about
/// the shoulder's vertical axis. Joint angle j = 0 points straight down.
struct ArmModel {
  Eigen::Vector3d shoulder{0.0, 0.0, 0.8};  // m
  double link_length = 0.6;                 // m
  double yaw = 0.0;                         // rad, heading about +z
};

/// Meta-parameters of one swing: start/end shoulder angle, duration, and the
/// gripper-open instant. Invariant: 0 < t_r < tau.
struct SwingCommand {
  double j_i = 0.0;  // rad
  double j_f = 0.0;  // rad
  double tau = 1.0;  // s
  double t_r = 0.5;  // s
};

struct SwingSample {
  double angle;  // rad
  double rate;   // rad/s
};

/// Object pose/velocity at the instant the gripper opens.
struct ReleaseState {
  Eigen::Vector3d position{Eigen::Vector3d::Zero()};  // m
  Eigen::Vector3d velocity{Eigen::Vector3d::Zero()};  // m/s
  double time = 0.0;                                  // s, equals t_r on the episode clock
};

/// Axis-aligned box obstructing the flight corridor.
struct ObstacleBox {
  Eigen::Vector3d center{Eigen::Vector3d::Zero()};
  Eigen::Vector3d half_extents{0.075, 0.05, 0.11};  // 0.15 x 0.10 x 0.22 box
};

/// Physical parameters of a thrown object. drag_coefficient = 0 selects exact
/// vacuum ballistics; release_jitter_sigma scales isotropic Gaussian noise on
/// the release velocity (std per component = sigma * speed).
struct ObjectParams {
  std::string name = "point";
  double mass = 0.2;                  // kg
  double drag_coefficient = 0.0;      // kg/m, accel = -c*|v|*v/m
  double release_jitter_sigma = 0.0;  // fraction of speed
};

enum class FlightEnd { rim_crossing, floor, collision, time_cap };

const char* flight_end_name(FlightEnd end);
std::optional<FlightEnd> parse_flight_end(const std::string& name);

/// Everything downstream consumers need about one free flight. landing_point
/// is the catch-plane crossing for rim_crossing ends; for the other ends it is
/// the terminal point of the flight (collision entry, floor hit, cap point).
struct FlightOutcome {
  ReleaseState release;
  std::vector<std::pair<double, Eigen::Vector3d>> path;  // (episode time, position)
  bool collided = false;
  std::optional<Eigen::Vector3d> collision_point;
  Eigen::Vector3d landing_point{Eigen::Vector3d::Zero()};
  double landing_time = 0.0;  // s, episode clock; >= release.time
  bool success = false;
  double dist_to_goal = 0.0;  // m, planar
  FlightEnd end = FlightEnd::rim_crossing;
};

/// Basket catch geometry: the horizontal catch plane sits at the rim, success
/// is the inscribed cylinder of the square footprint.
struct BasketGeometry {
  double rim_height = 0.15;   // m
  double catch_radius = 0.15; // m, inscribed-circle radius of the 0.30 m square
};

/// World the object flies through. basket_center is the goal at episode start
/// (t = 0); the basket translates linearly at basket_velocity.
struct FlightScene {
  Eigen::Vector3d basket_center{1.5, 0.0, 0.075};
  Eigen::Vector3d basket_velocity{Eigen::Vector3d::Zero()};
  std::optional<ObstacleBox> obstacle;
  BasketGeometry basket;
};

enum class Integrator { auto_select, closed_form, rk4 };

struct FlightOptions {
  double dt = 1e-3;                              // s
  Integrator integrator = Integrator::auto_select;
  bool record_path = true;
};

/// Minimum-jerk position blend, s in [0, 1]: 10 s^3 - 15 s^4 + 6 s^5.
template <typename Scalar>
Scalar min_jerk_blend(Scalar s) {
  return ((Scalar(6) * s - Scalar(15)) * s + Scalar(10)) * s * s * s;
}

/// d/ds of min_jerk_blend: 30 s^2 - 60 s^3 + 30 s^4. Zero at both endpoints,
/// peak 1.875 at s = 0.5.
template <typename Scalar>
Scalar min_jerk_blend_rate(Scalar s) {
  return ((Scalar(30) * s - Scalar(60)) * s + Scalar(30)) * s * s;
}

/// Gripper position at joint angle j: shoulder + L * R_yaw * (sin j, 0, -cos j).
Eigen::Vector3d forward_kinematics(const ArmModel& arm, double j);

/// Joint angle and angular rate at time t of the minimum-jerk swing.
/// Requires 0 <= t <= cmd.tau.
SwingSample swing_state(const SwingCommand& cmd, double t);

/// Object state the instant the gripper opens: position from forward
/// kinematics at j(t_r), velocity tangent to the swing circle with magnitude
/// L * jdot(t_r), optionally perturbed by per-component Gaussian noise with
/// std = release_jitter_sigma * speed.
ReleaseState release_state(const ArmModel& arm, const SwingCommand& cmd,
                           const ObjectParams& object, Rng& rng);

/// True iff the segment p0->p1 intersects the box inflated by `inflate` on
/// every axis (slab method; degenerate segments reduce to point containment).
bool segment_box_collision(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                           const ObstacleBox& box, double inflate = 0.0);

struct CatchResult {
  bool success;
  double dist;  // m, planar distance to basket center at catch time
};

/// Catch predicate: basket center propagates linearly from episode start to
/// landing_time; success iff planar distance < d strictly.
CatchResult catch_test(const Eigen::Vector2d& landing_xy, double landing_time,
                       const Eigen::Vector3d& basket_center0,
                       const Eigen::Vector3d& basket_velocity, double d = 0.15);

struct PlaneCrossing {
  double time;  // s after release
  double x;
  double y;
};

/// Closed-form drag-free solution for the first downward crossing of the
/// horizontal plane z = plane_z. Returns nullopt when the flight never crosses
/// the plane moving downward at a strictly positive time.
std::optional<PlaneCrossing> ballistic_oracle(const ReleaseState& release, double plane_z);

/// Integrate a free flight from release until it crosses the catch plane
/// moving downward, hits the floor, collides with the obstacle, or exceeds
/// the time cap. Drag-free flights use exact kinematic stepping with a
/// bisection-refined crossing; c > 0 uses fixed-step RK4 with cubic Hermite
/// crossing refinement. Collision is tested per step segment, so tunneling is
/// impossible at any speed.
FlightOutcome simulate_flight(const ReleaseState& release, const ObjectParams& object,
                              const FlightScene& scene, const FlightOptions& options = {});

}  // namespace toss::sim
