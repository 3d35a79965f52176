#include "toss/ballistics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace toss::sim {

namespace {

Eigen::Vector3d yaw_rotate(double yaw, const Eigen::Vector3d& v) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y(), v.z()};
}

/// Entry fraction of segment p0->p1 into the inflated box, or nullopt.
std::optional<double> segment_box_entry(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                        const ObstacleBox& box, double inflate) {
  const Eigen::Vector3d lo = box.center - (box.half_extents.array() + inflate).matrix();
  const Eigen::Vector3d hi = box.center + (box.half_extents.array() + inflate).matrix();
  const Eigen::Vector3d d = p1 - p0;
  double t_enter = 0.0, t_exit = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (p0[axis] < lo[axis] || p0[axis] > hi[axis]) return std::nullopt;
      continue;
    }
    double ta = (lo[axis] - p0[axis]) / d[axis];
    double tb = (hi[axis] - p0[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t_enter = std::max(t_enter, ta);
    t_exit = std::min(t_exit, tb);
    if (t_enter > t_exit) return std::nullopt;
  }
  return t_enter;
}

struct DragModel {
  double c_over_m;
  Eigen::Vector3d accel(const Eigen::Vector3d& v) const {
    Eigen::Vector3d a{0.0, 0.0, -kGravity};
    if (c_over_m > 0.0) a -= c_over_m * v.norm() * v;
    return a;
  }
};

void rk4_step(const DragModel& drag, double h, Eigen::Vector3d& p, Eigen::Vector3d& v) {
  const Eigen::Vector3d k1p = v;
  const Eigen::Vector3d k1v = drag.accel(v);
  const Eigen::Vector3d k2p = v + 0.5 * h * k1v;
  const Eigen::Vector3d k2v = drag.accel(v + 0.5 * h * k1v);
  const Eigen::Vector3d k3p = v + 0.5 * h * k2v;
  const Eigen::Vector3d k3v = drag.accel(v + 0.5 * h * k2v);
  const Eigen::Vector3d k4p = v + h * k3v;
  const Eigen::Vector3d k4v = drag.accel(v + h * k3v);
  p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

double hermite(double s, double y0, double m0, double y1, double m1) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * m1;
}

struct Terminal {
  FlightEnd end;
  double time;  // since release
  Eigen::Vector3d point;
};

void finalize(FlightOutcome& out, const Terminal& term, const FlightScene& scene,
              bool record_path) {
  const double episode_time = out.release.time + term.time;
  if (record_path) out.path.emplace_back(episode_time, term.point);
  out.landing_point = term.point;
  out.landing_time = episode_time;
  out.end = term.end;
  const CatchResult c = catch_test(term.point.head<2>(), episode_time, scene.basket_center,
                                   scene.basket_velocity, scene.basket.catch_radius);
  out.dist_to_goal = c.dist;
  if (term.end == FlightEnd::collision) {
    out.collided = true;
    out.collision_point = term.point;
    out.success = false;
  } else {
    out.success = (term.end == FlightEnd::rim_crossing) && c.success;
  }
}

}  // namespace

const char* flight_end_name(FlightEnd end) {
  switch (end) {
    case FlightEnd::rim_crossing: return "rim_crossing";
    case FlightEnd::floor: return "floor";
    case FlightEnd::collision: return "collision";
    case FlightEnd::time_cap: return "time_cap";
  }
  return "unknown";
}

std::optional<FlightEnd> parse_flight_end(const std::string& name) {
  if (name == "rim_crossing") return FlightEnd::rim_crossing;
  if (name == "floor") return FlightEnd::floor;
  if (name == "collision") return FlightEnd::collision;
  if (name == "time_cap") return FlightEnd::time_cap;
  return std::nullopt;
}

Eigen::Vector3d forward_kinematics(const ArmModel& arm, double j) {
  const Eigen::Vector3d in_plane{std::sin(j), 0.0, -std::cos(j)};
  return arm.shoulder + arm.link_length * yaw_rotate(arm.yaw, in_plane);
}

SwingSample swing_state(const SwingCommand& cmd, double t) {
  if (cmd.tau <= 0.0) throw std::invalid_argument("swing_state: tau must be positive");
  if (t < 0.0 || t > cmd.tau) throw std::out_of_range("swing_state: t outside [0, tau]");
  const double s = t / cmd.tau;
  const double dj = cmd.j_f - cmd.j_i;
  return {cmd.j_i + dj * min_jerk_blend(s), dj / cmd.tau * min_jerk_blend_rate(s)};
}

ReleaseState release_state(const ArmModel& arm, const SwingCommand& cmd,
                           const ObjectParams& object, Rng& rng) {
  const SwingSample sw = swing_state(cmd, cmd.t_r);
  ReleaseState out;
  out.position = forward_kinematics(arm, sw.angle);
  const Eigen::Vector3d tangent{std::cos(sw.angle), 0.0, std::sin(sw.angle)};
  out.velocity = arm.link_length * sw.rate * yaw_rotate(arm.yaw, tangent);
  if (object.release_jitter_sigma > 0.0) {
    const double sigma = object.release_jitter_sigma * out.velocity.norm();
    for (int axis = 0; axis < 3; ++axis) out.velocity[axis] += rng.normal(0.0, sigma);
  }
  out.time = cmd.t_r;
  return out;
}

bool segment_box_collision(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                           const ObstacleBox& box, double inflate) {
  return segment_box_entry(p0, p1, box, inflate).has_value();
}

CatchResult catch_test(const Eigen::Vector2d& landing_xy, double landing_time,
                       const Eigen::Vector3d& basket_center0,
                       const Eigen::Vector3d& basket_velocity, double d) {
  const Eigen::Vector3d center = basket_center0 + basket_velocity * landing_time;
  const double dist = (landing_xy - center.head<2>()).norm();
  return {dist < d, dist};
}

std::optional<PlaneCrossing> ballistic_oracle(const ReleaseState& release, double plane_z) {
  const double pz = release.position.z(), vz = release.velocity.z();
  const double disc = vz * vz + 2.0 * kGravity * (pz - plane_z);
  if (disc <= 0.0) return std::nullopt;
  const double t = (vz + std::sqrt(disc)) / kGravity;
  if (t <= 0.0) return std::nullopt;
  return PlaneCrossing{t, release.position.x() + release.velocity.x() * t,
                       release.position.y() + release.velocity.y() * t};
}

FlightOutcome simulate_flight(const ReleaseState& release, const ObjectParams& object,
                              const FlightScene& scene, const FlightOptions& options) {
  if (options.dt <= 0.0) throw std::invalid_argument("simulate_flight: dt must be positive");
  const bool closed_form =
      options.integrator == Integrator::closed_form ||
      (options.integrator == Integrator::auto_select && object.drag_coefficient == 0.0);
  if (!closed_form && object.mass <= 0.0)
    throw std::invalid_argument("simulate_flight: mass must be positive");

  FlightOutcome out;
  out.release = release;
  if (options.record_path) out.path.emplace_back(release.time, release.position);

  const double rim = scene.basket.rim_height;
  const DragModel drag{closed_form ? 0.0 : object.drag_coefficient / object.mass};

  // Closed-form position/velocity since release (drag-free only).
  const auto pos_at = [&](double t) -> Eigen::Vector3d {
    Eigen::Vector3d p = release.position + release.velocity * t;
    p.z() -= 0.5 * kGravity * t * t;
    return p;
  };
  const auto z_at = [&](double t) {
    return release.position.z() + release.velocity.z() * t - 0.5 * kGravity * t * t;
  };

  // Release point already inside the box counts as an immediate collision.
  if (scene.obstacle &&
      segment_box_collision(release.position, release.position, *scene.obstacle)) {
    finalize(out, {FlightEnd::collision, 0.0, release.position}, scene, options.record_path);
    return out;
  }

  double t_prev = 0.0;
  Eigen::Vector3d p_prev = release.position;
  Eigen::Vector3d v = release.velocity;  // tracked for RK4 only

  while (true) {
    const double h = std::min(options.dt, kFlightTimeCap - t_prev);
    const double t_next = t_prev + h;

    Eigen::Vector3d p_next, v_next = v;
    if (closed_form) {
      p_next = pos_at(t_next);
    } else {
      p_next = p_prev;
      rk4_step(drag, h, p_next, v_next);
    }

    // Earliest downward plane crossing within the step (rim first; it sits
    // above the floor, so a step crossing both crosses the rim earlier).
    std::optional<Terminal> crossing;
    for (const auto& [plane, end] :
         {std::pair{rim, FlightEnd::rim_crossing}, std::pair{kFloorZ, FlightEnd::floor}}) {
      if (!(p_prev.z() > plane && p_next.z() <= plane)) continue;
      if (closed_form) {
        double ta = t_prev, tb = t_next;
        for (int i = 0; i < 80 && tb - ta > 1e-15; ++i) {
          const double tm = 0.5 * (ta + tb);
          (z_at(tm) > plane ? ta : tb) = tm;
        }
        const double tc = 0.5 * (ta + tb);
        Eigen::Vector3d pc = pos_at(tc);
        pc.z() = plane;
        crossing = Terminal{end, tc, pc};
      } else {
        double sa = 0.0, sb = 1.0;
        const auto zh = [&](double s) {
          return hermite(s, p_prev.z(), h * v.z(), p_next.z(), h * v_next.z());
        };
        for (int i = 0; i < 60; ++i) {
          const double sm = 0.5 * (sa + sb);
          (zh(sm) > plane ? sa : sb) = sm;
        }
        const double sc = 0.5 * (sa + sb);
        Eigen::Vector3d pc;
        pc.x() = hermite(sc, p_prev.x(), h * v.x(), p_next.x(), h * v_next.x());
        pc.y() = hermite(sc, p_prev.y(), h * v.y(), p_next.y(), h * v_next.y());
        pc.z() = plane;
        crossing = Terminal{end, t_prev + sc * h, pc};
      }
      break;
    }

    // Collision on the chord up to the crossing point (or the full step).
    const Eigen::Vector3d seg_end = crossing ? crossing->point : p_next;
    const double seg_end_time = crossing ? crossing->time : t_next;
    if (scene.obstacle) {
      if (const auto entry = segment_box_entry(p_prev, seg_end, *scene.obstacle, 0.0)) {
        const Eigen::Vector3d hit = p_prev + *entry * (seg_end - p_prev);
        const double t_hit = t_prev + *entry * (seg_end_time - t_prev);
        finalize(out, {FlightEnd::collision, t_hit, hit}, scene, options.record_path);
        return out;
      }
    }

    if (crossing) {
      finalize(out, *crossing, scene, options.record_path);
      return out;
    }

    if (t_next >= kFlightTimeCap) {
      finalize(out, {FlightEnd::time_cap, t_next, p_next}, scene, options.record_path);
      return out;
    }

    if (options.record_path) out.path.emplace_back(release.time + t_next, p_next);
    t_prev = t_next;
    p_prev = p_next;
    v = v_next;
  }
}

}  // namespace toss::sim
