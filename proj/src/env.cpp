#include "toss/env.hpp"

#include <cmath>
#include <stdexcept>

namespace toss::env {

namespace {

double affine(double unit, const std::array<double, 2>& range) {
  // unit in [-1,1] -> [range[0], range[1]]
  return range[0] + (unit + 1.0) * 0.5 * (range[1] - range[0]);
}

double affine_inverse(double value, const std::array<double, 2>& range) {
  return (value - range[0]) / (range[1] - range[0]) * 2.0 - 1.0;
}

}  // namespace

const char* task_name(TaskId task) {
  switch (task) {
    case TaskId::static_basket: return "task1";
    case TaskId::moving_basket: return "task2";
    case TaskId::obstacle: return "task3";
  }
  return "unknown";
}

std::optional<TaskId> parse_task(const std::string& name) {
  if (name == "task1") return TaskId::static_basket;
  if (name == "task2") return TaskId::moving_basket;
  if (name == "task3") return TaskId::obstacle;
  return std::nullopt;
}

Eigen::Matrix<double, WorldState::kDim, 1> WorldState::to_vector() const {
  Eigen::Matrix<double, kDim, 1> v;
  v << proprio, obs, goal, dist, time;
  return v;
}

WorldState WorldState::from_vector(const Eigen::Matrix<double, kDim, 1>& v) {
  WorldState s;
  s.proprio = v.segment<2>(0);
  s.obs = v.segment<3>(2);
  s.goal = v.segment<6>(5);
  s.dist = v.segment<6>(11);
  s.time = v.segment<2>(17);
  return s;
}

FlightSummary FlightSummary::from_outcome(const sim::FlightOutcome& o) {
  FlightSummary s;
  s.release_position = o.release.position;
  s.release_velocity = o.release.velocity;
  s.release_time = o.release.time;
  s.collided = o.collided;
  s.success = o.success;
  s.dist_to_goal = o.dist_to_goal;
  s.landing_point = o.landing_point;
  s.landing_time = o.landing_time;
  s.end = o.end;
  return s;
}

sim::SwingCommand decode_action(const Eigen::Vector4d& raw, const ActionRanges& ranges) {
  if (!raw.allFinite()) throw std::invalid_argument("decode_action: non-finite action");
  const Eigen::Vector4d u = raw.cwiseMax(-1.0).cwiseMin(1.0);
  sim::SwingCommand cmd;
  cmd.j_i = affine(u[0], ranges.j_i_rad);
  cmd.j_f = affine(u[1], ranges.j_f_rad);
  cmd.tau = affine(u[2], ranges.tau_s);
  cmd.t_r = affine(u[3], ranges.release_fraction) * cmd.tau;
  return cmd;
}

Eigen::Vector4d encode_action(const sim::SwingCommand& cmd, const ActionRanges& ranges) {
  Eigen::Vector4d raw;
  raw[0] = affine_inverse(cmd.j_i, ranges.j_i_rad);
  raw[1] = affine_inverse(cmd.j_f, ranges.j_f_rad);
  raw[2] = affine_inverse(cmd.tau, ranges.tau_s);
  raw[3] = affine_inverse(cmd.t_r / cmd.tau, ranges.release_fraction);
  return raw;
}

double reward_fn(const sim::FlightOutcome& outcome) {
  if (outcome.collided) return -10.0;
  if (outcome.success) return 1.0;
  return -outcome.dist_to_goal;
}

double reward_fn(const FlightSummary& outcome) {
  if (outcome.collided) return -10.0;
  if (outcome.success) return 1.0;
  return -outcome.dist_to_goal;
}

Eigen::Matrix<double, 6, 1> distance_features(const SceneConfig& scene,
                                              const FlightSummary& outcome) {
  Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
  const Eigen::Vector2d land = outcome.landing_point.head<2>();
  const Eigen::Vector2d goal =
      (scene.basket_center + scene.basket_velocity * outcome.landing_time).head<2>();
  d[0] = outcome.dist_to_goal;
  d[1] = std::abs(land.x() - goal.x());
  d[2] = std::abs(land.y() - goal.y());
  if (scene.obstacle) {
    const Eigen::Vector2d obs = scene.obstacle->center.head<2>();
    d[3] = (land - obs).norm();
    d[4] = std::abs(land.x() - obs.x());
    d[5] = std::abs(land.y() - obs.y());
  }
  return d;
}

WorldState assemble_state(const SceneConfig& scene, const sim::SwingCommand* executed,
                          const Eigen::Matrix<double, 6, 1>* dist) {
  WorldState s;
  if (executed) {
    s.proprio << executed->j_i, executed->j_f;
    s.time << executed->t_r, executed->tau;
  }
  if (scene.obstacle) s.obs = scene.obstacle->center;
  s.goal << scene.basket_center, scene.basket_velocity;
  if (dist) s.dist = *dist;
  return s;
}

double solve_yaw(const EnvConfig& cfg, const SceneConfig& scene, const sim::SwingCommand& cmd) {
  // Noiseless in-plane release (yaw = 0).
  sim::ArmModel plane_arm = cfg.arm;
  plane_arm.yaw = 0.0;
  Rng no_rng(0);
  const sim::ReleaseState rel =
      release_state(plane_arm, cmd, sim::ObjectParams{.release_jitter_sigma = 0.0}, no_rng);

  // Predicted landing offset from the shoulder axis, in the throw plane.
  double landing_time = rel.time;
  double plane_x = rel.position.x() - cfg.arm.shoulder.x();
  if (const auto cross = sim::ballistic_oracle(rel, cfg.basket.rim_height)) {
    landing_time += cross->time;
    plane_x = cross->x - cfg.arm.shoulder.x();
  }

  const Eigen::Vector3d target = scene.basket_center + scene.basket_velocity * landing_time;
  const double tx = target.x() - cfg.arm.shoulder.x();
  const double ty = target.y() - cfg.arm.shoulder.y();
  double yaw = std::atan2(ty, tx);
  if (plane_x < 0.0) yaw += std::numbers::pi;  // backward throw: flip the plane heading
  return yaw;
}

Transition step_throw(const EnvConfig& cfg, const SceneConfig& scene, const WorldState& state,
                      const Eigen::Vector4d& raw_action, Rng& rng) {
  Transition tr;
  tr.state = state;
  tr.action = raw_action.cwiseMax(-1.0).cwiseMin(1.0);
  tr.command = decode_action(raw_action, cfg.actions);
  tr.yaw = solve_yaw(cfg, scene, tr.command);

  sim::ArmModel arm = cfg.arm;
  arm.yaw = tr.yaw;
  const sim::ReleaseState release = release_state(arm, tr.command, scene.object, rng);

  sim::FlightScene fs;
  fs.basket_center = scene.basket_center;
  fs.basket_velocity = scene.basket_velocity;
  fs.obstacle = scene.obstacle;
  fs.basket = cfg.basket;
  const sim::FlightOutcome outcome =
      simulate_flight(release, scene.object, fs, {.dt = cfg.flight_dt});

  tr.outcome = FlightSummary::from_outcome(outcome);
  tr.reward = reward_fn(outcome);
  tr.done = true;
  const Eigen::Matrix<double, 6, 1> dist = distance_features(scene, tr.outcome);
  tr.next_state = assemble_state(scene, &tr.command, &dist);
  return tr;
}

SceneConfig sample_scene(const EnvConfig& cfg, TaskId task, const sim::ObjectParams& object,
                         std::uint64_t seed, Rng& rng) {
  SceneConfig scene;
  scene.task = task;
  scene.object = object;
  scene.seed = seed;
  const double bx = rng.uniform(cfg.scene.basket_x[0], cfg.scene.basket_x[1]);
  const double by = rng.uniform(cfg.scene.basket_y[0], cfg.scene.basket_y[1]);
  scene.basket_center = {bx, by, cfg.scene.basket_z};
  if (task == TaskId::moving_basket) {
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = rng.uniform(cfg.scene.basket_speed[0], cfg.scene.basket_speed[1]);
    scene.basket_velocity = {speed * std::cos(heading), speed * std::sin(heading), 0.0};
  }
  if (task == TaskId::obstacle) {
    sim::ObstacleBox box;
    const double jitter = rng.uniform(-cfg.scene.obstacle_x_jitter, cfg.scene.obstacle_x_jitter);
    box.center = {0.5 * bx + jitter, by, box.half_extents.z()};  // resting on the floor
    scene.obstacle = box;
  }
  return scene;
}

ThrowEnv::ThrowEnv(EnvConfig cfg) : cfg_(cfg), rng_(0) {}

std::pair<WorldState, SceneConfig> ThrowEnv::reset(TaskId task, std::uint64_t seed) {
  rng_.reseed(seed);
  scene_ = sample_scene(cfg_, task, object_, seed, rng_);
  state_ = assemble_state(scene_, prev_cmd_ ? &*prev_cmd_ : nullptr,
                          prev_dist_ ? &*prev_dist_ : nullptr);
  scene_ready_ = true;
  thrown_ = false;
  return {state_, scene_};
}

Transition ThrowEnv::step(const Eigen::Vector4d& raw_action) {
  if (!scene_ready_) throw std::logic_error("ThrowEnv::step before reset");
  if (thrown_) throw std::logic_error("ThrowEnv::step called twice in a single-throw episode");
  Transition tr = step_throw(cfg_, scene_, state_, raw_action, rng_);
  thrown_ = true;
  prev_cmd_ = tr.command;
  prev_dist_ = distance_features(scene_, tr.outcome);
  state_ = tr.next_state;
  return tr;
}

}  // namespace toss::env
