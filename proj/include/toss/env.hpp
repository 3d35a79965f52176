#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>

#include "toss/ballistics.hpp"
#include "toss/rng.hpp"

namespace toss::env {

enum class TaskId { static_basket, moving_basket, obstacle };

const char* task_name(TaskId task);  // "task1" / "task2" / "task3"
std::optional<TaskId> parse_task(const std::string& name);

/// Affine maps from the normalized action box [-1,1]^4 to physical swing
/// parameters. The release time is parameterized as a fraction of tau, which
/// keeps t_r < tau for every input.
struct ActionRanges {
  std::array<double, 2> j_i_rad{-140.0 * std::numbers::pi / 180.0,
                                -60.0 * std::numbers::pi / 180.0};
  std::array<double, 2> j_f_rad{-30.0 * std::numbers::pi / 180.0,
                                40.0 * std::numbers::pi / 180.0};
  std::array<double, 2> tau_s{0.3, 1.2};
  std::array<double, 2> release_fraction{0.40, 0.95};
};

/// Scene randomization bands. Basket x starts beyond arm reach by
/// construction (1.2 m > shoulder + link).
struct SceneRanges {
  std::array<double, 2> basket_x{1.2, 2.0};
  std::array<double, 2> basket_y{-0.4, 0.4};
  double basket_z = 0.075;  // goal is the box center (half of 0.15 m height)
  std::array<double, 2> basket_speed{0.05, 0.3};  // task2 only
  double obstacle_x_jitter = 0.05;                // +/- band on the x axis
};

/// Everything the transition function needs for one episode.
struct SceneConfig {
  TaskId task = TaskId::static_basket;
  Eigen::Vector3d basket_center{1.5, 0.0, 0.075};
  Eigen::Vector3d basket_velocity{Eigen::Vector3d::Zero()};
  std::optional<sim::ObstacleBox> obstacle;
  sim::ObjectParams object;
  std::uint64_t seed = 0;
};

struct ThrowAction {
  Eigen::Vector4d raw;       // in [-1,1]^4
  sim::SwingCommand decoded;
};

/// 19-dim state feature vector with named groups, packed in the fixed order
/// proprio(2), obs(3), goal(6), dist(6), time(2). Obstacle-free tasks carry
/// zeros in obs and the d^o features.
struct WorldState {
  static constexpr int kDim = 19;

  Eigen::Vector2d proprio{Eigen::Vector2d::Zero()};             // (j_i, j_f)
  Eigen::Vector3d obs{Eigen::Vector3d::Zero()};                 // obstacle center
  Eigen::Matrix<double, 6, 1> goal{Eigen::Matrix<double, 6, 1>::Zero()};  // pos + vel
  Eigen::Matrix<double, 6, 1> dist{Eigen::Matrix<double, 6, 1>::Zero()};  // d^g,d^g_x,d^g_y,d^o,d^o_x,d^o_y
  Eigen::Vector2d time{Eigen::Vector2d::Zero()};                // (t_r, tau)

  Eigen::Matrix<double, kDim, 1> to_vector() const;
  static WorldState from_vector(const Eigen::Matrix<double, kDim, 1>& v);
};

/// Compact flight record carried in transitions and logs (no path samples).
struct FlightSummary {
  Eigen::Vector3d release_position{Eigen::Vector3d::Zero()};
  Eigen::Vector3d release_velocity{Eigen::Vector3d::Zero()};
  double release_time = 0.0;
  bool collided = false;
  bool success = false;
  double dist_to_goal = 0.0;
  Eigen::Vector3d landing_point{Eigen::Vector3d::Zero()};
  double landing_time = 0.0;
  sim::FlightEnd end = sim::FlightEnd::rim_crossing;

  static FlightSummary from_outcome(const sim::FlightOutcome& o);
};

/// One single-throw episode: done is always true.
struct Transition {
  WorldState state;
  Eigen::Vector4d action{Eigen::Vector4d::Zero()};
  double reward = 0.0;
  WorldState next_state;
  bool done = true;
  FlightSummary outcome;
  sim::SwingCommand command;
  double yaw = 0.0;
};

/// Static environment parameters shared by every episode.
struct EnvConfig {
  sim::ArmModel arm;
  ActionRanges actions;
  SceneRanges scene;
  sim::BasketGeometry basket;
  double flight_dt = 1e-3;
};

/// Clamp to [-1,1] per component, then map affinely into the physical box.
/// Rejects non-finite input.
sim::SwingCommand decode_action(const Eigen::Vector4d& raw, const ActionRanges& ranges = {});

/// Inverse of decode_action for in-range commands.
Eigen::Vector4d encode_action(const sim::SwingCommand& cmd, const ActionRanges& ranges = {});

/// Collision -> -10 (takes precedence); success -> +1; otherwise -distance.
double reward_fn(const sim::FlightOutcome& outcome);
double reward_fn(const FlightSummary& outcome);

/// The six distance features of a finished throw, measured against the scene
/// the throw happened in: planar distance and |dx|,|dy| of the terminal point
/// to the goal (basket center at landing time) and to the obstacle center
/// (zeros when the scene has none).
Eigen::Matrix<double, 6, 1> distance_features(const SceneConfig& scene,
                                              const FlightSummary& outcome);

/// Pack the 19 features. Null executed/dist groups encode the cold-start
/// sentinel (zeros).
WorldState assemble_state(const SceneConfig& scene, const sim::SwingCommand* executed,
                          const Eigen::Matrix<double, 6, 1>* dist);

/// Deterministic lateral aiming: the four learned scalars shape the sagittal
/// swing only, so the heading is solved by predicting the drag-free landing
/// time and pointing the throw plane at the basket's predicted position.
double solve_yaw(const EnvConfig& cfg, const SceneConfig& scene, const sim::SwingCommand& cmd);

/// Pure transition function: decode, aim, swing, release (with jitter from
/// rng), fly, score. `state` is echoed into the transition unchanged.
Transition step_throw(const EnvConfig& cfg, const SceneConfig& scene, const WorldState& state,
                      const Eigen::Vector4d& raw_action, Rng& rng);

/// Stateful wrapper owning the episode lifecycle: reset samples a scene from
/// the seed; the initial state carries the previous episode's executed swing
/// and distance features (zeros on the very first episode).
class ThrowEnv {
 public:
  explicit ThrowEnv(EnvConfig cfg = {});

  void set_object(const sim::ObjectParams& object) { object_ = object; }
  const sim::ObjectParams& object() const { return object_; }

  std::pair<WorldState, SceneConfig> reset(TaskId task, std::uint64_t seed);
  Transition step(const Eigen::Vector4d& raw_action);

  const SceneConfig& scene() const { return scene_; }
  const WorldState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }

 private:
  EnvConfig cfg_;
  sim::ObjectParams object_;
  Rng rng_;
  SceneConfig scene_;
  WorldState state_;
  bool scene_ready_ = false;
  bool thrown_ = false;
  std::optional<sim::SwingCommand> prev_cmd_;
  std::optional<Eigen::Matrix<double, 6, 1>> prev_dist_;
};

/// Scene sampling used by reset; exposed for the coverage oracle.
SceneConfig sample_scene(const EnvConfig& cfg, TaskId task, const sim::ObjectParams& object,
                         std::uint64_t seed, Rng& rng);

}  // namespace toss::env
