#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "toss/nn.hpp"
#include "toss/rng.hpp"

namespace toss::rl {

/// Column-per-sample minibatch.
struct Batch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd done;  // 1.0 = terminal

  int size() const { return static_cast<int>(rewards.size()); }
};

/// The shared TD backup: r + gamma * (1 - done) * next_value. With
/// single-throw episodes (done = 1) this reduces to the raw reward.
Eigen::VectorXd td_targets(const Eigen::VectorXd& rewards, double gamma,
                           const Eigen::VectorXd& done, const Eigen::VectorXd& next_values);

/// FIFO ring buffer over flattened transitions; uniform sampling without
/// replacement within a batch.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int state_dim, int action_dim, std::size_t capacity = 1'000'000);

  void push(const Eigen::VectorXd& state, const Eigen::VectorXd& action, double reward,
            const Eigen::VectorXd& next_state, bool done);
  Batch sample(int n, Rng& rng) const;

  std::size_t size() const { return std::min(count_, capacity_); }
  std::size_t capacity() const { return capacity_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

 private:
  void ensure_slot(std::size_t slot);

  int state_dim_, action_dim_;
  std::size_t capacity_;
  std::size_t count_ = 0;  // total pushes
  Eigen::MatrixXd states_, actions_, next_states_;
  Eigen::VectorXd rewards_, done_;
};

/// State feature normalization applied before every network input; identity
/// by default. Stored in checkpoints.
struct StateNorm {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static StateNorm identity(int dim);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& states) const;
};

struct CheckpointMeta {
  std::string algorithm;
  std::string task;
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  int physics_version = 0;
  std::string extra_json;  // free-form run metadata
};

void write_checkpoint_header(std::ostream& os, const CheckpointMeta& meta);
CheckpointMeta read_checkpoint_header(std::istream& is);

// --- SAC --------------------------------------------------------------------

struct SacConfig {
  std::vector<int> hidden{256, 256};
  double lr = 3e-4;
  double gamma = 0.99;
  double polyak_tau = 0.005;
  int batch_size = 256;
  bool auto_alpha = true;
  double init_alpha = 1.0;
  /// NaN -> default -action_dim.
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
};

struct SacLosses {
  double critic1 = 0.0, critic2 = 0.0, policy = 0.0, alpha_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // batch estimate of -E[log pi]
  bool applied = true;   // false when a non-finite loss aborted the step
};

class SacAgent {
 public:
  SacAgent(int state_dim, int action_dim, SacConfig config, std::uint64_t seed);

  Eigen::VectorXd act(const Eigen::VectorXd& state, bool explore);
  Eigen::VectorXd act_exploit(const Eigen::VectorXd& state) const;  // tanh(mean)

  SacLosses update(const Batch& batch);

  /// min double-Q target values: r + gamma (1-done) (min Q_t - alpha log pi).
  Eigen::VectorXd critic_targets(const Batch& batch);

  double alpha() const { return std::exp(log_alpha_); }
  const SacConfig& config() const { return cfg_; }
  const nn::Mlp& policy() const { return policy_; }
  const nn::Mlp& q1() const { return q1_; }
  const nn::Mlp& q2() const { return q2_; }
  const nn::MlpParams& q1_target() const { return q1_target_; }
  const nn::MlpParams& q2_target() const { return q2_target_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  StateNorm& state_norm() { return norm_; }

  void save(std::ostream& os, CheckpointMeta meta) const;
  static SacAgent load(std::istream& is, CheckpointMeta* meta = nullptr);

 private:
  SacAgent() = default;

  int state_dim_ = 0, action_dim_ = 0;
  SacConfig cfg_;
  Rng rng_{0};
  nn::Mlp policy_, q1_, q2_;
  nn::MlpParams q1_target_, q2_target_;
  nn::AdamState opt_policy_, opt_q1_, opt_q2_;
  double log_alpha_ = 0.0;
  nn::ScalarAdam opt_alpha_;
  StateNorm norm_;
};

// --- DDPG -------------------------------------------------------------------

struct DdpgConfig {
  std::vector<int> hidden{256, 256};
  double lr = 3e-4;
  double gamma = 0.99;
  double polyak_tau = 0.005;
  int batch_size = 256;
  double exploration_sigma = 0.1;  // std on raw actions
  double policy_lr = std::numeric_limits<double>::quiet_NaN();  // NaN -> lr
};

struct DdpgLosses {
  double critic = 0.0, policy = 0.0;
  bool applied = true;
};

class DdpgAgent {
 public:
  DdpgAgent(int state_dim, int action_dim, DdpgConfig config, std::uint64_t seed);

  Eigen::VectorXd act(const Eigen::VectorXd& state, bool explore);
  Eigen::VectorXd act_exploit(const Eigen::VectorXd& state) const;

  DdpgLosses update(const Batch& batch);

  /// r + gamma (1-done) Q_t(s', mu_t(s')).
  Eigen::VectorXd critic_targets(const Batch& batch);

  const DdpgConfig& config() const { return cfg_; }
  const nn::Mlp& policy() const { return policy_; }
  const nn::Mlp& critic() const { return critic_; }
  const nn::MlpParams& policy_target() const { return policy_target_; }
  const nn::MlpParams& critic_target() const { return critic_target_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  StateNorm& state_norm() { return norm_; }

  void save(std::ostream& os, CheckpointMeta meta) const;
  static DdpgAgent load(std::istream& is, CheckpointMeta* meta = nullptr);

 private:
  DdpgAgent() = default;

  int state_dim_ = 0, action_dim_ = 0;
  DdpgConfig cfg_;
  Rng rng_{0};
  nn::Mlp policy_, critic_;
  nn::MlpParams policy_target_, critic_target_;
  nn::AdamState opt_policy_, opt_critic_;
  StateNorm norm_;
};

// --- Behavior Cloning --------------------------------------------------------

struct BcConfig {
  std::vector<int> hidden{256, 256};
  double lr = 3e-4;
  int epochs = 50;
  int batch_size = 256;
};

struct BcPolicy {
  nn::Mlp net;  // tanh head
  StateNorm norm;
  double final_loss = 0.0;

  Eigen::VectorXd act(const Eigen::VectorXd& state) const;

  void save(std::ostream& os, CheckpointMeta meta) const;
  static BcPolicy load(std::istream& is, CheckpointMeta* meta = nullptr);
};

/// Supervised regression on success-only observation/action pairs (columns).
/// Rejects an empty dataset.
BcPolicy bc_train(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                  const BcConfig& config, std::uint64_t seed);

}  // namespace toss::rl
