#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "toss/rng.hpp"

namespace toss::nn {

enum class Head { linear, tanh_bounded, gaussian };

const char* head_name(Head head);

/// Architecture of a plain ReLU MLP. A gaussian head doubles the final layer
/// width internally (mean rows then log-std rows).
struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden{256, 256};
  int output_dim = 1;
  Head head = Head::linear;

  int final_dim() const { return head == Head::gaussian ? 2 * output_dim : output_dim; }
  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
};

/// Per-layer weights (out x in) and biases. 64-bit floats throughout.
struct MlpParams {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  bool all_finite() const;
};

struct Mlp {
  MlpSpec spec;
  MlpParams params;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Fan-in uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and
/// biases alike.
Mlp make_mlp(const MlpSpec& spec, Rng& rng);

/// Activations cached by forward for the matching backward call. Columns are
/// batch samples.
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> hidden;  // post-ReLU, one per hidden layer
  Eigen::MatrixXd raw;                  // final affine output, before the head
  Eigen::MatrixXd out;                  // after the head
};

/// Batched forward pass: X is input_dim x N, result final_dim x N. The head
/// is applied last: identity, tanh, or (for gaussian) log-std rows clamped to
/// [kLogStdMin, kLogStdMax].
Eigen::MatrixXd forward(const MlpSpec& spec, const MlpParams& params, const Eigen::MatrixXd& x,
                        ForwardCache* cache = nullptr);
Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& x, ForwardCache* cache = nullptr);

/// Single-sample convenience.
Eigen::VectorXd forward1(const Mlp& mlp, const Eigen::VectorXd& x);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  bool all_finite() const;
};

/// Reverse-mode gradients for the scalar loss whose gradient w.r.t. the head
/// output is d_out (summed over batch columns; scale d_out for means).
/// Optionally also returns the gradient w.r.t. the input batch.
MlpGrads backward(const Mlp& mlp, const ForwardCache& cache, const Eigen::MatrixXd& d_out,
                  Eigen::MatrixXd* d_input = nullptr);

/// Bias-corrected Adam.
struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const Mlp& mlp, double lr = 3e-4);

/// One Adam update in place. Returns false (and leaves params untouched) when
/// the gradients are not finite.
bool adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state);

/// target <- (1 - tau) * target + tau * online, element-wise.
void polyak_update(MlpParams& target, const MlpParams& online, double tau);

/// Scalar Adam used for the SAC entropy temperature.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool update(double& param, double grad);
};

/// Batched squashed-Gaussian sample: u = mean + exp(log_std) * eps,
/// action = tanh(u); log_prob carries the tanh change-of-variables correction
/// summed over action dimensions.
struct GaussianSample {
  Eigen::MatrixXd action;   // k x N, strictly inside (-1,1)
  Eigen::MatrixXd u;        // pre-squash sample
  Eigen::MatrixXd eps;      // standard normal draws
  Eigen::VectorXd log_prob; // N
};

GaussianSample gaussian_head_sample(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std,
                                    Rng& rng);

/// log pi(a) of a squashed Gaussian evaluated at pre-squash value u.
Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std,
                                  const Eigen::MatrixXd& u);

/// Binary checkpoint segments (bit-exact round trip).
void write_mlp(std::ostream& os, const Mlp& mlp);
Mlp read_mlp(std::istream& is);
void write_params(std::ostream& os, const MlpParams& params);
MlpParams read_params(std::istream& is, const MlpSpec& spec);
void write_adam(std::ostream& os, const AdamState& state);
AdamState read_adam(std::istream& is);

}  // namespace toss::nn
