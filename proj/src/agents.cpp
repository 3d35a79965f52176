#include "toss/agents.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "toss/version.hpp"

namespace toss::rl {

namespace {

constexpr char kMagic[8] = {'T', 'O', 'S', 'S', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n > (1u << 24)) throw std::runtime_error("checkpoint: oversized string");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

void put_vec(std::ostream& os, const Eigen::VectorXd& v) {
  put<std::int64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double) * v.size()));
}

Eigen::VectorXd get_vec(std::istream& is) {
  const auto n = get<std::int64_t>(is);
  if (n < 0 || n > (1 << 24)) throw std::runtime_error("checkpoint: bad vector size");
  Eigen::VectorXd v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("checkpoint: truncated vector");
  return v;
}

void put_norm(std::ostream& os, const StateNorm& norm) {
  put_vec(os, norm.mean);
  put_vec(os, norm.scale);
}

StateNorm get_norm(std::istream& is) {
  StateNorm n;
  n.mean = get_vec(is);
  n.scale = get_vec(is);
  return n;
}

void put_scalar_adam(std::ostream& os, const nn::ScalarAdam& a) {
  put(os, a.m);
  put(os, a.v);
  put<std::int64_t>(os, a.step);
  put(os, a.lr);
  put(os, a.beta1);
  put(os, a.beta2);
  put(os, a.eps);
}

nn::ScalarAdam get_scalar_adam(std::istream& is) {
  nn::ScalarAdam a;
  a.m = get<double>(is);
  a.v = get<double>(is);
  a.step = get<std::int64_t>(is);
  a.lr = get<double>(is);
  a.beta1 = get<double>(is);
  a.beta2 = get<double>(is);
  a.eps = get<double>(is);
  return a;
}

Eigen::VectorXd row_as_vector(const Eigen::MatrixXd& m) { return m.row(0).transpose(); }

}  // namespace

Eigen::VectorXd td_targets(const Eigen::VectorXd& rewards, double gamma,
                           const Eigen::VectorXd& done, const Eigen::VectorXd& next_values) {
  return rewards.array() + gamma * (1.0 - done.array()) * next_values.array();
}

// --- ReplayBuffer ------------------------------------------------------------

ReplayBuffer::ReplayBuffer(int state_dim, int action_dim, std::size_t capacity)
    : state_dim_(state_dim), action_dim_(action_dim), capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
}

void ReplayBuffer::ensure_slot(std::size_t slot) {
  const auto cols = static_cast<std::size_t>(states_.cols());
  if (slot < cols) return;
  std::size_t grow = std::max<std::size_t>(1024, cols * 2);
  grow = std::min(grow, capacity_);
  states_.conservativeResize(state_dim_, grow);
  actions_.conservativeResize(action_dim_, grow);
  next_states_.conservativeResize(state_dim_, grow);
  rewards_.conservativeResize(grow);
  done_.conservativeResize(grow);
}

void ReplayBuffer::push(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                        double reward, const Eigen::VectorXd& next_state, bool done) {
  if (state.size() != state_dim_ || next_state.size() != state_dim_ ||
      action.size() != action_dim_)
    throw std::invalid_argument("ReplayBuffer::push: dim mismatch");
  const std::size_t slot = count_ % capacity_;  // FIFO overwrite once full
  ensure_slot(slot);
  states_.col(slot) = state;
  actions_.col(slot) = action;
  next_states_.col(slot) = next_state;
  rewards_[slot] = reward;
  done_[slot] = done ? 1.0 : 0.0;
  ++count_;
}

Batch ReplayBuffer::sample(int n, Rng& rng) const {
  const std::size_t sz = size();
  if (n <= 0 || static_cast<std::size_t>(n) > sz)
    throw std::invalid_argument("ReplayBuffer::sample: batch larger than buffer");

  // Floyd's algorithm: n distinct indices in [0, sz).
  std::vector<std::uint32_t> picked;
  picked.reserve(n);
  std::unordered_set<std::uint32_t> seen;
  seen.reserve(n * 2);
  for (std::size_t i = sz - n; i < sz; ++i) {
    const auto j = static_cast<std::uint32_t>(rng.below(i + 1));
    const std::uint32_t idx = seen.insert(j).second ? j : static_cast<std::uint32_t>(i);
    if (idx != j) seen.insert(idx);
    picked.push_back(idx);
  }

  Batch b;
  b.states.resize(state_dim_, n);
  b.actions.resize(action_dim_, n);
  b.next_states.resize(state_dim_, n);
  b.rewards.resize(n);
  b.done.resize(n);
  for (int k = 0; k < n; ++k) {
    const auto idx = picked[k];
    b.states.col(k) = states_.col(idx);
    b.actions.col(k) = actions_.col(idx);
    b.next_states.col(k) = next_states_.col(idx);
    b.rewards[k] = rewards_[idx];
    b.done[k] = done_[idx];
  }
  return b;
}

// --- StateNorm ----------------------------------------------------------------

StateNorm StateNorm::identity(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::MatrixXd StateNorm::apply(const Eigen::MatrixXd& states) const {
  return ((states.colwise() - mean).array().colwise() / scale.array()).matrix();
}

// --- checkpoint header ---------------------------------------------------------

void write_checkpoint_header(std::ostream& os, const CheckpointMeta& meta) {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put_string(os, meta.algorithm);
  put_string(os, meta.task);
  put<std::uint64_t>(os, meta.steps);
  put<std::uint64_t>(os, meta.seed);
  put<std::int32_t>(os, meta.physics_version ? meta.physics_version : kPhysicsVersion);
  put_string(os, meta.extra_json);
}

CheckpointMeta read_checkpoint_header(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != static_cast<std::uint32_t>(kCheckpointVersion))
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  CheckpointMeta meta;
  meta.algorithm = get_string(is);
  meta.task = get_string(is);
  meta.steps = get<std::uint64_t>(is);
  meta.seed = get<std::uint64_t>(is);
  meta.physics_version = get<std::int32_t>(is);
  meta.extra_json = get_string(is);
  return meta;
}

// --- SAC ----------------------------------------------------------------------

SacAgent::SacAgent(int state_dim, int action_dim, SacConfig config, std::uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim), cfg_(std::move(config)), rng_(seed) {
  if (std::isnan(cfg_.target_entropy)) cfg_.target_entropy = -static_cast<double>(action_dim);
  if (cfg_.init_alpha <= 0.0) throw std::invalid_argument("SacAgent: alpha must be positive");

  policy_ = nn::make_mlp({state_dim, cfg_.hidden, action_dim, nn::Head::gaussian}, rng_);
  q1_ = nn::make_mlp({state_dim + action_dim, cfg_.hidden, 1, nn::Head::linear}, rng_);
  q2_ = nn::make_mlp({state_dim + action_dim, cfg_.hidden, 1, nn::Head::linear}, rng_);
  q1_target_ = q1_.params;
  q2_target_ = q2_.params;
  opt_policy_ = nn::make_adam(policy_, cfg_.lr);
  opt_q1_ = nn::make_adam(q1_, cfg_.lr);
  opt_q2_ = nn::make_adam(q2_, cfg_.lr);
  log_alpha_ = std::log(cfg_.init_alpha);
  opt_alpha_.lr = cfg_.lr;
  norm_ = StateNorm::identity(state_dim);
}

Eigen::VectorXd SacAgent::act(const Eigen::VectorXd& state, bool explore) {
  if (!explore) return act_exploit(state);
  const Eigen::MatrixXd out = nn::forward(policy_, norm_.apply(state));
  const auto gs = nn::gaussian_head_sample(out.topRows(action_dim_),
                                           out.bottomRows(action_dim_), rng_);
  return gs.action.col(0);
}

Eigen::VectorXd SacAgent::act_exploit(const Eigen::VectorXd& state) const {
  const Eigen::MatrixXd out = nn::forward(policy_, norm_.apply(state));
  return out.topRows(action_dim_).col(0).array().tanh();
}

Eigen::VectorXd SacAgent::critic_targets(const Batch& batch) {
  const int n = batch.size();
  const double alpha = std::exp(log_alpha_);
  const Eigen::MatrixXd s2 = norm_.apply(batch.next_states);
  const Eigen::MatrixXd out2 = nn::forward(policy_, s2);
  const auto gs2 =
      nn::gaussian_head_sample(out2.topRows(action_dim_), out2.bottomRows(action_dim_), rng_);
  Eigen::MatrixXd in2(state_dim_ + action_dim_, n);
  in2 << s2, gs2.action;
  const Eigen::VectorXd q1t = row_as_vector(nn::forward(q1_.spec, q1_target_, in2));
  const Eigen::VectorXd q2t = row_as_vector(nn::forward(q2_.spec, q2_target_, in2));
  const Eigen::VectorXd next_v =
      q1t.cwiseMin(q2t).array() - alpha * gs2.log_prob.array();
  return td_targets(batch.rewards, cfg_.gamma, batch.done, next_v);
}

SacLosses SacAgent::update(const Batch& batch) {
  const int n = batch.size();
  SacLosses losses;
  const double alpha = std::exp(log_alpha_);
  losses.alpha = alpha;

  const Eigen::VectorXd y = critic_targets(batch);

  // Critic regression toward the min double-Q target.
  const Eigen::MatrixXd sn = norm_.apply(batch.states);
  Eigen::MatrixXd in(state_dim_ + action_dim_, n);
  in << sn, batch.actions;
  for (auto [net, opt, loss_out] :
       {std::tuple{&q1_, &opt_q1_, &losses.critic1}, std::tuple{&q2_, &opt_q2_, &losses.critic2}}) {
    nn::ForwardCache cache;
    const Eigen::VectorXd q = row_as_vector(nn::forward(*net, in, &cache));
    const Eigen::VectorXd err = q - y;
    *loss_out = err.squaredNorm() / n;
    const Eigen::MatrixXd d_out = (2.0 / n) * err.transpose();
    const nn::MlpGrads grads = nn::backward(*net, cache, d_out);
    if (!nn::adam_step(net->params, grads, *opt)) losses.applied = false;
  }

  // Policy: ascend min Q minus the entropy penalty, via the reparameterized
  // sample a = tanh(mu + sigma * eps).
  nn::ForwardCache cache_pi;
  const Eigen::MatrixXd out = nn::forward(policy_, sn, &cache_pi);
  const Eigen::MatrixXd mean = out.topRows(action_dim_);
  const Eigen::MatrixXd log_std = out.bottomRows(action_dim_);
  const auto gs = nn::gaussian_head_sample(mean, log_std, rng_);

  Eigen::MatrixXd in_pi(state_dim_ + action_dim_, n);
  in_pi << sn, gs.action;
  nn::ForwardCache cq1, cq2;
  const Eigen::VectorXd q1p = row_as_vector(nn::forward(q1_, in_pi, &cq1));
  const Eigen::VectorXd q2p = row_as_vector(nn::forward(q2_, in_pi, &cq2));
  const Eigen::VectorXd qmin = q1p.cwiseMin(q2p);
  losses.policy = (alpha * gs.log_prob - qmin).mean();
  losses.entropy = -gs.log_prob.mean();

  // dL/da through whichever critic attains the min (param grads unused here).
  const Eigen::RowVectorXd pick1 =
      (q1p.array() <= q2p.array()).cast<double>().transpose() * (-1.0 / n);
  const Eigen::RowVectorXd pick2 =
      (q2p.array() < q1p.array()).cast<double>().transpose() * (-1.0 / n);
  Eigen::MatrixXd d_in1, d_in2;
  nn::backward(q1_, cq1, pick1, &d_in1);
  nn::backward(q2_, cq2, pick2, &d_in2);
  const Eigen::MatrixXd d_action = d_in1.bottomRows(action_dim_) + d_in2.bottomRows(action_dim_);

  // Chain through tanh and the log-prob terms:
  //   d/d mu      = dQ/da (1 - a^2) + (alpha/n) 2a
  //   d/d log_std = (d/d mu) sigma eps - alpha/n
  const Eigen::ArrayXXd a = gs.action.array();
  const Eigen::MatrixXd d_mean =
      (d_action.array() * (1.0 - a.square()) + (alpha / n) * 2.0 * a).matrix();
  const Eigen::MatrixXd sigma_eps = (log_std.array().exp() * gs.eps.array()).matrix();
  const Eigen::MatrixXd d_log_std =
      (d_mean.array() * sigma_eps.array() - alpha / n).matrix();
  Eigen::MatrixXd d_out_pi(2 * action_dim_, n);
  d_out_pi << d_mean, d_log_std;
  const nn::MlpGrads gp = nn::backward(policy_, cache_pi, d_out_pi);
  if (!nn::adam_step(policy_.params, gp, opt_policy_)) losses.applied = false;

  // Temperature: push the average sample log-prob toward -target_entropy.
  if (cfg_.auto_alpha) {
    const double grad = -(gs.log_prob.array() + cfg_.target_entropy).mean();
    losses.alpha_loss = -log_alpha_ * (gs.log_prob.array() + cfg_.target_entropy).mean();
    if (!opt_alpha_.update(log_alpha_, grad)) losses.applied = false;
  }

  nn::polyak_update(q1_target_, q1_.params, cfg_.polyak_tau);
  nn::polyak_update(q2_target_, q2_.params, cfg_.polyak_tau);
  return losses;
}

void SacAgent::save(std::ostream& os, CheckpointMeta meta) const {
  meta.algorithm = "sac";
  write_checkpoint_header(os, meta);
  put<std::int32_t>(os, state_dim_);
  put<std::int32_t>(os, action_dim_);
  put(os, cfg_.lr);
  put(os, cfg_.gamma);
  put(os, cfg_.polyak_tau);
  put<std::int32_t>(os, cfg_.batch_size);
  put<std::uint8_t>(os, cfg_.auto_alpha ? 1 : 0);
  put(os, cfg_.init_alpha);
  put(os, cfg_.target_entropy);
  put_norm(os, norm_);
  nn::write_mlp(os, policy_);
  nn::write_mlp(os, q1_);
  nn::write_mlp(os, q2_);
  nn::write_params(os, q1_target_);
  nn::write_params(os, q2_target_);
  nn::write_adam(os, opt_policy_);
  nn::write_adam(os, opt_q1_);
  nn::write_adam(os, opt_q2_);
  put(os, log_alpha_);
  put_scalar_adam(os, opt_alpha_);
}

SacAgent SacAgent::load(std::istream& is, CheckpointMeta* meta_out) {
  const CheckpointMeta meta = read_checkpoint_header(is);
  if (meta.algorithm != "sac") throw std::runtime_error("checkpoint: not a sac checkpoint");
  if (meta_out) *meta_out = meta;
  SacAgent a;
  a.state_dim_ = get<std::int32_t>(is);
  a.action_dim_ = get<std::int32_t>(is);
  a.cfg_.lr = get<double>(is);
  a.cfg_.gamma = get<double>(is);
  a.cfg_.polyak_tau = get<double>(is);
  a.cfg_.batch_size = get<std::int32_t>(is);
  a.cfg_.auto_alpha = get<std::uint8_t>(is) != 0;
  a.cfg_.init_alpha = get<double>(is);
  a.cfg_.target_entropy = get<double>(is);
  a.norm_ = get_norm(is);
  a.policy_ = nn::read_mlp(is);
  a.q1_ = nn::read_mlp(is);
  a.q2_ = nn::read_mlp(is);
  a.cfg_.hidden = a.policy_.spec.hidden;
  a.q1_target_ = nn::read_params(is, a.q1_.spec);
  a.q2_target_ = nn::read_params(is, a.q2_.spec);
  a.opt_policy_ = nn::read_adam(is);
  a.opt_q1_ = nn::read_adam(is);
  a.opt_q2_ = nn::read_adam(is);
  a.log_alpha_ = get<double>(is);
  a.opt_alpha_ = get_scalar_adam(is);
  a.rng_.reseed(meta.seed);
  return a;
}

// --- DDPG ---------------------------------------------------------------------

DdpgAgent::DdpgAgent(int state_dim, int action_dim, DdpgConfig config, std::uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim), cfg_(std::move(config)), rng_(seed) {
  if (cfg_.exploration_sigma < 0.0)
    throw std::invalid_argument("DdpgAgent: exploration sigma must be >= 0");
  if (std::isnan(cfg_.policy_lr)) cfg_.policy_lr = cfg_.lr;

  policy_ = nn::make_mlp({state_dim, cfg_.hidden, action_dim, nn::Head::tanh_bounded}, rng_);
  critic_ = nn::make_mlp({state_dim + action_dim, cfg_.hidden, 1, nn::Head::linear}, rng_);
  policy_target_ = policy_.params;
  critic_target_ = critic_.params;
  opt_policy_ = nn::make_adam(policy_, cfg_.policy_lr);
  opt_critic_ = nn::make_adam(critic_, cfg_.lr);
  norm_ = StateNorm::identity(state_dim);
}

Eigen::VectorXd DdpgAgent::act(const Eigen::VectorXd& state, bool explore) {
  Eigen::VectorXd a = act_exploit(state);
  if (explore && cfg_.exploration_sigma > 0.0) {
    for (int i = 0; i < action_dim_; ++i) a[i] += rng_.normal(0.0, cfg_.exploration_sigma);
    a = a.cwiseMax(-1.0).cwiseMin(1.0);
  }
  return a;
}

Eigen::VectorXd DdpgAgent::act_exploit(const Eigen::VectorXd& state) const {
  return nn::forward(policy_, norm_.apply(state)).col(0);
}

Eigen::VectorXd DdpgAgent::critic_targets(const Batch& batch) {
  const int n = batch.size();
  const Eigen::MatrixXd s2 = norm_.apply(batch.next_states);
  const Eigen::MatrixXd a2 = nn::forward(policy_.spec, policy_target_, s2);
  Eigen::MatrixXd in2(state_dim_ + action_dim_, n);
  in2 << s2, a2;
  const Eigen::VectorXd qt = row_as_vector(nn::forward(critic_.spec, critic_target_, in2));
  return td_targets(batch.rewards, cfg_.gamma, batch.done, qt);
}

DdpgLosses DdpgAgent::update(const Batch& batch) {
  const int n = batch.size();
  DdpgLosses losses;

  const Eigen::VectorXd y = critic_targets(batch);
  const Eigen::MatrixXd sn = norm_.apply(batch.states);

  Eigen::MatrixXd in(state_dim_ + action_dim_, n);
  in << sn, batch.actions;
  nn::ForwardCache cache_q;
  const Eigen::VectorXd q = row_as_vector(nn::forward(critic_, in, &cache_q));
  const Eigen::VectorXd err = q - y;
  losses.critic = err.squaredNorm() / n;
  const nn::MlpGrads gq = nn::backward(critic_, cache_q, (2.0 / n) * err.transpose());
  if (!nn::adam_step(critic_.params, gq, opt_critic_)) losses.applied = false;

  // Deterministic policy gradient: ascend Q(s, mu(s)).
  nn::ForwardCache cache_pi;
  const Eigen::MatrixXd a_pi = nn::forward(policy_, sn, &cache_pi);
  Eigen::MatrixXd in_pi(state_dim_ + action_dim_, n);
  in_pi << sn, a_pi;
  nn::ForwardCache cache_qpi;
  const Eigen::VectorXd q_pi = row_as_vector(nn::forward(critic_, in_pi, &cache_qpi));
  losses.policy = -q_pi.mean();
  Eigen::MatrixXd d_in;
  nn::backward(critic_, cache_qpi, Eigen::RowVectorXd::Constant(n, -1.0 / n), &d_in);
  const nn::MlpGrads gp =
      nn::backward(policy_, cache_pi, d_in.bottomRows(action_dim_));
  if (!nn::adam_step(policy_.params, gp, opt_policy_)) losses.applied = false;

  nn::polyak_update(policy_target_, policy_.params, cfg_.polyak_tau);
  nn::polyak_update(critic_target_, critic_.params, cfg_.polyak_tau);
  return losses;
}

void DdpgAgent::save(std::ostream& os, CheckpointMeta meta) const {
  meta.algorithm = "ddpg";
  write_checkpoint_header(os, meta);
  put<std::int32_t>(os, state_dim_);
  put<std::int32_t>(os, action_dim_);
  put(os, cfg_.lr);
  put(os, cfg_.policy_lr);
  put(os, cfg_.gamma);
  put(os, cfg_.polyak_tau);
  put<std::int32_t>(os, cfg_.batch_size);
  put(os, cfg_.exploration_sigma);
  put_norm(os, norm_);
  nn::write_mlp(os, policy_);
  nn::write_mlp(os, critic_);
  nn::write_params(os, policy_target_);
  nn::write_params(os, critic_target_);
  nn::write_adam(os, opt_policy_);
  nn::write_adam(os, opt_critic_);
}

DdpgAgent DdpgAgent::load(std::istream& is, CheckpointMeta* meta_out) {
  const CheckpointMeta meta = read_checkpoint_header(is);
  if (meta.algorithm != "ddpg") throw std::runtime_error("checkpoint: not a ddpg checkpoint");
  if (meta_out) *meta_out = meta;
  DdpgAgent a;
  a.state_dim_ = get<std::int32_t>(is);
  a.action_dim_ = get<std::int32_t>(is);
  a.cfg_.lr = get<double>(is);
  a.cfg_.policy_lr = get<double>(is);
  a.cfg_.gamma = get<double>(is);
  a.cfg_.polyak_tau = get<double>(is);
  a.cfg_.batch_size = get<std::int32_t>(is);
  a.cfg_.exploration_sigma = get<double>(is);
  a.norm_ = get_norm(is);
  a.policy_ = nn::read_mlp(is);
  a.critic_ = nn::read_mlp(is);
  a.cfg_.hidden = a.policy_.spec.hidden;
  a.policy_target_ = nn::read_params(is, a.policy_.spec);
  a.critic_target_ = nn::read_params(is, a.critic_.spec);
  a.opt_policy_ = nn::read_adam(is);
  a.opt_critic_ = nn::read_adam(is);
  a.rng_.reseed(meta.seed);
  return a;
}

// --- Behavior Cloning -----------------------------------------------------------

Eigen::VectorXd BcPolicy::act(const Eigen::VectorXd& state) const {
  return nn::forward(net, norm.apply(state)).col(0);
}

void BcPolicy::save(std::ostream& os, CheckpointMeta meta) const {
  meta.algorithm = "bc";
  write_checkpoint_header(os, meta);
  put(os, final_loss);
  put_norm(os, norm);
  nn::write_mlp(os, net);
}

BcPolicy BcPolicy::load(std::istream& is, CheckpointMeta* meta_out) {
  const CheckpointMeta meta = read_checkpoint_header(is);
  if (meta.algorithm != "bc") throw std::runtime_error("checkpoint: not a bc checkpoint");
  if (meta_out) *meta_out = meta;
  BcPolicy p;
  p.final_loss = get<double>(is);
  p.norm = get_norm(is);
  p.net = nn::read_mlp(is);
  return p;
}

BcPolicy bc_train(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                  const BcConfig& config, std::uint64_t seed) {
  const auto m = states.cols();
  if (m == 0) throw std::invalid_argument("bc_train: empty dataset");
  if (actions.cols() != m) throw std::invalid_argument("bc_train: state/action count mismatch");

  Rng rng(seed);
  BcPolicy policy;
  policy.norm = StateNorm::identity(static_cast<int>(states.rows()));
  policy.net = nn::make_mlp({static_cast<int>(states.rows()), config.hidden,
                             static_cast<int>(actions.rows()), nn::Head::tanh_bounded},
                            rng);
  nn::AdamState opt = nn::make_adam(policy.net, config.lr);

  std::vector<Eigen::Index> order(m);
  for (Eigen::Index i = 0; i < m; ++i) order[i] = i;
  const int bs = std::max(1, std::min<int>(config.batch_size, static_cast<int>(m)));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (Eigen::Index i = m - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
    for (Eigen::Index start = 0; start < m; start += bs) {
      const int nb = static_cast<int>(std::min<Eigen::Index>(bs, m - start));
      Eigen::MatrixXd x(states.rows(), nb), y(actions.rows(), nb);
      for (int k = 0; k < nb; ++k) {
        x.col(k) = states.col(order[start + k]);
        y.col(k) = actions.col(order[start + k]);
      }
      nn::ForwardCache cache;
      const Eigen::MatrixXd out = nn::forward(policy.net, x, &cache);
      const Eigen::MatrixXd err = out - y;
      const double scale = 2.0 / static_cast<double>(nb * actions.rows());
      const nn::MlpGrads grads = nn::backward(policy.net, cache, scale * err);
      nn::adam_step(policy.net.params, grads, opt);
    }
  }

  const Eigen::MatrixXd out = nn::forward(policy.net, states);
  policy.final_loss = (out - actions).squaredNorm() / static_cast<double>(m * actions.rows());
  return policy;
}

}  // namespace toss::rl
