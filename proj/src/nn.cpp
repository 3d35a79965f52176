#include "toss/nn.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace toss::nn {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

void check_shapes(const MlpSpec& spec, const MlpParams& params) {
  if (params.w.size() != static_cast<std::size_t>(spec.layer_count()) ||
      params.b.size() != params.w.size())
    throw std::invalid_argument("mlp: layer count mismatch");
  int in = spec.input_dim;
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int out = l < static_cast<int>(spec.hidden.size()) ? spec.hidden[l] : spec.final_dim();
    if (params.w[l].rows() != out || params.w[l].cols() != in || params.b[l].size() != out)
      throw std::invalid_argument("mlp: parameter shape mismatch");
    in = out;
  }
}

}  // namespace

const char* head_name(Head head) {
  switch (head) {
    case Head::linear: return "linear";
    case Head::tanh_bounded: return "tanh";
    case Head::gaussian: return "gaussian";
  }
  return "unknown";
}

bool MlpParams::all_finite() const {
  for (const auto& m : w)
    if (!m.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return true;
}

bool MlpGrads::all_finite() const {
  for (const auto& m : w)
    if (!m.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return true;
}

Mlp make_mlp(const MlpSpec& spec, Rng& rng) {
  if (spec.input_dim <= 0 || spec.output_dim <= 0)
    throw std::invalid_argument("make_mlp: dims must be positive");
  for (int h : spec.hidden)
    if (h <= 0) throw std::invalid_argument("make_mlp: hidden dims must be positive");

  Mlp mlp;
  mlp.spec = spec;
  int in = spec.input_dim;
  for (int l = 0; l < spec.layer_count(); ++l) {
    const int out = l < static_cast<int>(spec.hidden.size()) ? spec.hidden[l] : spec.final_dim();
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    for (int c = 0; c < in; ++c)
      for (int r = 0; r < out; ++r) w(r, c) = rng.uniform(-bound, bound);
    Eigen::VectorXd b(out);
    for (int r = 0; r < out; ++r) b(r) = rng.uniform(-bound, bound);
    mlp.params.w.push_back(std::move(w));
    mlp.params.b.push_back(std::move(b));
    in = out;
  }
  return mlp;
}

Eigen::MatrixXd forward(const MlpSpec& spec, const MlpParams& params, const Eigen::MatrixXd& x,
                        ForwardCache* cache) {
  if (x.rows() != spec.input_dim) throw std::invalid_argument("forward: input dim mismatch");
  check_shapes(spec, params);

  if (cache) {
    cache->input = x;
    cache->hidden.clear();
  }
  Eigen::MatrixXd h = x;
  const int n_hidden = static_cast<int>(spec.hidden.size());
  for (int l = 0; l < n_hidden; ++l) {
    h = ((params.w[l] * h).colwise() + params.b[l]).cwiseMax(0.0);
    if (cache) cache->hidden.push_back(h);
  }
  Eigen::MatrixXd raw = (params.w[n_hidden] * h).colwise() + params.b[n_hidden];
  if (cache) cache->raw = raw;

  Eigen::MatrixXd out;
  switch (spec.head) {
    case Head::linear:
      out = std::move(raw);
      break;
    case Head::tanh_bounded:
      out = raw.array().tanh();
      break;
    case Head::gaussian: {
      out = raw;
      out.bottomRows(spec.output_dim) =
          out.bottomRows(spec.output_dim).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
      break;
    }
  }
  if (cache) cache->out = out;
  return out;
}

Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& x, ForwardCache* cache) {
  return forward(mlp.spec, mlp.params, x, cache);
}

Eigen::VectorXd forward1(const Mlp& mlp, const Eigen::VectorXd& x) {
  return forward(mlp, x, nullptr).col(0);
}

MlpGrads backward(const Mlp& mlp, const ForwardCache& cache, const Eigen::MatrixXd& d_out,
                  Eigen::MatrixXd* d_input) {
  const MlpSpec& spec = mlp.spec;
  const int n_hidden = static_cast<int>(spec.hidden.size());
  if (d_out.rows() != spec.final_dim() || d_out.cols() != cache.input.cols())
    throw std::invalid_argument("backward: output gradient shape mismatch");

  // Head gradient -> gradient w.r.t. the final affine output.
  Eigen::MatrixXd d_raw;
  switch (spec.head) {
    case Head::linear:
      d_raw = d_out;
      break;
    case Head::tanh_bounded:
      d_raw = d_out.cwiseProduct((1.0 - cache.out.array().square()).matrix());
      break;
    case Head::gaussian: {
      d_raw = d_out;
      const int k = spec.output_dim;
      // Hard clamp on log-std: zero gradient outside the open interval.
      auto raw_ls = cache.raw.bottomRows(k).array();
      d_raw.bottomRows(k) =
          (raw_ls > kLogStdMin && raw_ls < kLogStdMax)
              .select(d_out.bottomRows(k).array(), 0.0)
              .matrix();
      break;
    }
  }

  MlpGrads grads;
  grads.w.resize(n_hidden + 1);
  grads.b.resize(n_hidden + 1);

  Eigen::MatrixXd delta = std::move(d_raw);
  for (int l = n_hidden; l >= 0; --l) {
    const Eigen::MatrixXd& below = l == 0 ? cache.input : cache.hidden[l - 1];
    grads.w[l].noalias() = delta * below.transpose();
    grads.b[l] = delta.rowwise().sum();
    if (l == 0) {
      if (d_input) d_input->noalias() = mlp.params.w[0].transpose() * delta;
      break;
    }
    Eigen::MatrixXd d_below = mlp.params.w[l].transpose() * delta;
    // ReLU gate: strictly positive activations pass gradient.
    delta = (cache.hidden[l - 1].array() > 0.0).select(d_below.array(), 0.0).matrix();
  }
  return grads;
}

AdamState make_adam(const Mlp& mlp, double lr) {
  AdamState st;
  st.lr = lr;
  for (std::size_t l = 0; l < mlp.params.w.size(); ++l) {
    st.mw.push_back(Eigen::MatrixXd::Zero(mlp.params.w[l].rows(), mlp.params.w[l].cols()));
    st.vw.push_back(Eigen::MatrixXd::Zero(mlp.params.w[l].rows(), mlp.params.w[l].cols()));
    st.mb.push_back(Eigen::VectorXd::Zero(mlp.params.b[l].size()));
    st.vb.push_back(Eigen::VectorXd::Zero(mlp.params.b[l].size()));
  }
  return st;
}

bool adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state) {
  if (!grads.all_finite()) return false;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    state.mw[l] = state.beta1 * state.mw[l] + (1.0 - state.beta1) * grads.w[l];
    state.vw[l] = state.beta2 * state.vw[l].array() + (1.0 - state.beta2) * grads.w[l].array().square();
    params.w[l].array() -=
        state.lr * (state.mw[l].array() / bc1) / ((state.vw[l].array() / bc2).sqrt() + state.eps);
    state.mb[l] = state.beta1 * state.mb[l] + (1.0 - state.beta1) * grads.b[l];
    state.vb[l] = state.beta2 * state.vb[l].array() + (1.0 - state.beta2) * grads.b[l].array().square();
    params.b[l].array() -=
        state.lr * (state.mb[l].array() / bc1) / ((state.vb[l].array() / bc2).sqrt() + state.eps);
  }
  return true;
}

void polyak_update(MlpParams& target, const MlpParams& online, double tau) {
  for (std::size_t l = 0; l < target.w.size(); ++l) {
    target.w[l] = (1.0 - tau) * target.w[l] + tau * online.w[l];
    target.b[l] = (1.0 - tau) * target.b[l] + tau * online.b[l];
  }
}

bool ScalarAdam::update(double& param, double grad) {
  if (!std::isfinite(grad)) return false;
  step += 1;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mh = m / (1.0 - std::pow(beta1, static_cast<double>(step)));
  const double vh = v / (1.0 - std::pow(beta2, static_cast<double>(step)));
  param -= lr * mh / (std::sqrt(vh) + eps);
  return true;
}

GaussianSample gaussian_head_sample(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std,
                                    Rng& rng) {
  GaussianSample gs;
  const Eigen::Index k = mean.rows(), n = mean.cols();
  gs.eps.resize(k, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < k; ++i) gs.eps(i, j) = rng.normal();
  gs.u = mean + log_std.array().exp().matrix().cwiseProduct(gs.eps);
  gs.action = gs.u.array().tanh();
  gs.log_prob = gaussian_log_prob(mean, log_std, gs.u);
  return gs;
}

Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& log_std,
                                  const Eigen::MatrixXd& u) {
  const Eigen::Index k = mean.rows(), n = mean.cols();
  Eigen::VectorXd lp = Eigen::VectorXd::Zero(n);
  constexpr double kLog2 = std::numbers::ln2;
  for (Eigen::Index j = 0; j < n; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double ls = log_std(i, j);
      const double z = (u(i, j) - mean(i, j)) * std::exp(-ls);
      acc += -0.5 * z * z - ls - kHalfLog2Pi;
      // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), numerically stable.
      acc -= 2.0 * (kLog2 - u(i, j) - softplus(-2.0 * u(i, j)));
    }
    lp[j] = acc;
  }
  return lp;
}

// --- binary checkpoint segments -------------------------------------------

namespace {

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

void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  put<std::int64_t>(os, m.rows());
  put<std::int64_t>(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd get_matrix(std::istream& is) {
  const auto rows = get<std::int64_t>(is);
  const auto cols = get<std::int64_t>(is);
  if (rows < 0 || cols < 0 || rows * cols > (1ll << 32))
    throw std::runtime_error("checkpoint: bad matrix dims");
  Eigen::MatrixXd m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!is) throw std::runtime_error("checkpoint: truncated matrix");
  return m;
}

void put_vector(std::ostream& os, const Eigen::VectorXd& v) {
  put<std::int64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double) * v.size()));
}

Eigen::VectorXd get_vector(std::istream& is) {
  const auto n = get<std::int64_t>(is);
  if (n < 0 || n > (1ll << 32)) throw std::runtime_error("checkpoint: bad vector size");
  Eigen::VectorXd v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("checkpoint: truncated vector");
  return v;
}

void put_spec(std::ostream& os, const MlpSpec& spec) {
  put<std::int32_t>(os, spec.input_dim);
  put<std::int32_t>(os, static_cast<std::int32_t>(spec.hidden.size()));
  for (int h : spec.hidden) put<std::int32_t>(os, h);
  put<std::int32_t>(os, spec.output_dim);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(spec.head));
}

MlpSpec get_spec(std::istream& is) {
  MlpSpec spec;
  spec.input_dim = get<std::int32_t>(is);
  const auto nh = get<std::int32_t>(is);
  if (nh < 0 || nh > 64) throw std::runtime_error("checkpoint: bad hidden layer count");
  spec.hidden.resize(nh);
  for (auto& h : spec.hidden) h = get<std::int32_t>(is);
  spec.output_dim = get<std::int32_t>(is);
  spec.head = static_cast<Head>(get<std::uint8_t>(is));
  return spec;
}

}  // namespace

void write_params(std::ostream& os, const MlpParams& params) {
  put<std::int32_t>(os, static_cast<std::int32_t>(params.w.size()));
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    put_matrix(os, params.w[l]);
    put_vector(os, params.b[l]);
  }
}

MlpParams read_params(std::istream& is, const MlpSpec& spec) {
  MlpParams params;
  const auto n = get<std::int32_t>(is);
  if (n != spec.layer_count()) throw std::runtime_error("checkpoint: layer count mismatch");
  for (int l = 0; l < n; ++l) {
    params.w.push_back(get_matrix(is));
    params.b.push_back(get_vector(is));
  }
  check_shapes(spec, params);
  return params;
}

void write_mlp(std::ostream& os, const Mlp& mlp) {
  put_spec(os, mlp.spec);
  write_params(os, mlp.params);
}

Mlp read_mlp(std::istream& is) {
  Mlp mlp;
  mlp.spec = get_spec(is);
  mlp.params = read_params(is, mlp.spec);
  return mlp;
}

void write_adam(std::ostream& os, const AdamState& state) {
  put<std::int64_t>(os, state.step);
  put(os, state.lr);
  put(os, state.beta1);
  put(os, state.beta2);
  put(os, state.eps);
  put<std::int32_t>(os, static_cast<std::int32_t>(state.mw.size()));
  for (std::size_t l = 0; l < state.mw.size(); ++l) {
    put_matrix(os, state.mw[l]);
    put_matrix(os, state.vw[l]);
    put_vector(os, state.mb[l]);
    put_vector(os, state.vb[l]);
  }
}

AdamState read_adam(std::istream& is) {
  AdamState state;
  state.step = get<std::int64_t>(is);
  state.lr = get<double>(is);
  state.beta1 = get<double>(is);
  state.beta2 = get<double>(is);
  state.eps = get<double>(is);
  const auto n = get<std::int32_t>(is);
  if (n < 0 || n > 64) throw std::runtime_error("checkpoint: bad adam layer count");
  for (int l = 0; l < n; ++l) {
    state.mw.push_back(get_matrix(is));
    state.vw.push_back(get_matrix(is));
    state.mb.push_back(get_vector(is));
    state.vb.push_back(get_vector(is));
  }
  return state;
}

}  // namespace toss::nn
