// Small dense networks with exact backprop, Adam and target-network blending.
//
// Layers are affine maps W x + b. Hidden layers use tanh; the output layer
// uses identity (critic) or tanh (actor). Batched calls take one sample per
// column.

#ifndef SEGFIT_NEURAL_HPP
#define SEGFIT_NEURAL_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace segfit {

enum class Activation { Identity, Tanh };

/// Weights and biases of every layer; also the shape of gradients and moments.
struct ParamSet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  [[nodiscard]] ParamSet zeros_like() const {
    ParamSet z;
    for (const auto& w : weights) z.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) z.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return z;
  }

  [[nodiscard]] bool same_shape(const ParamSet& o) const noexcept {
    if (weights.size() != o.weights.size() || biases.size() != o.biases.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != o.weights[l].rows() || weights[l].cols() != o.weights[l].cols())
        return false;
      if (biases[l].size() != o.biases[l].size()) return false;
    }
    return true;
  }

  [[nodiscard]] std::size_t count() const noexcept {
    std::size_t n = 0;
    for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
    for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
    return n;
  }

  /// Visits matching coefficient blocks of this and `others...` layer by layer.
  template <typename F, typename... Rest>
  void zip(F&& f, Rest&... others) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      f(weights[l].array(), others.weights[l].array()...);
      f(biases[l].array(), others.biases[l].array()...);
    }
  }

  [[nodiscard]] bool all_finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

struct Gradients {
  ParamSet params;
  Eigen::MatrixXd input;  // d<upstream, output>/d input, one column per sample
};

class Mlp {
 public:
  Mlp() = default;

  /// Zero-initialized network.
  Mlp(std::vector<int> layer_sizes, Activation output)
      : sizes_(std::move(layer_sizes)), output_(output) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
    for (int s : sizes_)
      if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      params_.weights.push_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
      params_.biases.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
    }
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  static Mlp random(std::vector<int> layer_sizes, Activation output, std::mt19937_64& rng) {
    Mlp net(std::move(layer_sizes), output);
    for (std::size_t l = 0; l < net.params_.weights.size(); ++l) {
      const double r = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
      std::uniform_real_distribution<double> u(-r, r);
      auto& w = net.params_.weights[l];
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
      auto& b = net.params_.biases[l];
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
    }
    return net;
  }

  [[nodiscard]] const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  [[nodiscard]] int input_size() const noexcept { return sizes_.front(); }
  [[nodiscard]] int output_size() const noexcept { return sizes_.back(); }
  [[nodiscard]] Activation output_activation() const noexcept { return output_; }
  [[nodiscard]] std::size_t layers() const noexcept { return params_.weights.size(); }
  [[nodiscard]] const ParamSet& params() const noexcept { return params_; }
  [[nodiscard]] ParamSet& params() noexcept { return params_; }

  [[nodiscard]] bool same_architecture(const Mlp& o) const noexcept {
    return sizes_ == o.sizes_ && output_ == o.output_;
  }

  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const {
    if (input.rows() != input_size())
      throw std::invalid_argument("Mlp input has " + std::to_string(input.rows()) +
                                  " rows, expected " + std::to_string(input_size()));
    Eigen::MatrixXd a = input;
    for (std::size_t l = 0; l < layers(); ++l) {
      Eigen::MatrixXd z = params_.weights[l] * a;
      z.colwise() += params_.biases[l];
      a = activate(std::move(z), l);
    }
    return a;
  }

  [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& input) const {
    return forward(Eigen::MatrixXd(input));
  }

  /// Reverse-mode gradients of sum_columns <upstream, forward(input)>.
  [[nodiscard]] Gradients gradients(const Eigen::MatrixXd& input,
                                    const Eigen::MatrixXd& upstream) const {
    if (input.rows() != input_size()) throw std::invalid_argument("Mlp input shape mismatch");
    if (upstream.rows() != output_size() || upstream.cols() != input.cols())
      throw std::invalid_argument("upstream gradient shape mismatch");

    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(layers() + 1);
    acts.push_back(input);
    for (std::size_t l = 0; l < layers(); ++l) {
      Eigen::MatrixXd z = params_.weights[l] * acts.back();
      z.colwise() += params_.biases[l];
      acts.push_back(activate(std::move(z), l));
    }

    Gradients g{params_.zeros_like(), {}};
    Eigen::MatrixXd delta = upstream;
    for (std::size_t l = layers(); l-- > 0;) {
      if (uses_tanh(l)) delta.array() *= 1.0 - acts[l + 1].array().square();
      g.params.weights[l] = delta * acts[l].transpose();
      g.params.biases[l] = delta.rowwise().sum();
      delta = params_.weights[l].transpose() * delta;
    }
    g.input = std::move(delta);
    return g;
  }

  [[nodiscard]] Gradients gradients(const Eigen::VectorXd& input,
                                    const Eigen::VectorXd& upstream) const {
    return gradients(Eigen::MatrixXd(input), Eigen::MatrixXd(upstream));
  }

 private:
  [[nodiscard]] bool uses_tanh(std::size_t l) const noexcept {
    return l + 1 < layers() || output_ == Activation::Tanh;
  }

  [[nodiscard]] Eigen::MatrixXd activate(Eigen::MatrixXd z, std::size_t l) const {
    if (uses_tanh(l)) z = z.array().tanh();
    return z;
  }

  std::vector<int> sizes_;
  Activation output_ = Activation::Identity;
  ParamSet params_;
};

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  ParamSet m, v;
  std::int64_t steps = 0;

  AdamState() = default;
  AdamState(const Mlp& net, AdamConfig c)
      : cfg(c), m(net.params().zeros_like()), v(net.params().zeros_like()) {}
};

/// One bias-corrected Adam descent step.
inline void adam_step(Mlp& net, ParamSet grads, AdamState& state) {
  if (!grads.same_shape(net.params()) || !state.m.same_shape(net.params()))
    throw std::invalid_argument("adam_step: parameter shape mismatch");
  ++state.steps;
  const auto& c = state.cfg;
  const double t = static_cast<double>(state.steps);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  net.params().zip(
      [&](auto p, auto g, auto m, auto v) {
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.square();
        p -= c.step_size * (m / bc1) / ((v / bc2).sqrt() + c.epsilon);
      },
      grads, state.m, state.v);
}

/// target <- tau * online + (1 - tau) * target.
inline void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_architecture(online))
    throw std::invalid_argument("soft_update: architecture mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau outside [0,1]");
  if (tau == 1.0) {
    target.params() = online.params();
    return;
  }
  ParamSet src = online.params();
  target.params().zip([&](auto t, auto o) { t = tau * o + (1.0 - tau) * t; }, src);
}

// Text checkpoint:
//   SEGFIT-MLP-1
//   <activation identity|tanh> <layer count> <size_0> ... <size_L>
//   then per layer: weights row-major, then biases, one value per line.
inline constexpr const char* kMlpMagic = "SEGFIT-MLP-1";

inline void write_checkpoint(std::ostream& out, const Mlp& net) {
  out << kMlpMagic << '\n'
      << (net.output_activation() == Activation::Tanh ? "tanh" : "identity") << ' '
      << net.layer_sizes().size();
  for (int s : net.layer_sizes()) out << ' ' << s;
  out << '\n' << std::setprecision(17);
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const auto& w = net.params().weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << w(i, j) << '\n';
    const auto& b = net.params().biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) out << b[i] << '\n';
  }
}

inline Mlp read_checkpoint(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != kMlpMagic)
    throw std::runtime_error("not a SEGFIT-MLP-1 checkpoint");
  std::string act;
  std::size_t count = 0;
  if (!(in >> act >> count) || count < 2 || count > 1024)
    throw std::runtime_error("bad checkpoint header");
  if (act != "tanh" && act != "identity") throw std::runtime_error("bad checkpoint activation");
  std::vector<int> sizes(count);
  for (auto& s : sizes)
    if (!(in >> s) || s <= 0) throw std::runtime_error("bad checkpoint layer size");
  Mlp net(sizes, act == "tanh" ? Activation::Tanh : Activation::Identity);
  auto read = [&](double& v) {
    if (!(in >> v)) throw std::runtime_error("truncated checkpoint");
  };
  for (std::size_t l = 0; l < net.layers(); ++l) {
    auto& w = net.params().weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) read(w(i, j));
    auto& b = net.params().biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) read(b[i]);
  }
  if (!net.params().all_finite()) throw std::runtime_error("non-finite checkpoint parameter");
  return net;
}

inline void save_checkpoint(const std::string& path, const Mlp& net) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_checkpoint(out, net);
}

inline Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace segfit

#endif  // SEGFIT_NEURAL_HPP
