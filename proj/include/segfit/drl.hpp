// Sequential multi-model fitting with a deterministic actor-critic learner.
//
// One episode walks the model indices i = 1..n. At step i the actor proposes
// theta_i from the one-hot encoding of i plus exploration noise, the reward is
// the gain f(theta_1..theta_i) - f(theta_1..theta_{i-1}), and the networks are
// updated from replayed minibatches. After every episode the noiseless actor
// solution (q(1), ..., q(n)) is scored and kept if it beats the incumbent.

#ifndef SEGFIT_DRL_HPP
#define SEGFIT_DRL_HPP

#include "segfit/fit_result.hpp"
#include "segfit/model.hpp"
#include "segfit/neural.hpp"
#include "segfit/objective.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segfit {

enum class NoiseKind { OrnsteinUhlenbeck, Gaussian };

struct NoiseConfig {
  NoiseKind kind = NoiseKind::OrnsteinUhlenbeck;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;     // in units of the half-width of the bounds
  double gauss_sigma = 0.2;  // same units
  double decay = 0.995;      // scale multiplier applied after each episode
};

struct DrlConfig {
  std::int64_t j_max = 100;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double actor_step = 1e-4;
  double critic_step = 1e-3;
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t replay_capacity = 10000;
  std::size_t minibatch = 64;
  std::size_t warmup = 64;
  std::size_t updates_per_step = 1;
  NoiseConfig noise;
  std::uint64_t seed = 1;
  bool timing = true;

  void validate() const {
    if (j_max < 0) throw std::invalid_argument("drl.j_max must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("drl.gamma must lie in [0,1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("drl.tau must lie in (0,1]");
    if (minibatch < 1 || replay_capacity < minibatch)
      throw std::invalid_argument("drl requires replay_capacity >= minibatch >= 1");
    if (!(actor_step > 0.0) || !(critic_step > 0.0))
      throw std::invalid_argument("drl step sizes must be positive");
    for (int h : actor_hidden)
      if (h <= 0) throw std::invalid_argument("drl.actor_hidden sizes must be positive");
    for (int h : critic_hidden)
      if (h <= 0) throw std::invalid_argument("drl.critic_hidden sizes must be positive");
    if (noise.ou_sigma < 0.0 || noise.gauss_sigma < 0.0 || noise.ou_theta < 0.0)
      throw std::invalid_argument("drl.noise parameters must be nonnegative");
    if (!(noise.decay > 0.0 && noise.decay <= 1.0))
      throw std::invalid_argument("drl.noise.decay must lie in (0,1]");
  }
};

/// One-hot encoding of model index i (1-based) among n.
inline Eigen::VectorXd encode_state(std::size_t i, std::size_t n) {
  if (i < 1 || i > n)
    throw std::invalid_argument("model index " + std::to_string(i) + " outside 1.." +
                                std::to_string(n));
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s[static_cast<Eigen::Index>(i - 1)] = 1.0;
  return s;
}

/// Ornstein-Uhlenbeck (dt = 1) or white Gaussian noise in normalized action units.
class ExplorationNoise {
 public:
  ExplorationNoise(NoiseConfig cfg, std::size_t dim)
      : cfg_(cfg), state_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

  void reset() { state_.setZero(); }
  void end_episode() { scale_ *= cfg_.decay; }
  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] const Eigen::VectorXd& state() const noexcept { return state_; }

  Eigen::VectorXd sample(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index k = 0; k < state_.size(); ++k) {
      if (cfg_.kind == NoiseKind::OrnsteinUhlenbeck)
        state_[k] += -cfg_.ou_theta * state_[k] + scale_ * cfg_.ou_sigma * normal(rng);
      else
        state_[k] = scale_ * cfg_.gauss_sigma * normal(rng);
    }
    return state_;
  }

 private:
  NoiseConfig cfg_;
  Eigen::VectorXd state_;
  double scale_ = 1.0;
};

/// Scene-unit theta -> [-1, 1] per component.
inline Eigen::VectorXd normalize_action(const RuleSpec& rule, std::span<const double> theta) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(theta.size()));
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const auto& b = rule.bounds()[k];
    a[static_cast<Eigen::Index>(k)] = (theta[k] - b.mid()) / (0.5 * b.width());
  }
  return a;
}

inline Params denormalize_action(const RuleSpec& rule, const Eigen::VectorXd& a) {
  Params theta(static_cast<std::size_t>(a.size()));
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const auto& b = rule.bounds()[k];
    theta[k] = b.mid() + 0.5 * b.width() * a[static_cast<Eigen::Index>(k)];
  }
  return clamp_to_bounds(rule, theta);
}

/// theta = bounds-mapped tanh actor output, plus noise when exploring, clamped.
inline Params act(const Mlp& actor, const Eigen::VectorXd& state, ExplorationNoise* noise,
                  const RuleSpec& rule, bool explore, std::mt19937_64& rng) {
  if (actor.output_size() != static_cast<int>(rule.dim()))
    throw std::invalid_argument("actor output size does not match rule dimension");
  Eigen::VectorXd a = actor.forward(state);
  if (explore && noise != nullptr) a += noise->sample(rng);
  return denormalize_action(rule, a);
}

struct Transition {
  Eigen::VectorXd state;
  Params action;
  double reward = 0.0;
  Eigen::VectorXd next_state;  // zeros when done
  bool done = false;
};

/// Fixed-capacity ring; once full, each push overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
    ring_.reserve(capacity_);
  }

  void push(Transition t) {
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(t));
    } else {
      ring_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
    ++pushed_;
  }

  [[nodiscard]] std::size_t size() const noexcept { return ring_.size(); }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::uint64_t total_pushed() const noexcept { return pushed_; }

  /// Entry `age` steps old (0 = newest).
  [[nodiscard]] const Transition& recent(std::size_t age) const {
    if (age >= ring_.size()) throw std::out_of_range("replay age out of range");
    return ring_[(cursor_ + capacity_ - 1 - age) % capacity_];
  }

  /// Uniform draw with replacement.
  [[nodiscard]] std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const {
    if (ring_.empty()) throw std::logic_error("sampling an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, ring_.size() - 1);
    std::vector<Transition> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(ring_[pick(rng)]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::uint64_t pushed_ = 0;
  std::vector<Transition> ring_;
};

/// Online and target actor/critic plus their optimizer states.
struct DdpgAgent {
  Mlp actor, critic, target_actor, target_critic;
  AdamState actor_opt, critic_opt;

  DdpgAgent(std::size_t n, std::size_t d, const DrlConfig& cfg, std::mt19937_64& rng) {
    std::vector<int> a_sizes{static_cast<int>(n)};
    a_sizes.insert(a_sizes.end(), cfg.actor_hidden.begin(), cfg.actor_hidden.end());
    a_sizes.push_back(static_cast<int>(d));
    std::vector<int> c_sizes{static_cast<int>(n + d)};
    c_sizes.insert(c_sizes.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
    c_sizes.push_back(1);
    actor = Mlp::random(a_sizes, Activation::Tanh, rng);
    critic = Mlp::random(c_sizes, Activation::Identity, rng);
    target_actor = actor;
    target_critic = critic;
    actor_opt = AdamState(actor, {cfg.actor_step});
    critic_opt = AdamState(critic, {cfg.critic_step});
  }
};

struct UpdateStats {
  double critic_loss = 0.0;
  double mean_q = 0.0;
};

/// Critic regression toward r + gamma (1 - done) Q'(s', mu'(s')), actor ascent
/// along dQ/da at a = mu(s), then soft target updates.
inline UpdateStats ddpg_update(DdpgAgent& agent, std::span<const Transition> batch,
                               const DrlConfig& cfg, const RuleSpec& rule) {
  if (batch.empty()) throw std::invalid_argument("ddpg_update needs a nonempty batch");
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index n = batch.front().state.size();
  const auto d = static_cast<Eigen::Index>(rule.dim());

  Eigen::MatrixXd s(n, B), s_next(n, B), sa(n + d, B);
  Eigen::VectorXd r(B), live(B);
  for (Eigen::Index k = 0; k < B; ++k) {
    const auto& t = batch[static_cast<std::size_t>(k)];
    s.col(k) = t.state;
    s_next.col(k) = t.next_state;
    sa.col(k) << t.state, normalize_action(rule, t.action);
    r[k] = t.reward;
    live[k] = t.done ? 0.0 : 1.0;
  }

  // Targets; terminal rows never touch the target networks' values.
  Eigen::MatrixXd sa_next(n + d, B);
  sa_next.topRows(n) = s_next;
  sa_next.bottomRows(d) = agent.target_actor.forward(s_next);
  const Eigen::RowVectorXd q_next = agent.target_critic.forward(sa_next).row(0);
  Eigen::RowVectorXd y(B);
  for (Eigen::Index k = 0; k < B; ++k)
    y[k] = live[k] > 0.0 ? r[k] + cfg.gamma * q_next[k] : r[k];

  const Eigen::RowVectorXd q = agent.critic.forward(sa).row(0);
  const Eigen::RowVectorXd err = q - y;
  UpdateStats stats{err.squaredNorm() / static_cast<double>(B), q.mean()};
  {
    const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(B)) * err;
    auto g = agent.critic.gradients(sa, upstream);
    adam_step(agent.critic, std::move(g.params), agent.critic_opt);
  }

  {
    const Eigen::MatrixXd mu = agent.actor.forward(s);
    Eigen::MatrixXd s_mu(n + d, B);
    s_mu.topRows(n) = s;
    s_mu.bottomRows(d) = mu;
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(1, B, 1.0 / static_cast<double>(B));
    const auto cg = agent.critic.gradients(s_mu, ones);
    const Eigen::MatrixXd dq_da = cg.input.bottomRows(d);
    auto ag = agent.actor.gradients(s, -dq_da);
    adam_step(agent.actor, std::move(ag.params), agent.actor_opt);
  }

  soft_update(agent.target_critic, agent.critic, cfg.tau);
  soft_update(agent.target_actor, agent.actor, cfg.tau);
  return stats;
}

/// Noiseless actor solution (q(1), ..., q(n)).
inline Solution greedy_solution(const Mlp& actor, const RuleSpec& rule, std::size_t n) {
  std::mt19937_64 unused(0);
  Solution s;
  for (std::size_t i = 1; i <= n; ++i)
    s.thetas.push_back(act(actor, encode_state(i, n), nullptr, rule, false, unused));
  return s;
}

inline Solution random_solution(const RuleSpec& rule, std::size_t n, std::mt19937_64& rng) {
  Solution s;
  for (std::size_t i = 0; i < n; ++i) {
    Params t;
    for (const auto& b : rule.bounds()) t.push_back(std::uniform_real_distribution<double>(b.lo, b.hi)(rng));
    s.thetas.push_back(std::move(t));
  }
  return s;
}

inline FitResult fit_drl(const Problem& problem, const DrlConfig& cfg) {
  cfg.validate();
  const std::size_t n = problem.n();
  const RuleSpec& rule = problem.rule();
  std::mt19937_64 rng(cfg.seed);

  FitResult result;
  result.ledger = CostLedger(cfg.timing);
  result.seed = cfg.seed;
  // The initial incumbent is scored outside the ledger so each episode costs
  // exactly n + 1 evaluations.
  result.best_solution = random_solution(rule, n, rng);
  result.best_score = verify(problem, result.best_solution);

  DdpgAgent agent(n, rule.dim(), cfg, rng);
  ReplayBuffer replay(cfg.replay_capacity);
  ExplorationNoise noise(cfg.noise, rule.dim());
  CostLedger& ledger = result.ledger;

  for (std::int64_t j = 1; j <= cfg.j_max; ++j) {
    noise.reset();
    EpisodeRecord episode;
    double f_prev = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      const auto state = encode_state(i, n);
      auto watch = ledger.stopwatch();
      Params theta = act(agent.actor, state, &noise, rule, true, rng);
      ledger.add_hypothesis_time(watch.seconds());

      episode.thetas.push_back(theta);
      const double f_curr = verify(problem, std::span<const Params>(episode.thetas), ledger);
      const double r = reward(f_curr, f_prev);
      episode.rewards.push_back(r);
      f_prev = f_curr;

      const bool done = (i == n);
      replay.push({state, std::move(theta), r,
                   done ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))
                        : encode_state(i + 1, n),
                   done});

      if (replay.size() >= cfg.warmup) {
        watch = ledger.stopwatch();
        for (std::size_t u = 0; u < cfg.updates_per_step; ++u) {
          const auto batch = replay.sample(cfg.minibatch, rng);
          ddpg_update(agent, batch, cfg, rule);
        }
        ledger.add_hypothesis_time(watch.seconds());
      }
    }
    episode.final_f = f_prev;
    result.episodes.push_back(std::move(episode));
    noise.end_episode();

    auto watch = ledger.stopwatch();
    Solution greedy = greedy_solution(agent.actor, rule, n);
    ledger.add_hypothesis_time(watch.seconds());
    const double g = verify(problem, greedy, ledger);
    if (g > result.best_score) {
      result.best_score = g;
      result.best_solution = std::move(greedy);
    }
    ledger.close_iteration(j);
    const auto& row = ledger.rows().back();
    result.trace.push_back(
        {j, g, result.best_score, ledger.f_evals(), row.t_hypothesis, row.t_verify});
  }
  result.actor = std::move(agent.actor);
  result.critic = std::move(agent.critic);
  return result;
}

}  // namespace segfit

#endif  // SEGFIT_DRL_HPP
