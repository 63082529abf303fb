#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "traitfolio/env.hpp"
#include "traitfolio/error.hpp"
#include "traitfolio/io.hpp"
#include "traitfolio/nn.hpp"
#include "traitfolio/persona.hpp"
#include "traitfolio/seed.hpp"

namespace traitfolio::ddpg {

using nn::Matrix;
using nn::Vector;

struct Transition {
  Observation observation;
  Allocation allocation;
  double reward = 0.0;
  Observation next_observation;
  bool done = false;
};

// Fixed-capacity ring; the oldest transition is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
    storage_.reserve(capacity_);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return storage_.size(); }
  bool empty() const { return storage_.empty(); }

  void push(Transition transition) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(transition));
    } else {
      storage_[cursor_] = std::move(transition);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  // Uniform with replacement.
  std::vector<const Transition*> sample(std::size_t count, std::mt19937_64& rng) const {
    if (storage_.empty()) throw StateError("cannot sample an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    std::vector<const Transition*> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(&storage_[pick(rng)]);
    return out;
  }

  // Contents from oldest to newest.
  std::vector<const Transition*> chronological() const {
    std::vector<const Transition*> out;
    out.reserve(storage_.size());
    const std::size_t start = storage_.size() < capacity_ ? 0 : cursor_;
    for (std::size_t i = 0; i < storage_.size(); ++i) {
      out.push_back(&storage_[(start + i) % storage_.size()]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t cursor_ = 0;
};

// How the prior penalty reads "expected action under the policy".
enum class RegularizerMode {
  BatchMean,  // squared deviation of the batch-mean action
  PerSample,  // mean of per-sample squared deviations
};

inline std::string_view to_string(RegularizerMode mode) {
  return mode == RegularizerMode::BatchMean ? "batch_mean" : "per_sample";
}

struct AgentConfig {
  double actor_lr = 0.004;
  double critic_lr = 0.001;
  double tau = 0.05;
  double lambda = 2.0;
  std::size_t batch_size = 256;
  std::size_t steps_per_iteration = 256;
  std::size_t batches_per_iteration = 2;
  std::size_t buffer_capacity = 2048;
  // A shorter horizon keeps Q small next to lambda * L late in the episode,
  // where critic errors otherwise pull agents off their priors.
  double gamma = 0.95;
  // Logit noise. At 0.1 the critic sees too little action spread to separate
  // action value from state value.
  double exploration_sigma = 0.5;
  double exploration_sigma_final = 0.05;
  std::size_t iterations = 500;
  std::size_t hidden = 2000;
  RegularizerMode regularizer = RegularizerMode::BatchMean;

  void validate() const {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (batch_size == 0 || steps_per_iteration == 0 || hidden == 0) {
      throw ConfigError("batch_size, steps_per_iteration and hidden must be positive");
    }
    if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
    if (!(exploration_sigma >= 0.0) || !(exploration_sigma_final >= 0.0)) {
      throw ConfigError("exploration sigma must be non-negative");
    }
  }
};

inline constexpr std::size_t kCriticInputSize = kObservationSize + kNumAssets;

// Actor, critic and their targets, plus the optimizer state for the live nets.
class Agent {
 public:
  Agent(Prior prior, AgentConfig config, std::uint64_t seed)
      : prior_(prior), config_(config), seed_(seed) {
    prior_.validate();
    config_.validate();
    const std::size_t h = config_.hidden;
    actor_ = nn::DenseNet({kObservationSize, h, h, kNumAssets}, nn::OutputHead::Softmax,
                          derive_seed(seed, "actor"));
    critic_ = nn::DenseNet({kCriticInputSize, h, h, 1}, nn::OutputHead::Linear,
                           derive_seed(seed, "critic"));
    actor_target_ = actor_;
    critic_target_ = critic_;
    actor_opt_ = nn::Adam(actor_);
    critic_opt_ = nn::Adam(critic_);
  }

  // Restores an agent from saved networks; optimizer state starts fresh.
  Agent(Prior prior, AgentConfig config, std::uint64_t seed, nn::DenseNet actor,
        nn::DenseNet critic, nn::DenseNet actor_target, nn::DenseNet critic_target)
      : prior_(prior),
        config_(config),
        seed_(seed),
        actor_(std::move(actor)),
        critic_(std::move(critic)),
        actor_target_(std::move(actor_target)),
        critic_target_(std::move(critic_target)) {
    prior_.validate();
    config_.validate();
    if (actor_.head() != nn::OutputHead::Softmax || actor_.input_size() != kObservationSize ||
        actor_.output_size() != kNumAssets || !actor_.congruent(actor_target_)) {
      throw ShapeError("actor must map 12 observations to a 5-way softmax");
    }
    if (critic_.head() != nn::OutputHead::Linear || critic_.input_size() != kCriticInputSize ||
        critic_.output_size() != 1 || !critic_.congruent(critic_target_)) {
      throw ShapeError("critic must map 17 inputs to one linear output");
    }
    actor_opt_ = nn::Adam(actor_);
    critic_opt_ = nn::Adam(critic_);
  }

  const Prior& prior() const { return prior_; }
  const AgentConfig& config() const { return config_; }
  AgentConfig& config() { return config_; }
  std::uint64_t seed() const { return seed_; }

  nn::DenseNet& actor() { return actor_; }
  nn::DenseNet& critic() { return critic_; }
  nn::DenseNet& actor_target() { return actor_target_; }
  nn::DenseNet& critic_target() { return critic_target_; }
  const nn::DenseNet& actor() const { return actor_; }
  const nn::DenseNet& critic() const { return critic_; }
  const nn::DenseNet& actor_target() const { return actor_target_; }
  const nn::DenseNet& critic_target() const { return critic_target_; }
  nn::Adam& actor_optimizer() { return actor_opt_; }
  nn::Adam& critic_optimizer() { return critic_opt_; }

  // Greedy action.
  Allocation act(const Observation& observation) const {
    return to_allocation(actor_.forward(to_vector(observation)));
  }

  Policy greedy_policy() const {
    return [net = actor_](const Observation& o) {
      return to_allocation(net.forward(to_vector(o)));
    };
  }

  static Vector to_vector(const Observation& o) {
    return Eigen::Map<const Vector>(o.values.data(), kObservationSize);
  }

  static Allocation to_allocation(const Vector& v) {
    Allocation a;
    for (std::size_t j = 0; j < kNumAssets; ++j) a.weights[j] = v(static_cast<Eigen::Index>(j));
    return a;
  }

 private:
  Prior prior_;
  AgentConfig config_;
  std::uint64_t seed_;
  nn::DenseNet actor_;
  nn::DenseNet critic_;
  nn::DenseNet actor_target_;
  nn::DenseNet critic_target_;
  nn::Adam actor_opt_;
  nn::Adam critic_opt_;
};

// Wraps a frozen actor network as a policy.
inline Policy actor_policy(nn::DenseNet actor) {
  return [net = std::move(actor)](const Observation& o) {
    return Agent::to_allocation(net.forward(Agent::to_vector(o)));
  };
}

// ---------------------------------------------------------------------------
// Losses

namespace detail {

inline Matrix observations(const std::vector<const Transition*>& batch, bool next) {
  Matrix out(static_cast<Eigen::Index>(kObservationSize), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& o = next ? batch[b]->next_observation : batch[b]->observation;
    for (std::size_t i = 0; i < kObservationSize; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = o.values[i];
    }
  }
  return out;
}

inline Matrix stack(const Matrix& observations, const Matrix& actions) {
  Matrix out(observations.rows() + actions.rows(), observations.cols());
  out << observations, actions;
  return out;
}

inline Vector prior_vector(const Prior& prior) {
  return Eigen::Map<const Vector>(prior.weights.data(), kNumAssets);
}

}  // namespace detail

// L = (1/M) sum_j (mean_b a_jb - prior_j)^2 for BatchMean; the PerSample
// variant averages the squared deviation over samples instead. Actions are
// columns.
inline double regularization_term(const Matrix& actions, const Prior& prior,
                                  RegularizerMode mode = RegularizerMode::BatchMean) {
  if (actions.rows() != static_cast<Eigen::Index>(kNumAssets) || actions.cols() == 0) {
    throw ShapeError("regularization needs a non-empty 5 x batch action matrix");
  }
  const Vector target = detail::prior_vector(prior);
  const double m = static_cast<double>(kNumAssets);
  if (mode == RegularizerMode::BatchMean) {
    const Vector mean = actions.rowwise().mean();
    return (mean - target).squaredNorm() / m;
  }
  return (actions.colwise() - target).squaredNorm() / (m * static_cast<double>(actions.cols()));
}

// dL/d actions, same shape as `actions`.
inline Matrix regularization_gradient(const Matrix& actions, const Prior& prior,
                                      RegularizerMode mode = RegularizerMode::BatchMean) {
  const Vector target = detail::prior_vector(prior);
  const double m = static_cast<double>(kNumAssets);
  const double batch = static_cast<double>(actions.cols());
  if (mode == RegularizerMode::BatchMean) {
    const Vector mean = actions.rowwise().mean();
    const Vector per_column = (2.0 / (m * batch)) * (mean - target);
    return per_column.replicate(1, actions.cols());
  }
  return (2.0 / (m * batch)) * (actions.colwise() - target);
}

struct LossResult {
  double loss = 0.0;
  double regularization = 0.0;  // L, for the actor loss
  nn::Gradients gradients;      // w.r.t. the network being trained
};

// -mean_b Q(o_b, mu(o_b)) + lambda * L. Gradients are for the actor only.
inline LossResult actor_loss(const std::vector<const Transition*>& batch, const Agent& agent) {
  if (batch.empty()) throw DomainError("actor loss needs a non-empty batch");
  const double n = static_cast<double>(batch.size());
  const Matrix obs = detail::observations(batch, false);
  const auto actor_pass = agent.actor().forward_pass(obs);
  const Matrix& actions = actor_pass.output;
  const auto critic_pass = agent.critic().forward_pass(detail::stack(obs, actions));

  const double lambda = agent.config().lambda;
  const RegularizerMode mode = agent.config().regularizer;
  LossResult result;
  result.regularization = regularization_term(actions, agent.prior(), mode);
  result.loss = -critic_pass.output.mean() + lambda * result.regularization;

  const Matrix dq = Matrix::Constant(1, obs.cols(), -1.0 / n);
  const auto critic_grads = nn::backward(agent.critic(), critic_pass, dq);
  Matrix upstream = critic_grads.input.bottomRows(static_cast<Eigen::Index>(kNumAssets));
  if (lambda != 0.0) upstream += lambda * regularization_gradient(actions, agent.prior(), mode);
  result.gradients = nn::backward(agent.actor(), actor_pass, upstream);
  return result;
}

// mean (Q(o,a) - y)^2 with y = r + gamma (1 - done) Q'(o', mu'(o')).
inline LossResult critic_loss(const std::vector<const Transition*>& batch, const Agent& agent) {
  if (batch.empty()) throw DomainError("critic loss needs a non-empty batch");
  const auto count = static_cast<Eigen::Index>(batch.size());
  const Matrix obs = detail::observations(batch, false);
  const Matrix next_obs = detail::observations(batch, true);

  Matrix actions(static_cast<Eigen::Index>(kNumAssets), count);
  Vector targets(count);
  for (Eigen::Index b = 0; b < count; ++b) {
    const auto& t = *batch[static_cast<std::size_t>(b)];
    for (std::size_t j = 0; j < kNumAssets; ++j) {
      actions(static_cast<Eigen::Index>(j), b) = t.allocation.weights[j];
    }
    targets(b) = t.reward;
  }
  const double gamma = agent.config().gamma;
  if (gamma != 0.0) {
    const Matrix next_actions = agent.actor_target().forward_batch(next_obs);
    const Matrix next_q = agent.critic_target().forward_batch(detail::stack(next_obs, next_actions));
    for (Eigen::Index b = 0; b < count; ++b) {
      if (!batch[static_cast<std::size_t>(b)]->done) targets(b) += gamma * next_q(0, b);
    }
  }

  const auto pass = agent.critic().forward_pass(detail::stack(obs, actions));
  const Eigen::RowVectorXd error = pass.output.row(0) - targets.transpose();
  LossResult result;
  result.loss = error.squaredNorm() / static_cast<double>(count);
  result.gradients =
      nn::backward(agent.critic(), pass, (2.0 / static_cast<double>(count)) * error);
  return result;
}

// Gaussian noise on the actor's logits, then softmax: always on the simplex.
inline Allocation explore(const Agent& agent, const Observation& observation, double sigma,
                          std::mt19937_64& rng) {
  if (!(sigma >= 0.0)) throw DomainError("exploration sigma must be non-negative");
  Vector logits = agent.actor().logits(Agent::to_vector(observation));
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index j = 0; j < logits.size(); ++j) logits(j) += noise(rng);
  }
  return Agent::to_allocation(nn::softmax_columns(Matrix(logits)).col(0));
}

// ---------------------------------------------------------------------------
// Training

struct IterationLog {
  std::size_t iteration = 0;
  double regularization = 0.0;  // L
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double mean_return = 0.0;
};

using TrainingLog = std::vector<IterationLog>;

inline constexpr std::string_view kTrainingLogHeader =
    "iteration,L,actor_loss,critic_loss,mean_return";

inline std::string training_log_to_csv(const TrainingLog& log) {
  std::string out(kTrainingLogHeader);
  out += '\n';
  for (const auto& row : log) {
    out += std::to_string(row.iteration);
    for (double v : {row.regularization, row.actor_loss, row.critic_loss, row.mean_return}) {
      out += ',';
      out += io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

inline TrainingLog read_training_log_csv(const std::filesystem::path& path) {
  TrainingLog log;
  for (const auto& v : io::read_numeric_csv(path, kTrainingLogHeader)) {
    log.push_back({static_cast<std::size_t>(v[0]), v[1], v[2], v[3], v[4]});
  }
  return log;
}

using EnvFactory = std::function<AssetEnv()>;

// Collect -> update -> soft-update, strictly sequential. Episodes continue
// across iterations; a fresh one starts whenever the previous finishes.
class Trainer {
 public:
  Trainer(Agent& agent, EnvFactory factory, std::uint64_t seed)
      : agent_(agent),
        env_(factory()),
        buffer_(agent.config().buffer_capacity),
        rng_(seed) {}

  const ReplayBuffer& buffer() const { return buffer_; }

  // sigma decays linearly from exploration_sigma to exploration_sigma_final
  // over `total` iterations.
  double sigma_at(std::size_t iteration, std::size_t total) const {
    const auto& c = agent_.config();
    if (total <= 1) return c.exploration_sigma;
    const double frac = static_cast<double>(iteration) / static_cast<double>(total - 1);
    return c.exploration_sigma + (c.exploration_sigma_final - c.exploration_sigma) * frac;
  }

  IterationLog run_iteration(std::size_t iteration, std::size_t total) {
    const auto& config = agent_.config();
    const double sigma = sigma_at(iteration, total);

    std::vector<double> finished;
    for (std::size_t s = 0; s < config.steps_per_iteration; ++s) {
      if (needs_reset_) {
        observation_ = env_.reset();
        episode_return_ = 0.0;
        needs_reset_ = false;
      }
      const Allocation action = explore(agent_, observation_, sigma, rng_);
      const StepResult step = env_.step(action);
      buffer_.push({observation_, action, step.reward, step.observation, step.done});
      episode_return_ += step.reward;
      observation_ = step.observation;
      if (step.done) {
        finished.push_back(episode_return_);
        needs_reset_ = true;
      }
    }
    if (!finished.empty()) {
      double sum = 0.0;
      for (double r : finished) sum += r;
      last_return_ = sum / static_cast<double>(finished.size());
      have_return_ = true;
    }

    IterationLog log;
    log.iteration = iteration;
    log.mean_return = have_return_ ? last_return_ : episode_return_;

    if (buffer_.size() < config.batch_size) {
      // Warm-up: report the current losses without updating.
      const auto batch = buffer_.sample(config.batch_size, rng_);
      const auto critic = critic_loss(batch, agent_);
      const auto actor = actor_loss(batch, agent_);
      log.critic_loss = critic.loss;
      log.actor_loss = actor.loss;
      log.regularization = actor.regularization;
    } else {
      for (std::size_t b = 0; b < config.batches_per_iteration; ++b) {
        const auto batch = buffer_.sample(config.batch_size, rng_);
        const auto critic = critic_loss(batch, agent_);
        check_finite(critic.loss, "critic loss", iteration);
        agent_.critic_optimizer().step(agent_.critic(), critic.gradients, config.critic_lr);

        const auto actor = actor_loss(batch, agent_);
        check_finite(actor.loss, "actor loss", iteration);
        agent_.actor_optimizer().step(agent_.actor(), actor.gradients, config.actor_lr);

        nn::soft_update(agent_.critic_target(), agent_.critic(), config.tau);
        nn::soft_update(agent_.actor_target(), agent_.actor(), config.tau);

        log.critic_loss = critic.loss;
        log.actor_loss = actor.loss;
        log.regularization = actor.regularization;
      }
    }
    return log;
  }

  TrainingLog train(std::size_t iterations,
                    const std::function<void(const IterationLog&)>& on_iteration = {}) {
    TrainingLog log;
    log.reserve(iterations);
    for (std::size_t i = 0; i < iterations; ++i) {
      log.push_back(run_iteration(i, iterations));
      if (on_iteration) on_iteration(log.back());
    }
    return log;
  }

 private:
  static void check_finite(double value, std::string_view what, std::size_t iteration) {
    if (!std::isfinite(value)) {
      throw NumericalError(std::string(what) + " became non-finite at iteration " +
                           std::to_string(iteration));
    }
  }

  Agent& agent_;
  AssetEnv env_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  Observation observation_;
  bool needs_reset_ = true;
  double episode_return_ = 0.0;
  double last_return_ = 0.0;
  bool have_return_ = false;
};

inline TrainingLog train(Agent& agent, const EnvFactory& factory, std::size_t iterations,
                         std::uint64_t seed) {
  Trainer trainer(agent, factory, seed);
  return trainer.train(iterations);
}

}  // namespace traitfolio::ddpg
