#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "audionav/audio.hpp"
#include "audionav/geometry.hpp"
#include "audionav/model.hpp"
#include "audionav/room.hpp"

namespace audionav::rl {

/// A stored observation: float stereo excerpt plus where the agent was.
struct StoredState {
  std::vector<float> left, right;
  double sample_rate = 8000.0;
  AgentPose pose;
  std::array<double, 4> info{};

  std::size_t frames() const { return left.size(); }
  AudioBuffer audio() const;
};
using StatePtr = std::shared_ptr<const StoredState>;

/// Throws DomainError unless `stereo` has two channels.
StatePtr store_state(const AudioBuffer& stereo, const AgentPose& pose, const acoustics::RoomSpec& room);

template <typename T>
separation::ObservationPtr<T> observe(const StoredState& state);

struct Experience {
  StatePtr state;
  int action = 0;
  double reward = 0.0;
  StatePtr next_state;
  bool done = false;
};

/// Fixed-capacity FIFO of experiences.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  /// Throws DomainError for an invalid action or unequal excerpt lengths.
  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Experience& operator[](std::size_t i) const { return items_[i]; }
  /// `n` distinct experiences chosen uniformly. Throws DomainError if n > size().
  std::vector<const Experience*> sample(std::size_t n, std::mt19937_64& rng) const;

private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

/// eps(t) = end + (start - end) * exp(-decay * t).
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double decay = 0.0;

  /// Decay chosen so eps reaches `value` after `steps` steps.
  static EpsilonSchedule reaching(double value, double steps, double start = 1.0, double end = 0.05);
  double operator()(double t) const;
};

/// Epsilon-greedy over `q` (ties go to the lowest index). Always consumes
/// one uniform draw, plus one more when exploring.
int select_action(std::span<const double> q, double epsilon, std::mt19937_64& rng);
int random_policy(std::mt19937_64& rng);
/// Rotate toward the nearest active source until the bearing error is
/// within half an increment, then walk. Throws DomainError when no
/// source is active.
int oracle_policy(const AgentPose& pose, std::span<const acoustics::SourceSpec> sources,
                  double rotation_increment_deg);

struct TdBatch {
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<char> done;
};

/// r + gamma * max Q_target(s', .), with the bootstrap dropped when done.
std::vector<double> td_targets(const Mat<double>& q_target, const TdBatch& batch, double gamma);
/// Mean over the batch of |Q(s, a) - target|. Throws DomainError for an
/// empty or inconsistent batch.
double td_loss(const Mat<double>& q_online, const Mat<double>& q_target, const TdBatch& batch, double gamma);
/// dLoss/dQ for td_loss: sign(Q(s,a) - target) / B on the taken action.
Mat<double> td_loss_gradient(const Mat<double>& q_online, std::span<const double> targets, const TdBatch& batch);

template <typename T>
double global_norm(ModelParams<T>& grads);
/// Scales grads so their global L2 norm is at most max_norm. Returns the
/// norm before clipping.
template <typename T>
double clip_global_norm(ModelParams<T>& grads, double max_norm);

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
public:
  Adam(const ModelParams<T>& like, AdamConfig config);
  void step(ModelParams<T>& params, ModelParams<T>& grads);
  long steps() const { return t_; }

private:
  AdamConfig config_;
  ModelParams<T> m_, v_;
  long t_ = 0;
};

struct AgentConfig {
  int sources = separation::kDefaultSources;
  int hidden = separation::kHiddenUnits;
  int q_hidden = kQHidden;
  double gamma = 0.99;
  AdamConfig adam;
  double clip_norm = 1.0;
  int batch_size = 50;
  std::size_t buffer_capacity = 10000;
  int target_sync_interval = 500;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Environment steps at which epsilon reaches 0.1.
  double epsilon_half_budget = 5000.0;
  /// Train once every this many environment steps.
  int train_every = 1;
  double excerpt_s = 4.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct TrainReport {
  bool trained = false;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::string note;
};

/// Online and target networks, optimizer, replay buffer and the agent's
/// own RNG stream.
class DqnAgent {
public:
  explicit DqnAgent(AgentConfig config);
  DqnAgent(AgentConfig config, ModelParams<float> params);

  /// Random excerpt of a rendered state, ready for acting and storage.
  StatePtr perceive(const AudioBuffer& state, const AgentPose& pose, const acoustics::RoomSpec& room);
  /// Q values of the online network in inference mode.
  std::vector<double> q_values(const StoredState& state) const;
  int act(const StoredState& state, double epsilon);
  double epsilon() const;

  void remember(Experience e) { buffer_.push(std::move(e)); }
  /// Counts an environment step: trains on schedule and syncs the target.
  TrainReport on_env_step();
  /// One gradient update from a uniform minibatch; a no-op while the
  /// buffer holds fewer than batch_size experiences.
  TrainReport train_step();
  void sync_target();

  const AgentConfig& config() const { return config_; }
  const ModelParams<float>& online() const { return online_; }
  const ModelParams<float>& target() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  long env_steps() const { return env_steps_; }
  long train_steps() const { return train_steps_; }
  long target_syncs() const { return syncs_; }

private:
  AgentConfig config_;
  ModelParams<float> online_, target_;
  Adam<float> adam_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  EpsilonSchedule schedule_;
  long env_steps_ = 0;
  long train_steps_ = 0;
  long syncs_ = 0;
};

} // namespace audionav::rl
