#include "audionav/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "audionav/errors.hpp"
#include "audionav/metrics.hpp"

namespace audionav::rl {

AudioBuffer StoredState::audio() const {
  AudioBuffer out;
  out.sample_rate = sample_rate;
  out.channels.emplace_back(left.begin(), left.end());
  out.channels.emplace_back(right.begin(), right.end());
  return out;
}

StatePtr store_state(const AudioBuffer& stereo, const AgentPose& pose, const acoustics::RoomSpec& room) {
  if (stereo.channel_count() != 2) throw DomainError("store_state: stereo audio required");
  auto s = std::make_shared<StoredState>();
  s->left.assign(stereo.channels[0].begin(), stereo.channels[0].end());
  s->right.assign(stereo.channels[1].begin(), stereo.channels[1].end());
  s->sample_rate = stereo.sample_rate;
  s->pose = pose;
  s->info = separation::agent_info(pose, room);
  return s;
}

template <typename T>
separation::ObservationPtr<T> observe(const StoredState& state) {
  return std::make_shared<const separation::Observation<T>>(separation::make_observation<T>(state.audio(), state.info));
}
template separation::ObservationPtr<float> observe<float>(const StoredState&);
template separation::ObservationPtr<double> observe<double>(const StoredState&);

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Experience e) {
  if (e.action < 0 || e.action >= kActions) throw DomainError("experience action out of range");
  if (!e.state || !e.next_state) throw DomainError("experience is missing a state");
  if (e.state->frames() != e.next_state->frames()) throw DomainError("experience excerpts differ in length");
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
}

std::vector<const Experience*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  if (n > items_.size()) throw DomainError("cannot sample more experiences than stored");
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Experience*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, idx.size() - 1)(rng);
    std::swap(idx[i], idx[j]);
    out.push_back(&items_[idx[i]]);
  }
  return out;
}

EpsilonSchedule EpsilonSchedule::reaching(double value, double steps, double start, double end) {
  if (!(value > end && value < start) || !(steps > 0.0)) {
    throw ConfigError("epsilon target must lie strictly between the endpoints after a positive step count");
  }
  return {start, end, std::log((start - end) / (value - end)) / steps};
}

double EpsilonSchedule::operator()(double t) const {
  return end + (start - end) * std::exp(-decay * std::max(t, 0.0));
}

int select_action(std::span<const double> q, double epsilon, std::mt19937_64& rng) {
  if (q.size() != static_cast<std::size_t>(kActions)) throw DomainError("select_action: expected 4 action values");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < epsilon) return random_policy(rng);
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

int random_policy(std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(0, kActions - 1)(rng);
}

int oracle_policy(const AgentPose& pose, std::span<const acoustics::SourceSpec> sources,
                  double rotation_increment_deg) {
  const acoustics::SourceSpec* nearest = nullptr;
  double best = 0.0;
  for (const auto& s : sources) {
    if (!s.active) continue;
    const double d = distance(pose.position, s.position);
    if (!nearest || d < best) {
      nearest = &s;
      best = d;
    }
  }
  if (!nearest) throw DomainError("oracle_policy: no active source");
  const Vec2 to = nearest->position - pose.position;
  const double delta = wrap_pi(std::atan2(to.y, to.x) - pose.heading);
  const double half = rotation_increment_deg * kPi / 360.0;
  if (std::abs(delta) <= half + 1e-12) return 0;
  return delta > 0.0 ? 3 : 2;
}

namespace {

void check_batch(const Mat<double>& q, const TdBatch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.actions.size());
  if (n == 0) throw DomainError("td loss of an empty batch");
  if (batch.rewards.size() != batch.actions.size() || batch.done.size() != batch.actions.size() ||
      q.cols() != n || q.rows() != kActions) {
    throw DomainError("td batch shapes disagree");
  }
  for (int a : batch.actions) {
    if (a < 0 || a >= kActions) throw DomainError("td batch action out of range");
  }
}

} // namespace

std::vector<double> td_targets(const Mat<double>& q_target, const TdBatch& batch, double gamma) {
  check_batch(q_target, batch);
  std::vector<double> y(batch.actions.size());
  for (std::size_t b = 0; b < y.size(); ++b) {
    y[b] = batch.rewards[b];
    if (!batch.done[b]) y[b] += gamma * q_target.col(static_cast<Eigen::Index>(b)).maxCoeff();
  }
  return y;
}

double td_loss(const Mat<double>& q_online, const Mat<double>& q_target, const TdBatch& batch, double gamma) {
  check_batch(q_online, batch);
  const auto y = td_targets(q_target, batch, gamma);
  double total = 0.0;
  for (std::size_t b = 0; b < y.size(); ++b) {
    total += std::abs(q_online(batch.actions[b], static_cast<Eigen::Index>(b)) - y[b]);
  }
  return total / static_cast<double>(y.size());
}

Mat<double> td_loss_gradient(const Mat<double>& q_online, std::span<const double> targets, const TdBatch& batch) {
  check_batch(q_online, batch);
  if (targets.size() != batch.actions.size()) throw DomainError("td targets length mismatch");
  Mat<double> g = Mat<double>::Zero(q_online.rows(), q_online.cols());
  const double inv = 1.0 / static_cast<double>(targets.size());
  for (std::size_t b = 0; b < targets.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    const double diff = q_online(batch.actions[b], col) - targets[b];
    g(batch.actions[b], col) = diff > 0.0 ? inv : (diff < 0.0 ? -inv : 0.0);
  }
  return g;
}

template <typename T>
double global_norm(ModelParams<T>& grads) {
  double sq = 0.0;
  grads.for_each_trainable([&](const char*, Mat<T>& m) { sq += m.template cast<double>().squaredNorm(); });
  return std::sqrt(sq);
}

template <typename T>
double clip_global_norm(ModelParams<T>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const T scale = static_cast<T>(max_norm / norm);
    grads.for_each_trainable([&](const char*, Mat<T>& m) { m *= scale; });
  }
  return norm;
}

template <typename T>
Adam<T>::Adam(const ModelParams<T>& like, AdamConfig config)
    : config_(config), m_(zeros_like(like)), v_(zeros_like(like)) {}

template <typename T>
void Adam<T>::step(ModelParams<T>& params, ModelParams<T>& grads) {
  ++t_;
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T lr = static_cast<T>(config_.learning_rate);
  const T eps = static_cast<T>(config_.epsilon);
  const T c1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
  const T c2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
  std::vector<Mat<T>*> g, m, v;
  grads.for_each_trainable([&](const char*, Mat<T>& x) { g.push_back(&x); });
  m_.for_each_trainable([&](const char*, Mat<T>& x) { m.push_back(&x); });
  v_.for_each_trainable([&](const char*, Mat<T>& x) { v.push_back(&x); });
  std::size_t i = 0;
  params.for_each_trainable([&](const char*, Mat<T>& p) {
    auto& mi = *m[i];
    auto& vi = *v[i];
    const auto& gi = *g[i];
    mi = b1 * mi + (T(1) - b1) * gi;
    vi = b2 * vi + (T(1) - b2) * gi.cwiseAbs2();
    p.array() -= lr * (mi.array() / c1) / ((vi.array() / c2).sqrt() + eps);
    ++i;
  });
}

template double global_norm<float>(ModelParams<float>&);
template double global_norm<double>(ModelParams<double>&);
template double clip_global_norm<float>(ModelParams<float>&, double);
template double clip_global_norm<double>(ModelParams<double>&, double);
template class Adam<float>;
template class Adam<double>;

void AgentConfig::validate() const {
  if (sources < 1 || hidden < 1 || q_hidden < 1) throw ConfigError("network sizes must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) throw ConfigError("buffer smaller than a batch");
  if (target_sync_interval < 1) throw ConfigError("target sync interval must be positive");
  if (!(epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end < 0.1 && epsilon_start > 0.1)) {
    throw ConfigError("epsilon endpoints must bracket 0.1 within [0, 1]");
  }
  if (!(epsilon_half_budget > 0.0)) throw ConfigError("epsilon budget must be positive");
  if (train_every < 1) throw ConfigError("train_every must be positive");
  if (!(excerpt_s > 0.0)) throw ConfigError("excerpt length must be positive");
}

namespace {

ModelInit model_init(const AgentConfig& c) {
  ModelInit init;
  init.sources = c.sources;
  init.hidden = c.hidden;
  init.q_hidden = c.q_hidden;
  init.seed = c.seed;
  return init;
}

} // namespace

DqnAgent::DqnAgent(AgentConfig config) : DqnAgent(config, init_model<float>((config.validate(), model_init(config)))) {}

DqnAgent::DqnAgent(AgentConfig config, ModelParams<float> params)
    : config_(config),
      online_(std::move(params)),
      target_(online_),
      adam_(online_, config.adam),
      buffer_(config.buffer_capacity),
      rng_(config.seed ^ 0xd1b54a32d192ed03ULL) {
  config_.validate();
  if (online_.sources() != config_.sources) throw ConfigError("model source count differs from the agent config");
  schedule_ = EpsilonSchedule::reaching(0.1, config_.epsilon_half_budget, config_.epsilon_start, config_.epsilon_end);
}

StatePtr DqnAgent::perceive(const AudioBuffer& state, const AgentPose& pose, const acoustics::RoomSpec& room) {
  return store_state(dsp::excerpt(state, config_.excerpt_s, rng_), pose, room);
}

std::vector<double> DqnAgent::q_values(const StoredState& state) const {
  const std::array<separation::ObservationPtr<float>, 1> batch{observe<float>(state)};
  const auto tape = forward_pipeline<float>(online_, batch, separation::BatchNormMode::Inference);
  std::vector<double> q(kActions);
  for (int a = 0; a < kActions; ++a) q[static_cast<std::size_t>(a)] = tape.q(a, 0);
  return q;
}

int DqnAgent::act(const StoredState& state, double epsilon) {
  // Skip the network when the draw explores anyway; the RNG stream is
  // consumed exactly as select_action would.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  if (u < epsilon) return random_policy(rng_);
  const auto q = q_values(state);
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

double DqnAgent::epsilon() const { return schedule_(static_cast<double>(env_steps_)); }

TrainReport DqnAgent::on_env_step() {
  ++env_steps_;
  TrainReport report;
  if (env_steps_ % config_.train_every == 0) report = train_step();
  if (env_steps_ % config_.target_sync_interval == 0) sync_target();
  return report;
}

TrainReport DqnAgent::train_step() {
  TrainReport report;
  if (buffer_.size() < static_cast<std::size_t>(config_.batch_size)) {
    report.note = "buffer holds " + std::to_string(buffer_.size()) + " < " + std::to_string(config_.batch_size);
    return report;
  }
  const auto picks = buffer_.sample(static_cast<std::size_t>(config_.batch_size), rng_);
  std::vector<separation::ObservationPtr<float>> states, next_states;
  TdBatch batch;
  for (const Experience* e : picks) {
    states.push_back(observe<float>(*e->state));
    next_states.push_back(observe<float>(*e->next_state));
    batch.actions.push_back(e->action);
    batch.rewards.push_back(e->reward);
    batch.done.push_back(e->done ? 1 : 0);
  }
  const auto target_tape = forward_pipeline<float>(target_, next_states, separation::BatchNormMode::Inference);
  auto tape = forward_pipeline<float>(online_, states, separation::BatchNormMode::Training);
  const Mat<double> q_online = tape.q.cast<double>();
  const Mat<double> q_target = target_tape.q.cast<double>();
  const auto y = td_targets(q_target, batch, config_.gamma);
  report.loss = td_loss(q_online, q_target, batch, config_.gamma);
  const Mat<float> dq = td_loss_gradient(q_online, y, batch).cast<float>();
  ModelParams<float> grads = zeros_like(online_);
  backward(online_, tape, dq, grads);
  report.grad_norm = clip_global_norm(grads, config_.clip_norm);
  adam_.step(online_, grads);
  separation::update_running_stats(online_.mask, tape.mask);
  report.trained = true;
  ++train_steps_;
  return report;
}

void DqnAgent::sync_target() {
  target_ = online_;
  ++syncs_;
}

} // namespace audionav::rl
