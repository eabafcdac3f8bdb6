#include "audionav/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "audionav/errors.hpp"
#include "audionav/format.hpp"

namespace audionav::env {

using acoustics::RoomSpec;
using acoustics::SourceSpec;

void EnvConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
  if (!(rotation_increment_deg > 0.0 && rotation_increment_deg < 360.0)) {
    throw ConfigError("rotation_increment must lie in (0, 360) degrees");
  }
  if (!(threshold_radius > 0.0)) throw ConfigError("threshold_radius must be positive");
  if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (!(state_duration_s > 0.0)) throw ConfigError("state_duration_s must be positive");
  if (!(wall_margin > 0.0)) throw ConfigError("wall_margin must be positive");
}

std::size_t GameState::sources_remaining() const {
  return static_cast<std::size_t>(std::count_if(sources.begin(), sources.end(), [](const SourceSpec& s) { return s.active; }));
}

Layout sample_layout(const RoomSpec& room, std::size_t source_count, const EnvConfig& config, std::mt19937_64& rng) {
  constexpr int kAttempts = 10'000;
  const double r = config.threshold_radius;
  std::uniform_real_distribution<double> ux(room.bbox_min().x, room.bbox_min().x + room.width());
  std::uniform_real_distribution<double> uy(room.bbox_min().y, room.bbox_min().y + room.height());
  std::uniform_real_distribution<double> uh(0.0, kTwoPi);

  Layout layout;
  int attempts = 0;
  while (layout.sources.size() < source_count) {
    if (++attempts > kAttempts) throw ConfigError("cannot place sources: room too small for the threshold radius");
    const Vec2 p{ux(rng), uy(rng)};
    if (!room.contains(p) || room.wall_clearance(p) <= r) continue;
    const bool clear = std::all_of(layout.sources.begin(), layout.sources.end(),
                                   [&](Vec2 q) { return distance(p, q) > 2.0 * r; });
    if (clear) layout.sources.push_back(p);
  }
  for (attempts = 0;; ++attempts) {
    if (attempts >= kAttempts) throw ConfigError("cannot place agent outside every threshold radius");
    const Vec2 p{ux(rng), uy(rng)};
    if (!room.contains(p) || room.wall_clearance(p) < config.wall_margin) continue;
    const bool clear = std::all_of(layout.sources.begin(), layout.sources.end(),
                                   [&](Vec2 q) { return distance(p, q) > r; });
    if (clear) {
      layout.agent = {p, uh(rng)};
      return layout;
    }
  }
}

namespace {

bool admissible(const RoomSpec& room, Vec2 p, double margin) {
  return room.contains(p) && room.wall_clearance(p) >= margin - 1e-12;
}

Vec2 translate(const Vec2 start, const Vec2 delta, const RoomSpec& room, double margin) {
  const Vec2 target = start + delta;
  const double length = delta.norm();
  if (length == 0.0) return start;
  const Vec2 unit = delta * (1.0 / length);

  double t_hit = std::numeric_limits<double>::infinity();
  std::size_t hit_wall = 0;
  for (std::size_t w = 0; w < room.wall_count(); ++w) {
    const Segment s = room.wall(w);
    if (auto hit = intersect_segments(start, target, s.a, s.b); hit && hit->t < t_hit) {
      t_hit = hit->t;
      hit_wall = w;
    }
  }
  if (!std::isfinite(t_hit) && admissible(room, target, margin)) return target;

  double reach = length;
  if (std::isfinite(t_hit)) {
    const Segment s = room.wall(hit_wall);
    const Vec2 inward{-s.direction().y / s.length(), s.direction().x / s.length()};
    const double approach = -dot(unit, inward);
    if (approach > 0.0) reach = std::max(0.0, t_hit * length - margin / approach);
    else reach = std::max(0.0, t_hit * length);
  }
  Vec2 candidate = start + unit * reach;
  if (admissible(room, candidate, margin)) return candidate;
  if (!admissible(room, start, margin)) return start;
  // Corners: keep the farthest admissible point along the path.
  double lo = 0.0, hi = reach;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(room, start + unit * mid, margin)) lo = mid;
    else hi = mid;
  }
  return start + unit * lo;
}

double nearest_of(const GameState& state, const std::vector<std::size_t>& indices) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i : indices) best = std::min(best, distance(state.pose.position, state.sources[i].position));
  return best;
}

std::vector<std::size_t> active_indices(const GameState& state) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < state.sources.size(); ++i) {
    if (state.sources[i].active) out.push_back(i);
  }
  return out;
}

} // namespace

AgentPose apply_action(const AgentPose& pose, int action, const EnvConfig& config, const RoomSpec& room) {
  const double increment = config.rotation_increment_deg * kPi / 180.0;
  const Vec2 heading{std::cos(pose.heading), std::sin(pose.heading)};
  AgentPose next = pose;
  switch (action) {
    case kForward:
      next.position = translate(pose.position, heading * config.step_size, room, config.wall_margin);
      break;
    case kBackward:
      next.position = translate(pose.position, heading * -config.step_size, room, config.wall_margin);
      break;
    case kRotateRight:
      next.heading = wrap_two_pi(pose.heading - increment);
      break;
    case kRotateLeft:
      next.heading = wrap_two_pi(pose.heading + increment);
      break;
    default:
      throw DomainError("unknown action " + std::to_string(action));
  }
  return next;
}

double min_source_distance(const GameState& state) {
  const auto active = active_indices(state);
  if (active.empty()) throw DomainError("no active sources");
  return nearest_of(state, active);
}

Environment::Environment(EnvConfig config, RoomSpec room, std::vector<std::vector<double>> source_signals)
    : config_(config), room_(std::move(room)), signals_(std::move(source_signals)), rng_(config.seed) {
  config_.validate();
  if (signals_.empty()) throw DomainError("at least one source signal is required");
  for (const auto& s : signals_) {
    if (s.empty()) throw DomainError("source signal is empty");
  }
}

AudioBuffer Environment::reset() {
  Layout layout;
  if (config_.fixed_layout && fixed_) {
    layout = *fixed_;
  } else {
    layout = sample_layout(room_, signals_.size(), config_, rng_);
    if (config_.fixed_layout) fixed_ = layout;
  }
  return reset(layout);
}

AudioBuffer Environment::reset(const Layout& layout) {
  if (layout.sources.size() != signals_.size()) throw DomainError("layout source count differs from the signals");
  if (!room_.contains(layout.agent.position)) throw DomainError("layout agent lies outside the room");
  for (const Vec2& p : layout.sources) {
    if (!room_.contains(p)) throw DomainError("layout source lies outside the room");
  }
  state_ = GameState{};
  state_.pose = layout.agent;
  for (std::size_t i = 0; i < signals_.size(); ++i) {
    SourceSpec s;
    s.position = layout.sources[i];
    s.signal = signals_[i];
    s.threshold_radius = config_.threshold_radius;
    state_.sources.push_back(std::move(s));
  }
  initial_ = state_;
  started_ = true;
  return render();
}

AudioBuffer Environment::render() {
  rendered_playheads_.clear();
  for (const auto& s : state_.sources) rendered_playheads_.push_back(s.playhead);
  AudioBuffer out;
  std::size_t window = acoustics::render_length(room_, config_.state_duration_s);
  if (config_.render_states) {
    out = acoustics::render_binaural(room_, state_.sources, state_.pose, config_.state_duration_s);
    window = out.frames();
  } else {
    out.sample_rate = room_.sample_rate();
  }
  for (auto& s : state_.sources) {
    if (s.signal.size() > window) s.playhead = (s.playhead + window) % s.signal.size();
  }
  return out;
}

StepResult Environment::step(int action) {
  if (!started_) throw StateError("step called before reset");
  if (state_.done) throw StateError("episode already finished");
  if (action < 0 || action >= kActionCount) throw DomainError("unknown action " + std::to_string(action));

  const auto before = active_indices(state_);
  const double previous = nearest_of(state_, before);
  state_.pose = apply_action(state_.pose, action, config_, room_);

  StepResult result;
  int captured = 0;
  for (std::size_t i : before) {
    SourceSpec& s = state_.sources[i];
    if (distance(state_.pose.position, s.position) <= s.threshold_radius) {
      s.active = false;
      ++captured;
    }
  }
  result.reward = config_.step_penalty + config_.found_reward * captured;
  if (config_.dense_rewards) {
    result.info.shaping = previous - nearest_of(state_, before);
    result.reward += result.info.shaping;
  }
  ++state_.steps;

  const std::size_t remaining = state_.sources_remaining();
  if (remaining == 0) {
    state_.won = true;
    state_.done = true;
  } else {
    result.state = render();
    state_.done = state_.steps >= config_.max_steps;
  }
  result.done = state_.done;
  result.won = state_.won;
  result.info.steps = state_.steps;
  result.info.sources_remaining = static_cast<int>(remaining);
  result.info.captured = captured;
  for (const auto& s : state_.sources) result.info.distances.push_back(distance(state_.pose.position, s.position));
  return result;
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw DomainError("cannot open trace file: " + path.string());
  out_ << "episode,step,action,reward,x,y,heading,sources_remaining\n";
}

void TraceWriter::write(int episode, int step, int action, double reward, const AgentPose& pose, std::size_t remaining) {
  out_ << episode << ',' << step << ',' << action << ',' << format_double(reward) << ','
       << format_double(pose.position.x) << ',' << format_double(pose.position.y) << ','
       << format_double(pose.heading) << ',' << remaining << '\n';
}

} // namespace audionav::env
