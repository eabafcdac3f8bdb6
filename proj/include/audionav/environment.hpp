#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <vector>

#include "audionav/audio.hpp"
#include "audionav/geometry.hpp"
#include "audionav/room.hpp"

namespace audionav::env {

enum Action : int { kForward = 0, kBackward = 1, kRotateRight = 2, kRotateLeft = 3 };
inline constexpr int kActionCount = 4;

struct EnvConfig {
  double step_size = 1.0;
  double rotation_increment_deg = 30.0;
  double threshold_radius = 1.0;
  int max_steps = 1000;
  double found_reward = 100.0;
  double step_penalty = -0.5;
  bool dense_rewards = false;
  bool fixed_layout = false;
  double state_duration_s = 5.0;
  std::uint64_t seed = 0;
  /// Translations stop this far inside the first wall on their path.
  double wall_margin = 0.01;
  /// When false, reset() and step() return empty states; useful for
  /// policies that never look at audio. Playheads advance either way.
  bool render_states = true;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct Layout {
  std::vector<Vec2> sources;
  AgentPose agent;
};

struct GameState {
  AgentPose pose;
  std::vector<acoustics::SourceSpec> sources;
  int steps = 0;
  bool done = false;
  bool won = false;

  std::size_t sources_remaining() const;
};

struct StepInfo {
  int steps = 0;
  int sources_remaining = 0;
  int captured = 0;
  /// Agent-to-source distance for every source, active or not.
  std::vector<double> distances;
  /// Dense shaping term included in the reward (0 when disabled).
  double shaping = 0.0;
};

struct StepResult {
  /// Empty once the episode is won.
  AudioBuffer state;
  double reward = 0.0;
  bool done = false;
  bool won = false;
  StepInfo info;
};

/// Rejection-samples source positions (clear of the walls by the threshold
/// radius and of each other by twice that) and an agent pose farther than
/// the radius from every source. Throws ConfigError after 10,000 failed
/// attempts.
Layout sample_layout(const acoustics::RoomSpec& room, std::size_t source_count, const EnvConfig& config,
                     std::mt19937_64& rng);

/// Pose after one action. Translations that would leave the room stop
/// config.wall_margin inside the first wall on the path. Throws
/// DomainError for an unknown action.
AgentPose apply_action(const AgentPose& pose, int action, const EnvConfig& config,
                       const acoustics::RoomSpec& room);

/// Distance from the agent to the nearest active source. Throws
/// DomainError when none is active.
double min_source_distance(const GameState& state);

/// The source-finding game. Owns its RNG stream; not thread-safe.
class Environment {
public:
  /// Throws ConfigError for an invalid config and DomainError for empty
  /// signals or a sample-rate mismatch.
  Environment(EnvConfig config, acoustics::RoomSpec room, std::vector<std::vector<double>> source_signals);

  /// Starts an episode and returns the initial stereo state.
  AudioBuffer reset();
  /// Starts an episode from an explicit layout. Throws DomainError if the
  /// layout has the wrong source count or places anything outside the room.
  AudioBuffer reset(const Layout& layout);
  /// Throws StateError if the episode already finished.
  StepResult step(int action);

  const GameState& state() const { return state_; }
  /// State right after the most recent reset.
  const GameState& initial_state() const { return initial_; }
  const EnvConfig& config() const { return config_; }
  const acoustics::RoomSpec& room() const { return room_; }
  /// Source playheads used for the most recent returned state.
  const std::vector<std::size_t>& rendered_playheads() const { return rendered_playheads_; }

private:
  AudioBuffer render();

  EnvConfig config_;
  acoustics::RoomSpec room_;
  std::vector<std::vector<double>> signals_;
  std::mt19937_64 rng_;
  std::optional<Layout> fixed_;
  GameState state_;
  GameState initial_;
  std::vector<std::size_t> rendered_playheads_;
  bool started_ = false;
};

/// One CSV row per step: episode, step, action, reward, x, y, heading,
/// sources_remaining.
class TraceWriter {
public:
  explicit TraceWriter(const std::filesystem::path& path);
  void write(int episode, int step, int action, double reward, const AgentPose& pose, std::size_t remaining);

private:
  std::ofstream out_;
};

} // namespace audionav::env
