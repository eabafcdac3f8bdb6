#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "audionav/environment.hpp"
#include "audionav/rl.hpp"
#include "audionav/room.hpp"

namespace audionav::harness {

enum class AgentKind { Trained, Random, Oracle };

std::string to_string(AgentKind kind);
/// Throws ConfigError for an unknown name.
AgentKind parse_agent_kind(const std::string& name);

struct SourceDescriptor {
  /// "siren", "ring" or "file".
  std::string kind = "siren";
  std::string path;
  double duration_s = 6.0;
};

struct RoomConfig {
  double width = 6.0;
  double height = 6.0;
  /// Non-empty for a polygonal room; width and height are then ignored.
  std::vector<Vec2> polygon;
  std::vector<double> absorption{1.0};
  std::optional<int> max_ism_order;
  double sample_rate = 8000.0;
  double speed_of_sound = 343.0;
};

struct ExperimentConfig {
  std::string name = "custom";
  std::uint64_t seed = 0;
  int episodes = 50;
  AgentKind agent_kind = AgentKind::Trained;
  std::string output_dir = "runs/custom";
  RoomConfig room;
  std::vector<SourceDescriptor> sources{{"siren", "", 6.0}, {"ring", "", 6.0}};
  env::EnvConfig env;
  rl::AgentConfig agent;
  int sisdr_every = 10;
  int checkpoint_every = 10;

  /// Throws ConfigError on any invalid value.
  void validate() const;
  acoustics::RoomSpec make_room() const;
  /// Environment and agent configs with seeds derived from the master seed.
  env::EnvConfig env_config() const;
  rl::AgentConfig agent_config() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Overlays the keys present in `j` onto `base`. Unknown keys and wrongly
/// typed values raise ConfigError.
ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base = {});
/// Applies "dotted.key=value" where value is parsed as JSON, falling back to
/// a plain string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Named presets: "experiment-1" (6x6, 50 episodes) and "experiment-2"
/// (8x8, 135 episodes). Throws ConfigError for other names.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Mono test signal. "siren": sine sweeping 600-900 Hz in a 3 Hz triangle;
/// "ring": 440 Hz + 480 Hz gated 2 s on, 1 s off. Peak 0.9. Throws
/// DomainError for other kinds or non-positive arguments.
std::vector<double> synth_source(const std::string& kind, double duration_s, double sample_rate);

/// Resolves a relative output directory against $AUDIONAV_OUTPUT_ROOT.
std::filesystem::path resolve_output(const std::string& dir);

struct EpisodeLog {
  int episode = 0;
  int steps = 0;
  double total_reward = 0.0;
  double mean_reward = 0.0;
  bool won = false;
  int captures = 0;
  double shaping = 0.0;
  /// NaN when nothing was scored.
  double mean_sisdr = 0.0;
  double wall_seconds = 0.0;
};

struct RunSummary {
  std::string name;
  AgentKind kind = AgentKind::Random;
  std::uint64_t seed = 0;
  std::vector<EpisodeLog> episodes;
  double mean_steps = 0.0;
  double median_steps = 0.0;
  double win_rate = 0.0;
  double mean_reward = 0.0;
  double mean_sisdr = 0.0;
  /// Mean steps over the final min(10, n) episodes.
  double last10_mean_steps = 0.0;
};

void summarize(RunSummary& summary);
nlohmann::json to_json(const RunSummary& summary);

struct RunOptions {
  /// Write checkpoints, config and CSV logs under this directory; nothing
  /// is written when empty.
  std::optional<std::filesystem::path> output;
  std::ostream* progress = nullptr;
  /// Start the trained agent from these parameters.
  std::optional<rl::ModelParams<float>> initial_params;
  /// Freeze learning and act with epsilon fixed at its floor.
  bool evaluate_only = false;
};

/// Plays config.episodes episodes with the configured agent kind.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Greedy-at-floor evaluation of a saved model; never trains.
RunSummary evaluate_checkpoint(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                               int episodes, const RunOptions& options = {});

struct Comparison {
  std::vector<RunSummary> runs;
  /// episode, steps_<label>... followed by a "mean" row.
  std::string csv;
  std::string table;
};

/// Runs every config and aligns per-episode steps. Throws ConfigError for
/// fewer than two configs.
Comparison compare_agents(const std::vector<ExperimentConfig>& configs, std::ostream* progress = nullptr);

} // namespace audionav::harness
