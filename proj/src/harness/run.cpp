#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "audionav/checkpoint.hpp"
#include "audionav/errors.hpp"
#include "audionav/format.hpp"
#include "audionav/harness.hpp"
#include "audionav/metrics.hpp"
#include "audionav/separation.hpp"
#include "audionav/wav.hpp"

namespace audionav::harness {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) { return std::isnan(v) ? std::string("nan") : format_double(v); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<std::vector<double>> load_sources(const ExperimentConfig& config) {
  std::vector<std::vector<double>> out;
  for (const auto& s : config.sources) {
    if (s.kind != "file") {
      out.push_back(synth_source(s.kind, s.duration_s, config.room.sample_rate));
      continue;
    }
    const AudioBuffer audio = read_wav(s.path);
    if (audio.sample_rate != config.room.sample_rate) {
      throw DomainError("source file " + s.path + " has sample rate " + format_double(audio.sample_rate) +
                        ", expected " + format_double(config.room.sample_rate));
    }
    if (audio.empty()) throw DomainError("source file " + s.path + " is empty");
    std::vector<double> mono(audio.frames(), 0.0);
    for (const auto& ch : audio.channels) {
      for (std::size_t i = 0; i < mono.size(); ++i) mono[i] += ch[i] / static_cast<double>(audio.channel_count());
    }
    out.push_back(std::move(mono));
  }
  return out;
}

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  out << header << '\n';
  return out;
}

// Best-permutation SI-SDR of each reference against the estimates.
std::vector<double> score_sources(const std::vector<AudioBuffer>& estimates, const std::vector<AudioBuffer>& refs) {
  std::vector<std::size_t> perm(estimates.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> best;
  double best_mean = -std::numeric_limits<double>::infinity();
  do {
    std::vector<double> scores;
    double total = 0.0;
    for (std::size_t i = 0; i < refs.size() && i < perm.size(); ++i) {
      scores.push_back(dsp::si_sdr(estimates[perm[i]], refs[i]));
      total += scores.back();
    }
    if (total > best_mean) {
      best_mean = total;
      best = scores;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::string checkpoint_name(int episode) {
  std::ostringstream s;
  s << "episode_" << std::setw(4) << std::setfill('0') << episode << ".anck";
  return s.str();
}

} // namespace

void summarize(RunSummary& s) {
  const std::size_t n = s.episodes.size();
  if (n == 0) return;
  std::vector<double> steps;
  double reward = 0.0, wins = 0.0, sisdr = 0.0;
  std::size_t scored = 0;
  for (const auto& e : s.episodes) {
    steps.push_back(e.steps);
    reward += e.total_reward;
    wins += e.won ? 1.0 : 0.0;
    if (!std::isnan(e.mean_sisdr)) {
      sisdr += e.mean_sisdr;
      ++scored;
    }
  }
  s.mean_steps = std::accumulate(steps.begin(), steps.end(), 0.0) / static_cast<double>(n);
  const std::size_t tail = std::min<std::size_t>(10, n);
  s.last10_mean_steps = std::accumulate(steps.end() - static_cast<std::ptrdiff_t>(tail), steps.end(), 0.0) /
                        static_cast<double>(tail);
  std::vector<double> sorted = steps;
  std::sort(sorted.begin(), sorted.end());
  s.median_steps = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.win_rate = wins / static_cast<double>(n);
  s.mean_reward = reward / static_cast<double>(n);
  s.mean_sisdr = scored ? sisdr / static_cast<double>(scored) : kNaN;
}

json to_json(const RunSummary& s) {
  return {{"name", s.name},
          {"agent_kind", to_string(s.kind)},
          {"seed", s.seed},
          {"episodes", s.episodes.size()},
          {"mean_steps", s.mean_steps},
          {"median_steps", s.median_steps},
          {"last10_mean_steps", s.last10_mean_steps},
          {"win_rate", s.win_rate},
          {"mean_reward", s.mean_reward},
          {"mean_sisdr_db", number_or_null(s.mean_sisdr)}};
}

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const acoustics::RoomSpec room = config.make_room();
  const env::EnvConfig env_cfg = config.env_config();
  const rl::AgentConfig agent_cfg = config.agent_config();
  env::Environment environment(env_cfg, room, load_sources(config));
  const bool trained = config.agent_kind == AgentKind::Trained;
  const bool learning = trained && !options.evaluate_only;

  std::optional<rl::DqnAgent> agent;
  if (trained) {
    if (options.initial_params) {
      agent.emplace(agent_cfg, *options.initial_params);
    } else {
      agent.emplace(agent_cfg);
    }
  }
  std::mt19937_64 policy_rng(agent_cfg.seed ^ 0x5851f42d4c957f2dULL);

  std::ofstream episodes_csv, training_csv, sisdr_csv, timing_csv;
  std::filesystem::path out_dir;
  if (options.output) {
    out_dir = *options.output;
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir / "config.json") << to_json(config).dump(2) << '\n';
    episodes_csv = open_csv(out_dir / "episodes.csv", "episode,steps,total_reward,mean_reward,won,captures,shaping,mean_sisdr_db");
    timing_csv = open_csv(out_dir / "timing.csv", "episode,wall_seconds");
    if (learning) training_csv = open_csv(out_dir / "training.csv", "env_step,epsilon,loss,grad_norm,buffer_size,target_syncs");
    if (trained) sisdr_csv = open_csv(out_dir / "sisdr.csv", "episode,step,source,sisdr_db");
  }

  RunSummary summary;
  summary.name = config.name;
  summary.kind = config.agent_kind;
  summary.seed = config.seed;

  for (int ep = 1; ep <= config.episodes; ++ep) {
    const auto started = std::chrono::steady_clock::now();
    EpisodeLog log;
    log.episode = ep;
    AudioBuffer obs = environment.reset();
    const auto initial = environment.initial_state();
    rl::StatePtr state;
    if (trained) state = agent->perceive(obs, environment.state().pose, room);
    double sisdr_total = 0.0;
    int sisdr_count = 0;

    while (true) {
      int action = 0;
      switch (config.agent_kind) {
        case AgentKind::Random: action = rl::random_policy(policy_rng); break;
        case AgentKind::Oracle:
          action = rl::oracle_policy(environment.state().pose, environment.state().sources, env_cfg.rotation_increment_deg);
          break;
        case AgentKind::Trained:
          action = agent->act(*state, learning ? agent->epsilon() : agent_cfg.epsilon_end);
          break;
      }
      const env::StepResult res = environment.step(action);
      log.total_reward += res.reward;
      log.captures += res.info.captured;
      log.shaping += res.info.shaping;
      log.steps = res.info.steps;

      if (trained) {
        const rl::StatePtr next = res.won ? state : agent->perceive(res.state, environment.state().pose, room);
        if (learning) {
          agent->remember({state, action, res.reward, next, res.won});
          const rl::TrainReport report = agent->on_env_step();
          if (report.trained && training_csv.is_open()) {
            training_csv << agent->env_steps() << ',' << fmt(agent->epsilon()) << ',' << fmt(report.loss) << ','
                         << fmt(report.grad_norm) << ',' << agent->buffer().size() << ',' << agent->target_syncs() << '\n';
          }
        }
        if (!res.won && log.steps % config.sisdr_every == 0) {
          const auto estimates = separation::separate<float>(agent->online().mask, res.state);
          std::vector<AudioBuffer> refs;
          for (std::size_t i = 0; i < initial.sources.size(); ++i) {
            acoustics::SourceSpec src = initial.sources[i];
            src.playhead = environment.rendered_playheads()[i];
            refs.push_back(separation::render_ground_truth(room, src, initial.pose, env_cfg.state_duration_s));
          }
          const auto scores = score_sources(estimates, refs);
          for (std::size_t i = 0; i < scores.size(); ++i) {
            if (sisdr_csv.is_open()) sisdr_csv << ep << ',' << log.steps << ',' << i << ',' << fmt(scores[i]) << '\n';
            sisdr_total += scores[i];
            ++sisdr_count;
          }
        }
        state = next;
      }
      if (res.done) {
        log.won = res.won;
        break;
      }
    }
    log.mean_reward = log.total_reward / log.steps;
    log.mean_sisdr = sisdr_count ? sisdr_total / sisdr_count : kNaN;
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    summary.episodes.push_back(log);

    if (episodes_csv.is_open()) {
      episodes_csv << ep << ',' << log.steps << ',' << fmt(log.total_reward) << ',' << fmt(log.mean_reward) << ','
                   << (log.won ? 1 : 0) << ',' << log.captures << ',' << fmt(log.shaping) << ',' << fmt(log.mean_sisdr)
                   << '\n';
      episodes_csv.flush();
      timing_csv << ep << ',' << fmt(log.wall_seconds) << std::endl;
      if (sisdr_csv.is_open()) sisdr_csv.flush();
      if (training_csv.is_open()) training_csv.flush();
    }
    if (options.progress) {
      *options.progress << config.name << " [" << to_string(config.agent_kind) << " seed " << config.seed << "] episode "
                        << ep << "/" << config.episodes << ": " << log.steps << " steps, reward "
                        << std::setprecision(4) << log.total_reward << (log.won ? ", won" : "");
      if (learning) *options.progress << ", eps " << std::setprecision(3) << agent->epsilon();
      *options.progress << std::endl;
    }
    if (learning && options.output && (ep % config.checkpoint_every == 0 || ep == config.episodes)) {
      rl::save_checkpoint(out_dir / "checkpoints" / checkpoint_name(ep), agent->online());
      if (ep == config.episodes) rl::save_checkpoint(out_dir / "checkpoints" / "final.anck", agent->online());
    }
  }

  summarize(summary);
  if (options.output) {
    if (learning) {
      json manifest{{"format_version", rl::kCheckpointVersion},
                    {"parameter_count", agent->online().parameter_count()},
                    {"agent", to_json(config)["agent"]},
                    {"sources", agent_cfg.sources},
                    {"env_steps", agent->env_steps()},
                    {"train_steps", agent->train_steps()}};
      std::ofstream(out_dir / "checkpoints" / "manifest.json") << manifest.dump(2) << '\n';
    }
    std::ofstream(out_dir / "summary.json") << to_json(summary).dump(2) << '\n';
  }
  return summary;
}

RunSummary evaluate_checkpoint(const std::filesystem::path& checkpoint, const ExperimentConfig& config, int episodes,
                               const RunOptions& options) {
  ExperimentConfig c = config;
  c.episodes = episodes;
  RunOptions o = options;
  o.evaluate_only = true;
  if (c.agent_kind == AgentKind::Trained) {
    auto params = rl::load_checkpoint(checkpoint);
    if (params.mask.hidden != c.agent.hidden || params.q.w1.rows() != c.agent.q_hidden ||
        params.sources() != static_cast<int>(c.sources.size())) {
      throw DomainError("checkpoint network sizes do not match the config");
    }
    o.initial_params = std::move(params);
  }
  return run_experiment(c, o);
}

Comparison compare_agents(const std::vector<ExperimentConfig>& configs, std::ostream* progress) {
  if (configs.size() < 2) throw ConfigError("comparison needs at least two runs");
  Comparison cmp;
  std::vector<std::string> labels;
  for (const auto& c : configs) {
    RunOptions o;
    o.progress = progress;
    cmp.runs.push_back(run_experiment(c, o));
    std::string label = to_string(c.agent_kind);
    const auto dup = std::count_if(labels.begin(), labels.end(), [&](const std::string& l) {
      return l == label || l.rfind(label + "_", 0) == 0;
    });
    if (dup) label += "_" + std::to_string(dup + 1);
    labels.push_back(label);
  }
  std::size_t rows = 0;
  for (const auto& r : cmp.runs) rows = std::max(rows, r.episodes.size());

  std::ostringstream csv, table;
  csv << "episode";
  table << std::left << std::setw(8) << "episode";
  for (const auto& l : labels) {
    csv << ",steps_" << l;
    table << std::right << std::setw(12) << l;
  }
  csv << '\n';
  table << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    csv << i + 1;
    table << std::left << std::setw(8) << i + 1;
    for (const auto& r : cmp.runs) {
      csv << ',';
      table << std::right << std::setw(12);
      if (i < r.episodes.size()) {
        csv << r.episodes[i].steps;
        table << r.episodes[i].steps;
      } else {
        table << "";
      }
    }
    csv << '\n';
    table << '\n';
  }
  csv << "mean";
  table << std::left << std::setw(8) << "mean";
  for (const auto& r : cmp.runs) {
    csv << ',' << fmt(r.mean_steps);
    table << std::right << std::setw(12) << std::fixed << std::setprecision(1) << r.mean_steps;
  }
  csv << '\n';
  table << '\n';
  cmp.csv = csv.str();
  cmp.table = table.str();
  return cmp;
}

} // namespace audionav::harness
