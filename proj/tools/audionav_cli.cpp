#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "audionav/errors.hpp"
#include "audionav/format.hpp"
#include "audionav/harness.hpp"
#include "audionav/room.hpp"
#include "audionav/wav.hpp"

using namespace audionav;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigArgs {
  std::string preset = "experiment-1";
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string agent;
  std::string output;
  bool quiet = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "Starting preset (experiment-1, experiment-2)");
    cmd->add_option("--config", config_file, "JSON config; its keys override the preset");
    cmd->add_option("--set", overrides, "Override a config key, e.g. --set env.max_steps=500")->take_all();
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--episodes", episodes, "Episode count");
    cmd->add_option("--agent", agent, "Agent kind: trained, random or oracle");
    cmd->add_option("--output", output, "Output directory (relative paths use $AUDIONAV_OUTPUT_ROOT)");
    cmd->add_flag("--quiet", quiet, "No per-episode progress");
  }

  harness::ExperimentConfig build() const {
    json j = harness::to_json(harness::preset(preset));
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ConfigError("cannot read config file " + config_file);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
      }
      if (file.contains("preset")) j = harness::to_json(harness::preset(file["preset"].get<std::string>()));
      j.merge_patch(file);
      j.erase("preset");
    }
    for (const auto& o : overrides) harness::apply_override(j, o);
    if (seed) j["seed"] = *seed;
    if (episodes) j["episodes"] = *episodes;
    if (!agent.empty()) j["agent_kind"] = agent;
    if (!output.empty()) j["output_dir"] = output;
    auto c = harness::from_json(j);
    c.validate();
    return c;
  }
};

// Runs `body(seed_offset)` in `replicas` child processes and waits for all.
int run_replicas(int replicas, const std::function<int(int)>& body) {
  if (replicas <= 1) return body(0);
  std::vector<pid_t> children;
  for (int i = 0; i < replicas; ++i) {
    std::cout.flush();
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      int code = kExitRuntime;
      try {
        code = body(i);
      } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        code = kExitConfig;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
      }
      std::cout.flush();
      _exit(code);
    }
    children.push_back(pid);
  }
  int worst = 0;
  for (pid_t pid : children) {
    int status = 0;
    waitpid(pid, &status, 0);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitRuntime;
    worst = std::max(worst, code);
  }
  return worst;
}

harness::ExperimentConfig replica_config(harness::ExperimentConfig c, int offset, int replicas) {
  if (replicas <= 1) return c;
  c.seed += static_cast<std::uint64_t>(offset);
  c.output_dir = (std::filesystem::path(c.output_dir) / ("seed_" + std::to_string(c.seed))).string();
  return c;
}

void print_summary(const harness::RunSummary& s) {
  std::cout << to_json(s).dump(2) << '\n';
}

Vec2 parse_point(const std::string& text) {
  Vec2 p;
  if (std::sscanf(text.c_str(), "%lf,%lf", &p.x, &p.y) != 2) throw ConfigError("expected x,y but got '" + text + "'");
  return p;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio navigation agents in simulated rooms"};
  app.require_subcommand(1);

  ConfigArgs train_args, eval_args, base_args, cmp_args;
  int replicas = 1;
  auto* train = app.add_subcommand("train", "Train an agent (or run any agent kind) and log the run");
  train_args.attach(train);
  train->add_option("--replicas", replicas, "Independent seeds run in parallel processes")->check(CLI::PositiveNumber);

  std::string checkpoint;
  int eval_episodes = 10;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint with epsilon at its floor");
  eval_args.attach(evaluate);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--eval-episodes", eval_episodes, "Evaluation episodes")->check(CLI::PositiveNumber);

  int base_replicas = 1;
  auto* baseline = app.add_subcommand("baseline", "Run the random or oracle agent");
  base_args.agent = "random";
  base_args.attach(baseline);
  baseline->add_option("--replicas", base_replicas, "Independent seeds run in parallel processes")->check(CLI::PositiveNumber);

  std::vector<std::string> kinds{"random", "oracle", "trained"};
  auto* compare = app.add_subcommand("compare", "Run several agent kinds on one config and tabulate steps");
  cmp_args.attach(compare);
  compare->add_option("--agents", kinds, "Agent kinds to compare")->take_all();

  double width = 6, height = 6, absorption = 1.0, rate = 8000;
  std::string src_text = "1,1", mic_text = "4,3", rir_out = "rir";
  std::optional<int> order;
  auto* rir = app.add_subcommand("render-rir", "Write one room impulse response as WAV and CSV");
  rir->add_option("--width", width);
  rir->add_option("--height", height);
  rir->add_option("--absorption", absorption);
  rir->add_option("--source", src_text, "x,y");
  rir->add_option("--mic", mic_text, "x,y");
  rir->add_option("--order", order, "Maximum reflection order");
  rir->add_option("--rate", rate);
  rir->add_option("--output", rir_out, "Output path prefix");

  double synth_duration = 6.0;
  std::string synth_dir = "sources";
  auto* synth = app.add_subcommand("synth-sources", "Write the siren and ring generators as WAV files");
  synth->add_option("--duration", synth_duration);
  synth->add_option("--rate", rate);
  synth->add_option("--output", synth_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train || *baseline) {
      const ConfigArgs& args = *train ? train_args : base_args;
      const int n = *train ? replicas : base_replicas;
      const auto base = args.build();
      if (*baseline && base.agent_kind == harness::AgentKind::Trained) {
        throw ConfigError("baseline runs random or oracle agents");
      }
      return run_replicas(n, [&](int i) {
        const auto c = replica_config(base, i, n);
        harness::RunOptions o;
        o.output = harness::resolve_output(c.output_dir);
        if (!args.quiet) o.progress = &std::cout;
        print_summary(harness::run_experiment(c, o));
        return 0;
      });
    }
    if (*evaluate) {
      const auto c = eval_args.build();
      harness::RunOptions o;
      o.output = harness::resolve_output(c.output_dir);
      if (!eval_args.quiet) o.progress = &std::cout;
      print_summary(harness::evaluate_checkpoint(checkpoint, c, eval_episodes, o));
      return 0;
    }
    if (*compare) {
      const auto base = cmp_args.build();
      std::vector<harness::ExperimentConfig> configs;
      for (const auto& k : kinds) {
        auto c = base;
        c.agent_kind = harness::parse_agent_kind(k);
        configs.push_back(c);
      }
      const auto cmp = harness::compare_agents(configs, cmp_args.quiet ? nullptr : &std::cout);
      const auto dir = harness::resolve_output(base.output_dir);
      std::filesystem::create_directories(dir);
      std::ofstream(dir / "compare.csv") << cmp.csv;
      std::cout << cmp.table;
      return 0;
    }
    if (*rir) {
      acoustics::RoomOptions opts;
      opts.sample_rate = rate;
      opts.max_ism_order = order;
      const auto room = acoustics::make_room(acoustics::Shoebox{width, height}, absorption, opts);
      const auto ir = acoustics::compute_rir(room, parse_point(src_text), parse_point(mic_text));
      AudioBuffer audio;
      audio.sample_rate = ir.sample_rate;
      audio.channels.push_back(ir.taps);
      const auto out = harness::resolve_output(rir_out);
      if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
      write_wav(std::filesystem::path(out.string() + ".wav"), audio);
      std::ofstream csv(out.string() + ".csv");
      csv << "sample,amplitude\n";
      for (std::size_t i = 0; i < ir.taps.size(); ++i) csv << i << ',' << format_double(ir.taps[i]) << '\n';
      std::cout << "wrote " << ir.taps.size() << " taps to " << out.string() << ".{wav,csv}\n";
      return 0;
    }
    if (*synth) {
      const auto dir = harness::resolve_output(synth_dir);
      std::filesystem::create_directories(dir);
      for (const char* kind : {"siren", "ring"}) {
        AudioBuffer audio;
        audio.sample_rate = rate;
        audio.channels.push_back(harness::synth_source(kind, synth_duration, rate));
        write_wav(dir / (std::string(kind) + ".wav"), audio);
      }
      std::cout << "wrote siren.wav and ring.wav to " << dir.string() << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GeometryError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
