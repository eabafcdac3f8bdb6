#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "audionav/errors.hpp"
#include "audionav/harness.hpp"

namespace audionav::harness {

using nlohmann::json;

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Trained: return "trained";
    case AgentKind::Random: return "random";
    case AgentKind::Oracle: return "oracle";
  }
  return "unknown";
}

AgentKind parse_agent_kind(const std::string& name) {
  if (name == "trained") return AgentKind::Trained;
  if (name == "random") return AgentKind::Random;
  if (name == "oracle") return AgentKind::Oracle;
  throw ConfigError("unknown agent kind '" + name + "' (expected trained, random or oracle)");
}

namespace {

// splitmix64 finaliser: independent streams from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

json room_json(const RoomConfig& r) {
  json j;
  j["width"] = r.width;
  j["height"] = r.height;
  json poly = json::array();
  for (const auto& p : r.polygon) poly.push_back({p.x, p.y});
  j["polygon"] = poly;
  j["absorption"] = r.absorption;
  j["max_ism_order"] = r.max_ism_order ? json(*r.max_ism_order) : json(nullptr);
  j["sample_rate"] = r.sample_rate;
  j["speed_of_sound"] = r.speed_of_sound;
  return j;
}

void read_room(const json& j, RoomConfig& r) {
  check_keys(j, "room", {"width", "height", "polygon", "absorption", "max_ism_order", "sample_rate", "speed_of_sound"});
  read(j, "width", r.width, "room");
  read(j, "height", r.height, "room");
  if (j.contains("polygon")) {
    std::vector<std::array<double, 2>> pts;
    read(j, "polygon", pts, "room");
    r.polygon.clear();
    for (const auto& p : pts) r.polygon.push_back({p[0], p[1]});
  }
  if (j.contains("absorption")) {
    if (j["absorption"].is_number()) {
      r.absorption = {j["absorption"].get<double>()};
    } else {
      read(j, "absorption", r.absorption, "room");
    }
  }
  if (j.contains("max_ism_order")) {
    if (j["max_ism_order"].is_null()) {
      r.max_ism_order.reset();
    } else {
      int order = 0;
      read(j, "max_ism_order", order, "room");
      r.max_ism_order = order;
    }
  }
  read(j, "sample_rate", r.sample_rate, "room");
  read(j, "speed_of_sound", r.speed_of_sound, "room");
}

json env_json(const env::EnvConfig& e) {
  return {{"step_size", e.step_size},
          {"rotation_increment_deg", e.rotation_increment_deg},
          {"threshold_radius", e.threshold_radius},
          {"max_steps", e.max_steps},
          {"found_reward", e.found_reward},
          {"step_penalty", e.step_penalty},
          {"dense_rewards", e.dense_rewards},
          {"fixed_layout", e.fixed_layout},
          {"state_duration_s", e.state_duration_s},
          {"wall_margin", e.wall_margin}};
}

void read_env(const json& j, env::EnvConfig& e) {
  check_keys(j, "env", {"step_size", "rotation_increment_deg", "threshold_radius", "max_steps", "found_reward",
                        "step_penalty", "dense_rewards", "fixed_layout", "state_duration_s", "wall_margin"});
  read(j, "step_size", e.step_size, "env");
  read(j, "rotation_increment_deg", e.rotation_increment_deg, "env");
  read(j, "threshold_radius", e.threshold_radius, "env");
  read(j, "max_steps", e.max_steps, "env");
  read(j, "found_reward", e.found_reward, "env");
  read(j, "step_penalty", e.step_penalty, "env");
  read(j, "dense_rewards", e.dense_rewards, "env");
  read(j, "fixed_layout", e.fixed_layout, "env");
  read(j, "state_duration_s", e.state_duration_s, "env");
  read(j, "wall_margin", e.wall_margin, "env");
}

json agent_json(const rl::AgentConfig& a) {
  return {{"hidden", a.hidden},
          {"q_hidden", a.q_hidden},
          {"gamma", a.gamma},
          {"learning_rate", a.adam.learning_rate},
          {"adam_beta1", a.adam.beta1},
          {"adam_beta2", a.adam.beta2},
          {"adam_epsilon", a.adam.epsilon},
          {"clip_norm", a.clip_norm},
          {"batch_size", a.batch_size},
          {"buffer_capacity", a.buffer_capacity},
          {"target_sync_interval", a.target_sync_interval},
          {"epsilon_start", a.epsilon_start},
          {"epsilon_end", a.epsilon_end},
          {"epsilon_half_budget", a.epsilon_half_budget},
          {"train_every", a.train_every},
          {"excerpt_s", a.excerpt_s}};
}

void read_agent(const json& j, rl::AgentConfig& a) {
  check_keys(j, "agent", {"hidden", "q_hidden", "gamma", "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon",
                          "clip_norm", "batch_size", "buffer_capacity", "target_sync_interval", "epsilon_start",
                          "epsilon_end", "epsilon_half_budget", "train_every", "excerpt_s"});
  read(j, "hidden", a.hidden, "agent");
  read(j, "q_hidden", a.q_hidden, "agent");
  read(j, "gamma", a.gamma, "agent");
  read(j, "learning_rate", a.adam.learning_rate, "agent");
  read(j, "adam_beta1", a.adam.beta1, "agent");
  read(j, "adam_beta2", a.adam.beta2, "agent");
  read(j, "adam_epsilon", a.adam.epsilon, "agent");
  read(j, "clip_norm", a.clip_norm, "agent");
  read(j, "batch_size", a.batch_size, "agent");
  read(j, "buffer_capacity", a.buffer_capacity, "agent");
  read(j, "target_sync_interval", a.target_sync_interval, "agent");
  read(j, "epsilon_start", a.epsilon_start, "agent");
  read(j, "epsilon_end", a.epsilon_end, "agent");
  read(j, "epsilon_half_budget", a.epsilon_half_budget, "agent");
  read(j, "train_every", a.train_every, "agent");
  read(j, "excerpt_s", a.excerpt_s, "agent");
}

} // namespace

void ExperimentConfig::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be at least 1");
  if (sources.empty()) throw ConfigError("at least one source is required");
  for (const auto& s : sources) {
    if (s.kind == "file") {
      if (s.path.empty()) throw ConfigError("file source needs a path");
    } else if (s.kind != "siren" && s.kind != "ring") {
      throw ConfigError("unknown source kind '" + s.kind + "'");
    } else if (!(s.duration_s > 0.0)) {
      throw ConfigError("source duration must be positive");
    }
  }
  if (sisdr_every < 1 || checkpoint_every < 1) throw ConfigError("logging intervals must be positive");
  env.validate();
  agent_config().validate();
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  (void)make_room();
}

acoustics::RoomSpec ExperimentConfig::make_room() const {
  acoustics::RoomOptions opts;
  opts.sample_rate = room.sample_rate;
  opts.speed_of_sound = room.speed_of_sound;
  opts.max_ism_order = room.max_ism_order;
  try {
    if (room.polygon.empty()) return acoustics::make_room(acoustics::Shoebox{room.width, room.height}, room.absorption, opts);
    return acoustics::make_room(acoustics::Polygon{room.polygon}, room.absorption, opts);
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("invalid room: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid room: ") + e.what());
  }
}

env::EnvConfig ExperimentConfig::env_config() const {
  env::EnvConfig e = env;
  e.seed = derive_seed(seed, 1);
  e.render_states = agent_kind == AgentKind::Trained;
  return e;
}

rl::AgentConfig ExperimentConfig::agent_config() const {
  rl::AgentConfig a = agent;
  a.seed = derive_seed(seed, 2);
  a.sources = static_cast<int>(sources.size());
  return a;
}

json to_json(const ExperimentConfig& c) {
  json sources = json::array();
  for (const auto& s : c.sources) {
    json js{{"kind", s.kind}};
    if (s.kind == "file") {
      js["path"] = s.path;
    } else {
      js["duration_s"] = s.duration_s;
    }
    sources.push_back(js);
  }
  return {{"name", c.name},
          {"seed", c.seed},
          {"episodes", c.episodes},
          {"agent_kind", to_string(c.agent_kind)},
          {"output_dir", c.output_dir},
          {"room", room_json(c.room)},
          {"sources", sources},
          {"env", env_json(c.env)},
          {"agent", agent_json(c.agent)},
          {"logging", {{"sisdr_every", c.sisdr_every}, {"checkpoint_every", c.checkpoint_every}}}};
}

ExperimentConfig from_json(const json& j, ExperimentConfig c) {
  check_keys(j, "", {"name", "seed", "episodes", "agent_kind", "output_dir", "room", "sources", "env", "agent",
                     "logging", "preset"});
  read(j, "name", c.name, "");
  read(j, "seed", c.seed, "");
  read(j, "episodes", c.episodes, "");
  if (j.contains("agent_kind")) {
    std::string kind;
    read(j, "agent_kind", kind, "");
    c.agent_kind = parse_agent_kind(kind);
  }
  read(j, "output_dir", c.output_dir, "");
  if (j.contains("room")) read_room(j["room"], c.room);
  if (j.contains("sources")) {
    if (!j["sources"].is_array()) throw ConfigError("sources must be an array");
    c.sources.clear();
    for (const auto& js : j["sources"]) {
      check_keys(js, "sources[]", {"kind", "path", "duration_s"});
      SourceDescriptor s;
      read(js, "kind", s.kind, "sources[]");
      read(js, "path", s.path, "sources[]");
      read(js, "duration_s", s.duration_s, "sources[]");
      c.sources.push_back(s);
    }
  }
  if (j.contains("env")) read_env(j["env"], c.env);
  if (j.contains("agent")) read_agent(j["agent"], c.agent);
  if (j.contains("logging")) {
    check_keys(j["logging"], "logging", {"sisdr_every", "checkpoint_every"});
    read(j["logging"], "sisdr_every", c.sisdr_every, "logging");
    read(j["logging"], "checkpoint_every", c.checkpoint_every, "logging");
  }
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("empty key in override: " + assignment);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.env.dense_rewards = true;
  c.env.fixed_layout = true;
  c.room.absorption = {1.0};
  c.output_dir = "runs/" + name;
  if (name == "experiment-1") {
    c.room.width = c.room.height = 6.0;
    c.episodes = 50;
    c.agent.epsilon_half_budget = 2500.0;
  } else if (name == "experiment-2") {
    c.room.width = c.room.height = 8.0;
    c.episodes = 135;
    c.agent.epsilon_half_budget = 10000.0;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"experiment-1", "experiment-2"}; }

std::vector<double> synth_source(const std::string& kind, double duration_s, double sample_rate) {
  if (!(duration_s > 0.0) || !(sample_rate > 0.0)) throw DomainError("synth_source: duration and rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  std::vector<double> x(n, 0.0);
  if (kind == "siren") {
    // Instantaneous frequency follows a 3 Hz triangle between 600 and 900 Hz.
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      const double cycle = std::fmod(t * 3.0, 1.0);
      const double tri = cycle < 0.5 ? 2.0 * cycle : 2.0 - 2.0 * cycle;
      x[i] = std::sin(phase);
      phase += kTwoPi * (600.0 + 300.0 * tri) / sample_rate;
      if (phase > kTwoPi) phase -= kTwoPi;
    }
  } else if (kind == "ring") {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      if (std::fmod(t, 3.0) >= 2.0) continue;
      x[i] = std::sin(kTwoPi * 440.0 * t) + std::sin(kTwoPi * 480.0 * t);
    }
  } else {
    throw DomainError("unknown source kind '" + kind + "'");
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : x) v *= 0.9 / peak;
  }
  return x;
}

std::filesystem::path resolve_output(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("AUDIONAV_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / p;
  return p;
}

} // namespace audionav::harness
