#include <cmath>

#include "doctest.h"

#include "audionav/environment.hpp"
#include "audionav/errors.hpp"

using namespace audionav;
using namespace audionav::env;

namespace {

std::vector<std::vector<double>> signals(std::size_t count, std::size_t length = 2000) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> x(length);
    for (std::size_t i = 0; i < length; ++i) x[i] = std::sin(0.3 * static_cast<double>((k + 1) * i));
    out.push_back(x);
  }
  return out;
}

EnvConfig small_config() {
  EnvConfig c;
  c.state_duration_s = 0.25;
  return c;
}

acoustics::RoomSpec room6() { return acoustics::make_room(acoustics::Shoebox{6, 6}, 1.0); }

} // namespace

TEST_CASE("config validation") {
  EnvConfig c;
  c.step_size = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_steps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.rotation_increment_deg = 360.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(Environment(c, room6(), signals(1)), ConfigError);
  CHECK_THROWS_AS(Environment(EnvConfig{}, room6(), {}), DomainError);
}

TEST_CASE("actions move, turn and stop short of walls") {
  const auto room = room6();
  const EnvConfig c;
  const AgentPose p{{3.0, 3.0}, 0.0};
  auto f = apply_action(p, kForward, c, room);
  CHECK(f.position.x == doctest::Approx(4.0));
  CHECK(f.position.y == doctest::Approx(3.0));
  auto b = apply_action(p, kBackward, c, room);
  CHECK(b.position.x == doctest::Approx(2.0));
  auto r = apply_action(p, kRotateRight, c, room);
  CHECK(r.heading == doctest::Approx(2.0 * kPi - kPi / 6.0));
  CHECK(r.position.x == p.position.x);
  auto l = apply_action(p, kRotateLeft, c, room);
  CHECK(l.heading == doctest::Approx(kPi / 6.0));
  // Twelve left turns come back to the start heading.
  AgentPose q = p;
  for (int i = 0; i < 12; ++i) q = apply_action(q, kRotateLeft, c, room);
  CHECK(std::abs(wrap_pi(q.heading - p.heading)) < 1e-9);

  auto w = apply_action({{5.5, 3.0}, 0.0}, kForward, c, room);
  CHECK(w.position.x == doctest::Approx(5.99));
  // Oblique approach keeps the perpendicular margin.
  auto o = apply_action({{5.5, 3.0}, kPi / 4}, kForward, c, room);
  CHECK(o.position.x == doctest::Approx(5.99));
  CHECK(room.contains(o.position));
  // Into a corner.
  auto k = apply_action({{5.6, 5.6}, kPi / 4}, kForward, c, room);
  CHECK(room.wall_clearance(k.position) >= 0.01 - 1e-9);
  CHECK_THROWS_AS(apply_action(p, 4, c, room), DomainError);
}

TEST_CASE("sampled layouts respect the clearances") {
  const auto room = room6();
  EnvConfig c;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto layout = sample_layout(room, 2, c, rng);
    for (const auto& s : layout.sources) {
      CHECK(room.wall_clearance(s) >= c.threshold_radius);
      CHECK(distance(s, layout.agent.position) > c.threshold_radius);
    }
    CHECK(distance(layout.sources[0], layout.sources[1]) >= 2.0 * c.threshold_radius);
  }
  const auto tiny = acoustics::make_room(acoustics::Shoebox{1.5, 1.5}, 1.0);
  CHECK_THROWS_AS(sample_layout(tiny, 2, c, rng), ConfigError);
}

TEST_CASE("lifecycle errors") {
  Environment e(small_config(), room6(), signals(1));
  CHECK_THROWS_AS(e.step(0), StateError);
  const auto s = e.reset();
  CHECK(s.channel_count() == 2);
  CHECK(s.frames() == 2000);
  CHECK_THROWS_AS(e.step(7), DomainError);
}

TEST_CASE("walking straight at a source 3.2 m ahead captures it on the third step") {
  Environment e(small_config(), room6(), signals(1));
  e.reset(Layout{{{4.7, 3.0}}, {{1.5, 3.0}, 0.0}});
  auto r1 = e.step(kForward);
  CHECK_FALSE(r1.done);
  CHECK(r1.info.distances[0] == doctest::Approx(2.2));
  CHECK(r1.reward == doctest::Approx(-0.5));
  e.step(kForward);
  auto r3 = e.step(kForward);
  CHECK(r3.done);
  CHECK(r3.won);
  CHECK(r3.info.captured == 1);
  CHECK(r3.state.empty());
  CHECK(r3.reward == doctest::Approx(99.5));
  CHECK_THROWS_AS(e.step(kForward), StateError);
}

TEST_CASE("dense shaping adds the closed distance") {
  EnvConfig c = small_config();
  c.dense_rewards = true;
  Environment e(c, room6(), signals(2));
  e.reset(Layout{{{5.0, 3.0}, {1.0, 5.0}}, {{2.5, 3.0}, 0.0}});
  auto r = e.step(kForward);
  CHECK(r.info.shaping == doctest::Approx(1.0));
  CHECK(r.reward == doctest::Approx(0.5));
  r = e.step(kBackward);
  CHECK(r.info.shaping == doctest::Approx(-1.0));
  r = e.step(kRotateLeft);
  CHECK(r.info.shaping == doctest::Approx(0.0));
}

TEST_CASE("one move can capture two sources") {
  Environment e(small_config(), room6(), signals(2));
  e.reset(Layout{{{3.9, 2.2}, {3.9, 3.8}}, {{2.5, 3.0}, 0.0}});
  auto r = e.step(kForward);
  CHECK(r.info.captured == 2);
  CHECK(r.won);
  CHECK(r.reward == doctest::Approx(199.5));
}

TEST_CASE("episodes time out at max_steps without a win") {
  EnvConfig c = small_config();
  c.max_steps = 5;
  Environment e(c, room6(), signals(1));
  e.reset(Layout{{{5.0, 5.0}}, {{1.0, 1.0}, 0.0}});
  StepResult r;
  for (int i = 0; i < 5; ++i) r = e.step(kRotateLeft);
  CHECK(r.done);
  CHECK_FALSE(r.won);
  CHECK(r.info.steps == 5);
}

TEST_CASE("fixed layouts repeat and random layouts vary") {
  EnvConfig c = small_config();
  c.fixed_layout = true;
  c.seed = 3;
  Environment e(c, room6(), signals(2));
  e.reset();
  const auto first = e.initial_state();
  e.reset();
  CHECK(e.initial_state().pose.position.x == first.pose.position.x);
  CHECK(e.initial_state().sources[1].position.y == first.sources[1].position.y);
  c.fixed_layout = false;
  Environment v(c, room6(), signals(2));
  v.reset();
  const auto a = v.initial_state().pose.position;
  v.reset();
  CHECK(v.initial_state().pose.position.x != a.x);
}

TEST_CASE("playheads advance by one window for long signals") {
  Environment e(small_config(), room6(), signals(1, 5000));
  e.reset(Layout{{{5.0, 5.0}}, {{1.0, 1.0}, 0.0}});
  CHECK(e.rendered_playheads()[0] == 0);
  CHECK(e.state().sources[0].playhead == 2000);
  e.step(kRotateLeft);
  CHECK(e.rendered_playheads()[0] == 2000);
  e.step(kRotateLeft);
  CHECK(e.state().sources[0].playhead == 1000);  // 6000 mod 5000
}

TEST_CASE("states can be skipped without changing the game") {
  EnvConfig c = small_config();
  c.render_states = false;
  Environment e(c, room6(), signals(1));
  CHECK(e.reset(Layout{{{4.7, 3.0}}, {{1.5, 3.0}, 0.0}}).empty());
  CHECK(e.step(kForward).state.empty());
}

TEST_CASE("trace writer emits one row per step") {
  const auto path = std::filesystem::temp_directory_path() / "audionav_trace.csv";
  {
    TraceWriter w(path);
    w.write(1, 1, 0, -0.5, {{1.0, 2.0}, 0.5}, 2);
  }
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "episode,step,action,reward,x,y,heading,sources_remaining");
  CHECK(row == "1,1,0,-0.5,1,2,0.5,2");
}
