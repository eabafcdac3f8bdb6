#include <cmath>
#include <random>

#include "doctest.h"

#include "audionav/errors.hpp"
#include "audionav/metrics.hpp"
#include "audionav/model.hpp"
#include "audionav/rl.hpp"
#include "audionav/separation.hpp"

using namespace audionav;
using separation::ObservationPtr;

namespace {

AudioBuffer noise(std::size_t frames, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  AudioBuffer a = AudioBuffer::zeros(2, frames, 8000.0);
  for (auto& c : a.channels) {
    for (auto& x : c) x = g(rng);
  }
  return a;
}

std::vector<ObservationPtr<double>> observations(int count, std::size_t frames, std::uint64_t seed) {
  std::vector<ObservationPtr<double>> out;
  for (int i = 0; i < count; ++i) {
    const double h = 0.3 * i;
    out.push_back(std::make_shared<const separation::Observation<double>>(separation::make_observation<double>(
        noise(frames, seed + static_cast<std::uint64_t>(i), 0.5), {0.2 * i, 0.5, std::sin(h), std::cos(h)})));
  }
  return out;
}

struct Composite {
  rl::ModelParams<double> target;
  std::vector<ObservationPtr<double>> states, next_states;
  rl::TdBatch batch;
  double gamma = 0.99;

  double loss(const rl::ModelParams<double>& online) const {
    const auto q = rl::forward_pipeline<double>(online, states, separation::BatchNormMode::Training).q;
    const auto qt = rl::forward_pipeline<double>(target, next_states, separation::BatchNormMode::Inference).q;
    return rl::td_loss(q, qt, batch, gamma);
  }
};

} // namespace

TEST_CASE("masks sum to one and start at one half with symmetric output weights") {
  auto params = separation::init_mask_network<double>({2, 8, 3, true});
  const auto obs = observations(2, 1600, 11);
  const auto tape = separation::forward_masks<double>(params, obs, separation::BatchNormMode::Inference);
  const auto sum = (tape.masks.topRows(separation::kBins) + tape.masks.bottomRows(separation::kBins)).eval();
  CHECK((sum.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((tape.masks.array() - 0.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("forward_masks rejects empty and ragged batches") {
  auto params = separation::init_mask_network<double>({});
  std::vector<ObservationPtr<double>> none;
  CHECK_THROWS_AS(separation::forward_masks<double>(params, none, separation::BatchNormMode::Training), DomainError);
  auto a = observations(1, 1600, 1);
  auto b = observations(1, 3200, 2);
  std::vector<ObservationPtr<double>> mixed{a[0], b[0]};
  CHECK_THROWS_AS(separation::forward_masks<double>(params, mixed, separation::BatchNormMode::Training), DomainError);
}

TEST_CASE("inference mode is bit-identical across evaluations") {
  auto params = separation::init_mask_network<float>({2, 50, 5, false});
  std::vector<ObservationPtr<float>> obs{std::make_shared<const separation::Observation<float>>(
      separation::make_observation<float>(noise(4000, 3), {0, 0, 0, 1}))};
  const auto a = separation::forward_masks<float>(params, obs, separation::BatchNormMode::Inference);
  const auto b = separation::forward_masks<float>(params, obs, separation::BatchNormMode::Inference);
  CHECK(a.masks == b.masks);
}

TEST_CASE("composite TD loss gradient matches central differences") {
  rl::ModelInit init;
  init.seed = 7;
  init.hidden = 12;
  init.q_hidden = 16;
  Composite c;
  auto online = rl::init_model<double>(init);
  init.seed = 8;
  c.target = rl::init_model<double>(init);
  c.states = observations(3, 800, 100);
  c.next_states = observations(3, 800, 200);
  // Rewards near the initial Q scale keep the loss O(1), so finite-difference
  // round-off stays well below the smallest gradients checked.
  c.batch = {{0, 2, 3}, {0.4, -0.5, 0.25}, {0, 0, 1}};

  auto tape = rl::forward_pipeline<double>(online, c.states, separation::BatchNormMode::Training);
  const auto qt = rl::forward_pipeline<double>(c.target, c.next_states, separation::BatchNormMode::Inference).q;
  const auto y = rl::td_targets(qt, c.batch, c.gamma);
  auto grads = rl::zeros_like(online);
  rl::backward(online, tape, rl::td_loss_gradient(tape.q, y, c.batch), grads);

  std::vector<std::pair<Mat<double>*, Mat<double>*>> tensors;
  std::vector<Mat<double>*> g;
  grads.for_each_trainable([&](const char*, Mat<double>& m) { g.push_back(&m); });
  std::size_t k = 0;
  online.for_each_trainable([&](const char*, Mat<double>& m) { tensors.emplace_back(&m, g[k++]); });

  std::mt19937_64 rng(42);
  const double h = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    auto& [param, grad] = tensors[trial % tensors.size()];
    const auto i = std::uniform_int_distribution<Eigen::Index>(0, param->size() - 1)(rng);
    const double saved = param->data()[i];
    param->data()[i] = saved + h;
    const double up = c.loss(online);
    param->data()[i] = saved - h;
    const double down = c.loss(online);
    param->data()[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad->data()[i];
    const double denom = std::max(std::abs(numeric), std::abs(analytic));
    const double rel = denom == 0.0 ? 0.0 : std::abs(numeric - analytic) / denom;
    INFO("trial " << trial << " analytic " << analytic << " numeric " << numeric);
    CHECK(rel < 1e-4);
    worst = std::max(worst, rel);
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("a tape can only be consumed once") {
  auto online = rl::init_model<double>({});
  auto obs = observations(1, 800, 9);
  auto tape = rl::forward_pipeline<double>(online, obs, separation::BatchNormMode::Training);
  auto grads = rl::zeros_like(online);
  const Mat<double> dq = Mat<double>::Ones(4, 1);
  rl::backward(online, tape, dq, grads);
  CHECK_THROWS_AS(rl::backward(online, tape, dq, grads), StateError);
}
