#include <algorithm>
#include <cmath>

#include "audionav/errors.hpp"
#include "audionav/separation.hpp"
#include "audionav/stft.hpp"

namespace audionav::separation {

std::array<double, 4> agent_info(const AgentPose& pose, const acoustics::RoomSpec& room) {
  const Vec2 rel = pose.position - room.bbox_min();
  return {rel.x / room.width(), rel.y / room.height(), std::sin(pose.heading), std::cos(pose.heading)};
}

template <typename T>
Observation<T> make_observation(const AudioBuffer& stereo, const std::array<double, 4>& info) {
  if (stereo.channel_count() != 2) throw DomainError("observation needs a stereo excerpt");
  const dsp::Spectrogram spec = dsp::stft(stereo);
  const auto ipd = dsp::compute_ipd(spec);
  const auto ild = dsp::compute_ild(spec);
  const auto mag = dsp::mean_magnitude(spec);
  const auto bins = static_cast<Eigen::Index>(spec.bins);
  const auto frames = static_cast<Eigen::Index>(spec.frames);
  // Row-major (frame, bin) grids share memory layout with column-major bins x frames.
  using MapD = Eigen::Map<const Mat<double>>;
  Observation<T> obs;
  obs.magnitude = MapD(mag.values.data(), bins, frames).cast<T>();
  obs.ipd = MapD(ipd.values.data(), bins, frames).cast<T>();
  obs.ild = MapD(ild.values.data(), bins, frames).cast<T>();
  obs.agent_info = Eigen::Map<const Vec<double>>(info.data(), 4).cast<T>();
  return obs;
}

namespace {

template <typename T>
Mat<T> uniform(std::mt19937_64& rng, int rows, int cols, double bound) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Mat<T> m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(u(rng));
  }
  return m;
}

Mat<double> orthogonal(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat<double> a(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Mat<double>> qr(a);
  Mat<double> q = qr.householderQ();
  // Sign-fix so the factorisation is unique.
  const Mat<double> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

template <typename T>
void init_direction(std::mt19937_64& rng, int hidden, Mat<T>& w_ih, Mat<T>& w_hh, Mat<T>& b) {
  w_ih = uniform<T>(rng, 4 * hidden, kBins, 1.0 / std::sqrt(static_cast<double>(kBins)));
  w_hh.resize(4 * hidden, hidden);
  for (int gate = 0; gate < 4; ++gate) w_hh.middleRows(gate * hidden, hidden) = orthogonal(rng, hidden).cast<T>();
  b = Mat<T>::Zero(4 * hidden, 1);
  b.middleRows(hidden, hidden).setConstant(T(1));
}

template <typename T>
auto sigmoid(const Eigen::ArrayBase<T>& x) {
  using S = typename T::Scalar;
  return (S(1) + (-x).exp()).inverse();
}

// Runs one LSTM direction; writes activated gates, cells and hidden states
// into the column blocks of each time step.
template <typename T>
void lstm_forward(const Mat<T>& w_ih, const Mat<T>& w_hh, const Mat<T>& b, const Mat<T>& input, int batch,
                  int frames, bool reverse, Mat<T>& gates, Mat<T>& cell, Mat<T>& cell_tanh,
                  Eigen::Block<Mat<T>> hidden_out) {
  const int h = static_cast<int>(w_hh.cols());
  gates.noalias() = w_ih * input;
  gates.colwise() += b.col(0);
  cell.resize(h, input.cols());
  cell_tanh.resize(h, input.cols());
  Mat<T> h_prev = Mat<T>::Zero(h, batch);
  Mat<T> c_prev = Mat<T>::Zero(h, batch);
  for (int s = 0; s < frames; ++s) {
    const int t = reverse ? frames - 1 - s : s;
    auto g = gates.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
    g.noalias() += w_hh * h_prev;
    g.topRows(2 * h) = sigmoid(g.topRows(2 * h).array()).matrix();
    g.middleRows(2 * h, h) = g.middleRows(2 * h, h).array().tanh().matrix();
    g.bottomRows(h) = sigmoid(g.bottomRows(h).array()).matrix();
    auto c = cell.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
    c = (g.middleRows(h, h).array() * c_prev.array() + g.topRows(h).array() * g.middleRows(2 * h, h).array()).matrix();
    auto ct = cell_tanh.middleCols(static_cast<Eigen::Index>(t) * batch, batch);
    ct = c.array().tanh().matrix();
    h_prev = (g.bottomRows(h).array() * ct.array()).matrix();
    c_prev = c;
    hidden_out.middleCols(static_cast<Eigen::Index>(t) * batch, batch) = h_prev;
  }
}

// BPTT for one direction. Returns dLoss/d(input) and accumulates weight
// gradients.
template <typename T>
Mat<T> lstm_backward(const Mat<T>& w_ih, const Mat<T>& w_hh, const Mat<T>& input, const Mat<T>& gates,
                     const Mat<T>& cell, const Mat<T>& cell_tanh, const Mat<T>& hidden, const Mat<T>& hidden_grad,
                     int batch, int frames, bool reverse, Mat<T>& g_w_ih, Mat<T>& g_w_hh, Mat<T>& g_b) {
  const int h = static_cast<int>(w_hh.cols());
  const Eigen::Index cols = input.cols();
  Mat<T> d_gates(4 * h, cols);
  Mat<T> h_prev_all = Mat<T>::Zero(h, cols);
  Mat<T> dh_next = Mat<T>::Zero(h, batch);
  Mat<T> dc_next = Mat<T>::Zero(h, batch);
  Mat<T> zeros = Mat<T>::Zero(h, batch);
  for (int s = frames - 1; s >= 0; --s) {
    const int t = reverse ? frames - 1 - s : s;
    const bool first = s == 0;
    const int t_prev = reverse ? t + 1 : t - 1;
    const Eigen::Index off = static_cast<Eigen::Index>(t) * batch;
    const auto g = gates.middleCols(off, batch).array();
    const auto i_g = g.topRows(h);
    const auto f_g = g.middleRows(h, h);
    const auto c_g = g.middleRows(2 * h, h);
    const auto o_g = g.bottomRows(h);
    const auto ct = cell_tanh.middleCols(off, batch).array();
    const Eigen::Index prev_off = static_cast<Eigen::Index>(t_prev) * batch;
    const Mat<T> c_prev_m = first ? zeros : Mat<T>(cell.middleCols(prev_off, batch));
    const auto c_prev = c_prev_m.array();
    if (!first) h_prev_all.middleCols(off, batch) = hidden.middleCols(prev_off, batch);

    const Mat<T> dh = hidden_grad.middleCols(off, batch) + dh_next;
    const auto dh_a = dh.array();
    const Mat<T> dc = (dc_next.array() + dh_a * o_g * (T(1) - ct.square())).matrix();
    auto dg = d_gates.middleCols(off, batch);
    dg.topRows(h) = (dc.array() * c_g * i_g * (T(1) - i_g)).matrix();
    dg.middleRows(h, h) = (dc.array() * c_prev * f_g * (T(1) - f_g)).matrix();
    dg.middleRows(2 * h, h) = (dc.array() * i_g * (T(1) - c_g.square())).matrix();
    dg.bottomRows(h) = (dh_a * ct * o_g * (T(1) - o_g)).matrix();
    dc_next = (dc.array() * f_g).matrix();
    dh_next.noalias() = w_hh.transpose() * dg;
  }
  g_w_ih.noalias() += d_gates * input.transpose();
  g_w_hh.noalias() += d_gates * h_prev_all.transpose();
  g_b += d_gates.rowwise().sum();
  return w_ih.transpose() * d_gates;
}

} // namespace

template <typename T>
MaskNetworkParams<T> init_mask_network(const MaskInit& init) {
  if (init.sources < 1 || init.hidden < 1) throw DomainError("mask network needs >= 1 source and hidden unit");
  std::mt19937_64 rng(init.seed);
  MaskNetworkParams<T> p;
  p.sources = init.sources;
  p.hidden = init.hidden;
  p.bn_gamma = Mat<T>::Ones(kBins, 1);
  p.bn_beta = Mat<T>::Zero(kBins, 1);
  p.bn_running_mean = Mat<T>::Zero(kBins, 1);
  p.bn_running_var = Mat<T>::Ones(kBins, 1);
  init_direction(rng, init.hidden, p.fwd_w_ih, p.fwd_w_hh, p.fwd_b);
  init_direction(rng, init.hidden, p.bwd_w_ih, p.bwd_w_hh, p.bwd_b);
  p.out_w = uniform<T>(rng, init.sources * kBins, 2 * init.hidden, 1.0 / std::sqrt(2.0 * init.hidden));
  p.out_b = Mat<T>::Zero(init.sources * kBins, 1);
  if (init.symmetric_output) {
    for (int j = 1; j < init.sources; ++j) p.out_w.middleRows(j * kBins, kBins) = p.out_w.topRows(kBins);
  }
  return p;
}

template <typename T>
MaskTape<T> forward_masks(const MaskNetworkParams<T>& params, std::span<const ObservationPtr<T>> batch,
                          BatchNormMode mode) {
  if (batch.empty()) throw DomainError("forward_masks: empty batch");
  const int b_count = static_cast<int>(batch.size());
  const int frames = batch.front()->frames();
  if (frames == 0) throw DomainError("forward_masks: zero frames");
  for (const auto& obs : batch) {
    if (obs->frames() != frames || obs->magnitude.rows() != kBins) {
      throw DomainError("forward_masks: observations differ in shape");
    }
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(frames) * b_count;
  MaskTape<T> tape;
  tape.mode = mode;
  tape.batch = b_count;
  tape.frames = frames;

  Mat<T> x(kBins, cols);
  for (int t = 0; t < frames; ++t) {
    for (int b = 0; b < b_count; ++b) x.col(static_cast<Eigen::Index>(t) * b_count + b) = batch[static_cast<std::size_t>(b)]->magnitude.col(t);
  }

  if (mode == BatchNormMode::Training) {
    tape.batch_mean = x.rowwise().mean();
    tape.batch_var = (x.colwise() - tape.batch_mean).array().square().rowwise().mean().matrix();
  } else {
    tape.batch_mean = params.bn_running_mean.col(0);
    tape.batch_var = params.bn_running_var.col(0);
  }
  const Vec<T> inv_std = (tape.batch_var.array() + T(kBatchNormEpsilon)).rsqrt().matrix();
  tape.normalized = ((x.colwise() - tape.batch_mean).array().colwise() * inv_std.array()).matrix();
  tape.bn_out = ((tape.normalized.array().colwise() * params.bn_gamma.col(0).array()).colwise() +
                 params.bn_beta.col(0).array()).matrix();

  const int h = params.hidden;
  tape.hidden_cat.resize(2 * h, cols);
  lstm_forward(params.fwd_w_ih, params.fwd_w_hh, params.fwd_b, tape.bn_out, b_count, frames, false, tape.fwd_gates,
               tape.fwd_cell, tape.fwd_cell_tanh, tape.hidden_cat.topRows(h));
  lstm_forward(params.bwd_w_ih, params.bwd_w_hh, params.bwd_b, tape.bn_out, b_count, frames, true, tape.bwd_gates,
               tape.bwd_cell, tape.bwd_cell_tanh, tape.hidden_cat.bottomRows(h));

  Mat<T> logits = params.out_w * tape.hidden_cat;
  logits.colwise() += params.out_b.col(0);
  const int sources = params.sources;
  Mat<T> peak = logits.topRows(kBins);
  for (int j = 1; j < sources; ++j) peak = peak.cwiseMax(logits.middleRows(j * kBins, kBins));
  Mat<T> total = Mat<T>::Zero(kBins, cols);
  for (int j = 0; j < sources; ++j) {
    auto block = logits.middleRows(j * kBins, kBins);
    block = (block - peak).array().exp().matrix();
    total += block;
  }
  const Mat<T> inv_total = total.cwiseInverse();
  for (int j = 0; j < sources; ++j) logits.middleRows(j * kBins, kBins).array() *= inv_total.array();
  tape.masks = std::move(logits);
  return tape;
}

template <typename T>
void backward_masks(const MaskNetworkParams<T>& params, const MaskTape<T>& tape, const Mat<T>& mask_grad,
                    MaskNetworkParams<T>& grads) {
  if (mask_grad.rows() != tape.masks.rows() || mask_grad.cols() != tape.masks.cols()) {
    throw DomainError("backward_masks: gradient shape mismatch");
  }
  const int sources = params.sources;
  const Eigen::Index cols = tape.masks.cols();
  Mat<T> inner = Mat<T>::Zero(kBins, cols);
  for (int j = 0; j < sources; ++j) {
    inner.array() += tape.masks.middleRows(j * kBins, kBins).array() * mask_grad.middleRows(j * kBins, kBins).array();
  }
  Mat<T> d_logits(tape.masks.rows(), cols);
  for (int j = 0; j < sources; ++j) {
    d_logits.middleRows(j * kBins, kBins) =
        (tape.masks.middleRows(j * kBins, kBins).array() * (mask_grad.middleRows(j * kBins, kBins) - inner).array()).matrix();
  }
  grads.out_w.noalias() += d_logits * tape.hidden_cat.transpose();
  grads.out_b += d_logits.rowwise().sum();
  const Mat<T> d_hidden = params.out_w.transpose() * d_logits;

  const int h = params.hidden;
  Mat<T> d_bn = lstm_backward(params.fwd_w_ih, params.fwd_w_hh, tape.bn_out, tape.fwd_gates, tape.fwd_cell,
                              tape.fwd_cell_tanh, Mat<T>(tape.hidden_cat.topRows(h)), Mat<T>(d_hidden.topRows(h)),
                              tape.batch, tape.frames, false, grads.fwd_w_ih, grads.fwd_w_hh, grads.fwd_b);
  d_bn += lstm_backward(params.bwd_w_ih, params.bwd_w_hh, tape.bn_out, tape.bwd_gates, tape.bwd_cell,
                        tape.bwd_cell_tanh, Mat<T>(tape.hidden_cat.bottomRows(h)), Mat<T>(d_hidden.bottomRows(h)),
                        tape.batch, tape.frames, true, grads.bwd_w_ih, grads.bwd_w_hh, grads.bwd_b);
  // Inputs are data, so batch statistics carry no parameter gradient.
  grads.bn_gamma += (d_bn.array() * tape.normalized.array()).rowwise().sum().matrix();
  grads.bn_beta += d_bn.rowwise().sum();
}

template <typename T>
void update_running_stats(MaskNetworkParams<T>& params, const MaskTape<T>& tape) {
  if (tape.mode != BatchNormMode::Training) return;
  const double n = static_cast<double>(tape.normalized.cols());
  const T m = T(kBatchNormMomentum);
  const T unbias = n > 1.0 ? T(n / (n - 1.0)) : T(1);
  params.bn_running_mean = (T(1) - m) * params.bn_running_mean + m * tape.batch_mean;
  params.bn_running_var = (T(1) - m) * params.bn_running_var + (m * unbias) * tape.batch_var;
}

template <typename T>
dsp::MaskSet mask_set(const MaskTape<T>& tape, int b, int sources) {
  dsp::MaskSet out;
  out.sources = static_cast<std::size_t>(sources);
  out.frames = static_cast<std::size_t>(tape.frames);
  out.bins = kBins;
  out.values.resize(out.sources * out.frames * out.bins);
  for (int j = 0; j < sources; ++j) {
    for (int t = 0; t < tape.frames; ++t) {
      for (int f = 0; f < kBins; ++f) {
        out.at(static_cast<std::size_t>(j), static_cast<std::size_t>(t), static_cast<std::size_t>(f)) =
            static_cast<double>(tape.masks(j * kBins + f, static_cast<Eigen::Index>(t) * tape.batch + b));
      }
    }
  }
  return out;
}

std::vector<AudioBuffer> apply_masks(const dsp::Spectrogram& mixture, const dsp::MaskSet& masks) {
  if (masks.frames != mixture.frames || masks.bins != mixture.bins) throw DomainError("apply_masks: shape mismatch");
  std::vector<AudioBuffer> out;
  for (std::size_t j = 0; j < masks.sources; ++j) {
    dsp::Spectrogram masked = mixture;
    for (std::size_t c = 0; c < masked.channels; ++c) {
      for (std::size_t t = 0; t < masked.frames; ++t) {
        for (std::size_t f = 0; f < masked.bins; ++f) masked.at(c, t, f) *= masks.at(j, t, f);
      }
    }
    out.push_back(dsp::istft(masked));
  }
  return out;
}

template <typename T>
std::vector<AudioBuffer> separate(const MaskNetworkParams<T>& params, const AudioBuffer& stereo) {
  if (stereo.channel_count() != 2) throw DomainError("separate: stereo input required");
  const dsp::Spectrogram spec = dsp::stft(stereo);
  const auto mag = dsp::mean_magnitude(spec);
  auto obs = std::make_shared<Observation<T>>();
  obs->magnitude = Eigen::Map<const Mat<double>>(mag.values.data(), static_cast<Eigen::Index>(spec.bins),
                                                 static_cast<Eigen::Index>(spec.frames)).cast<T>();
  const std::array<ObservationPtr<T>, 1> batch{obs};
  const auto tape = forward_masks<T>(params, batch, BatchNormMode::Inference);
  return apply_masks(spec, mask_set(tape, 0, params.sources));
}

AudioBuffer render_ground_truth(const acoustics::RoomSpec& room, const acoustics::SourceSpec& source,
                                const AgentPose& initial_pose, double duration_s) {
  return acoustics::render_source(room, source, initial_pose, duration_s);
}

#define AUDIONAV_INSTANTIATE(T)                                                                              \
  template Observation<T> make_observation<T>(const AudioBuffer&, const std::array<double, 4>&);            \
  template MaskNetworkParams<T> init_mask_network<T>(const MaskInit&);                                      \
  template MaskTape<T> forward_masks<T>(const MaskNetworkParams<T>&, std::span<const ObservationPtr<T>>,    \
                                        BatchNormMode);                                                     \
  template void backward_masks<T>(const MaskNetworkParams<T>&, const MaskTape<T>&, const Mat<T>&,           \
                                  MaskNetworkParams<T>&);                                                   \
  template void update_running_stats<T>(MaskNetworkParams<T>&, const MaskTape<T>&);                         \
  template dsp::MaskSet mask_set<T>(const MaskTape<T>&, int, int);                                          \
  template std::vector<AudioBuffer> separate<T>(const MaskNetworkParams<T>&, const AudioBuffer&);

AUDIONAV_INSTANTIATE(float)
AUDIONAV_INSTANTIATE(double)

} // namespace audionav::separation
