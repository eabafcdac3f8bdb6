#include <algorithm>
#include <cmath>
#include <random>

#include "audionav/errors.hpp"
#include "audionav/model.hpp"

namespace audionav::rl {

using separation::kBins;

template <typename T>
ModelParams<T> init_model(const ModelInit& init) {
  if (init.q_hidden < 1) throw DomainError("init_model: q_hidden must be positive");
  ModelParams<T> p;
  p.mask = separation::init_mask_network<T>(
      {init.sources, init.hidden, init.seed, init.symmetric_output});
  // Separate stream so the Q head does not shift when mask sizes change.
  std::mt19937_64 rng(init.seed ^ 0x9e3779b97f4a7c15ULL);
  const int in = q_input_size(init.sources);
  auto uniform = [&](int rows, int cols, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat<T> m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(u(rng));
    }
    return m;
  };
  const double b1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(init.q_hidden));
  p.q.w1 = uniform(init.q_hidden, in, b1);
  p.q.b1 = uniform(init.q_hidden, 1, b1);
  p.q.prelu = Mat<T>::Constant(1, 1, static_cast<T>(kPreluInit));
  p.q.w2 = uniform(kActions, init.q_hidden, b2);
  p.q.b2 = uniform(kActions, 1, b2);
  return p;
}

template <typename T>
ModelParams<T> zeros_like(const ModelParams<T>& like) {
  ModelParams<T> z = like;
  z.for_each_tensor([](const char*, Mat<T>& m) { m.setZero(); });
  return z;
}

template <typename T, typename U>
ModelParams<U> cast_model(const ModelParams<T>& from) {
  ModelParams<U> to;
  to.mask.sources = from.mask.sources;
  to.mask.hidden = from.mask.hidden;
  std::vector<const Mat<T>*> src;
  const_cast<ModelParams<T>&>(from).for_each_tensor([&](const char*, Mat<T>& m) { src.push_back(&m); });
  std::size_t i = 0;
  to.for_each_tensor([&](const char*, Mat<U>& m) { m = src[i++]->template cast<U>(); });
  return to;
}

template <typename T>
Vec<T> assemble_q_input(std::span<const T> spatial_means, std::span<const T> magnitude_means,
                        std::span<const T> agent_info) {
  if (spatial_means.size() != 2 * magnitude_means.size() || agent_info.size() != 4 || magnitude_means.empty()) {
    throw DomainError("assemble_q_input: expected 2J spatial means, J magnitudes and 4 agent values");
  }
  Vec<T> v(static_cast<Eigen::Index>(spatial_means.size() + magnitude_means.size() + 4));
  Eigen::Index k = 0;
  for (T x : spatial_means) v(k++) = x;
  for (T x : magnitude_means) v(k++) = x;
  for (T x : agent_info) v(k++) = x;
  return v;
}

namespace {

template <typename T>
void q_hidden(const QHeadParams<T>& q, const Mat<T>& features, Mat<T>& pre, Mat<T>& hidden) {
  pre.noalias() = q.w1 * features;
  pre.colwise() += q.b1.col(0);
  const T slope = q.prelu(0, 0);
  hidden = pre.unaryExpr([slope](T a) { return a > T(0) ? a : slope * a; });
}

} // namespace

template <typename T>
Mat<T> q_forward(const QHeadParams<T>& q, const Mat<T>& features) {
  if (features.rows() != q.w1.cols()) throw DomainError("q_forward: feature length mismatch");
  Mat<T> pre, hidden;
  q_hidden(q, features, pre, hidden);
  Mat<T> out = q.w2 * hidden;
  out.colwise() += q.b2.col(0);
  return out;
}

std::vector<double> q_softmax(std::span<const double> q_values) {
  std::vector<double> p(q_values.begin(), q_values.end());
  if (p.empty()) return p;
  const double peak = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& x : p) total += (x = std::exp(x - peak));
  for (double& x : p) x /= total;
  return p;
}

template <typename T>
GradientTape<T> forward_pipeline(const ModelParams<T>& params, std::span<const separation::ObservationPtr<T>> batch,
                                 separation::BatchNormMode mode) {
  GradientTape<T> tape;
  tape.mask = separation::forward_masks(params.mask, batch, mode);
  const int b_count = tape.mask.batch;
  const int frames = tape.mask.frames;
  const int sources = params.mask.sources;
  const Eigen::Index cols = tape.mask.masks.cols();
  tape.ipd.resize(kBins, cols);
  tape.ild.resize(kBins, cols);
  tape.magnitude.resize(kBins, cols);
  for (int t = 0; t < frames; ++t) {
    for (int b = 0; b < b_count; ++b) {
      const auto& obs = *batch[static_cast<std::size_t>(b)];
      if (obs.ipd.cols() != frames || obs.ild.cols() != frames || obs.agent_info.size() != 4) {
        throw DomainError("forward_pipeline: observation lacks spatial features");
      }
      const Eigen::Index c = static_cast<Eigen::Index>(t) * b_count + b;
      tape.ipd.col(c) = obs.ipd.col(t);
      tape.ild.col(c) = obs.ild.col(t);
      tape.magnitude.col(c) = obs.magnitude.col(t);
    }
  }
  const T inv_n = T(1) / static_cast<T>(static_cast<double>(frames) * kBins);
  tape.features.resize(q_input_size(sources), b_count);
  // Sum a row of per-column values over time for each batch member.
  auto per_sample = [&](const Mat<T>& prod) {
    const Mat<T> col_sums = prod.colwise().sum();  // 1 x (T * B)
    return Eigen::Map<const Mat<T>>(col_sums.data(), b_count, frames).rowwise().sum().eval();
  };
  for (int j = 0; j < sources; ++j) {
    const auto m = tape.mask.masks.middleRows(j * kBins, kBins).array();
    tape.features.row(2 * j) = per_sample((m * tape.ipd.array()).matrix()).transpose() * inv_n;
    tape.features.row(2 * j + 1) = per_sample((m * tape.ild.array()).matrix()).transpose() * inv_n;
    tape.features.row(2 * sources + j) = per_sample((m * tape.magnitude.array()).matrix()).transpose() * inv_n;
  }
  for (int b = 0; b < b_count; ++b) {
    tape.features.col(b).tail(4) = batch[static_cast<std::size_t>(b)]->agent_info;
  }
  q_hidden(params.q, tape.features, tape.pre_activation, tape.hidden);
  tape.q = params.q.w2 * tape.hidden;
  tape.q.colwise() += params.q.b2.col(0);
  return tape;
}

template <typename T>
void backward(const ModelParams<T>& params, GradientTape<T>& tape, const Mat<T>& q_grad, ModelParams<T>& grads) {
  if (tape.consumed) throw StateError("gradient tape already consumed");
  if (q_grad.rows() != tape.q.rows() || q_grad.cols() != tape.q.cols()) {
    throw DomainError("backward: q gradient shape mismatch");
  }
  tape.consumed = true;
  const auto& q = params.q;
  grads.q.w2.noalias() += q_grad * tape.hidden.transpose();
  grads.q.b2 += q_grad.rowwise().sum();
  const Mat<T> d_hidden = q.w2.transpose() * q_grad;
  const T slope = q.prelu(0, 0);
  const auto pre = tape.pre_activation.array();
  const auto neg = (pre <= T(0)).template cast<T>();
  grads.q.prelu(0, 0) += (d_hidden.array() * pre * neg).sum();
  const Mat<T> d_pre = (d_hidden.array() * ((T(1) - neg) + neg * slope)).matrix();
  grads.q.w1.noalias() += d_pre * tape.features.transpose();
  grads.q.b1 += d_pre.rowwise().sum();
  const Mat<T> d_features = q.w1.transpose() * d_pre;

  const int sources = params.mask.sources;
  const int frames = tape.mask.frames;
  const T inv_n = T(1) / static_cast<T>(static_cast<double>(frames) * kBins);
  Mat<T> mask_grad(tape.mask.masks.rows(), tape.mask.masks.cols());
  for (int j = 0; j < sources; ++j) {
    // Per-column coefficients: column t * B + b uses sample b's feature gradient.
    const Mat<T> c_ipd = d_features.row(2 * j).replicate(1, frames) * inv_n;
    const Mat<T> c_ild = d_features.row(2 * j + 1).replicate(1, frames) * inv_n;
    const Mat<T> c_mag = d_features.row(2 * sources + j).replicate(1, frames) * inv_n;
    mask_grad.middleRows(j * kBins, kBins) =
        (tape.ipd.array().rowwise() * c_ipd.row(0).array() + tape.ild.array().rowwise() * c_ild.row(0).array() +
         tape.magnitude.array().rowwise() * c_mag.row(0).array())
            .matrix();
  }
  separation::backward_masks(params.mask, tape.mask, mask_grad, grads.mask);
}

#define AUDIONAV_INSTANTIATE(T)                                                                               \
  template ModelParams<T> init_model<T>(const ModelInit&);                                                   \
  template ModelParams<T> zeros_like<T>(const ModelParams<T>&);                                              \
  template Vec<T> assemble_q_input<T>(std::span<const T>, std::span<const T>, std::span<const T>);           \
  template Mat<T> q_forward<T>(const QHeadParams<T>&, const Mat<T>&);                                        \
  template GradientTape<T> forward_pipeline<T>(const ModelParams<T>&,                                         \
                                               std::span<const separation::ObservationPtr<T>>,               \
                                               separation::BatchNormMode);                                   \
  template void backward<T>(const ModelParams<T>&, GradientTape<T>&, const Mat<T>&, ModelParams<T>&);

AUDIONAV_INSTANTIATE(float)
AUDIONAV_INSTANTIATE(double)

template ModelParams<double> cast_model<float, double>(const ModelParams<float>&);
template ModelParams<float> cast_model<double, float>(const ModelParams<double>&);
template ModelParams<float> cast_model<float, float>(const ModelParams<float>&);
template ModelParams<double> cast_model<double, double>(const ModelParams<double>&);

} // namespace audionav::rl
