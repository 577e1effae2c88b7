#ifndef SHAPECODE_RBM_HPP
#define SHAPECODE_RBM_HPP

#include "shapecode/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace shapecode {

enum class UnitKind : std::uint8_t { binary = 0, gaussian_linear = 1 };

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Derived>
auto sigmoid_array(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
}

// Restricted Boltzmann machine. Batches are laid out one sample per row, so
// hidden activations of a batch V are V * W + 1 b^T.
template <typename Scalar>
struct RbmLayer {
  Matrix<Scalar> weights;  // visible x hidden
  Vector<Scalar> visible_bias;
  Vector<Scalar> hidden_bias;
  UnitKind visible_kind = UnitKind::binary;
  UnitKind hidden_kind = UnitKind::binary;

  Eigen::Index visible_count() const { return weights.rows(); }
  Eigen::Index hidden_count() const { return weights.cols(); }

  bool consistent() const {
    return visible_bias.size() == weights.rows() && hidden_bias.size() == weights.cols();
  }
  bool all_finite() const {
    return weights.allFinite() && visible_bias.allFinite() && hidden_bias.allFinite();
  }

  static RbmLayer zeros(Eigen::Index visible, Eigen::Index hidden, UnitKind hidden_kind = UnitKind::binary) {
    RbmLayer layer;
    layer.weights = Matrix<Scalar>::Zero(visible, hidden);
    layer.visible_bias = Vector<Scalar>::Zero(visible);
    layer.hidden_bias = Vector<Scalar>::Zero(hidden);
    layer.hidden_kind = hidden_kind;
    return layer;
  }

  /// Gaussian weights with the given standard deviation, zero biases.
  static RbmLayer random(Eigen::Index visible, Eigen::Index hidden, UnitKind hidden_kind, Rng& rng,
                         Scalar stddev = Scalar(0.01)) {
    RbmLayer layer = zeros(visible, hidden, hidden_kind);
    std::normal_distribution<double> normal(0.0, static_cast<double>(stddev));
    for (Eigen::Index j = 0; j < hidden; ++j)
      for (Eigen::Index i = 0; i < visible; ++i) layer.weights(i, j) = static_cast<Scalar>(normal(rng));
    return layer;
  }
};

struct CdConfig {
  double learning_rate = 0.1;
  int epochs = 40;
  int minibatch_size = 100;
  double initial_momentum = 0.5;
  double final_momentum = 0.9;
  int momentum_switch_epoch = 5;  // epochs run with initial_momentum
  double weight_decay = 0.0002;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(learning_rate >= 0.0) || epochs < 1 || minibatch_size < 1)
      throw InvalidArgument("CdConfig needs learning_rate >= 0, epochs >= 1, minibatch_size >= 1");
  }
  double momentum_at(int epoch) const { return epoch < momentum_switch_epoch ? initial_momentum : final_momentum; }
};

/// E(v,h) = -a.v - b.h - v^T W h
template <typename Scalar, typename DerivedV, typename DerivedH>
Scalar energy(const RbmLayer<Scalar>& rbm, const Eigen::MatrixBase<DerivedV>& v, const Eigen::MatrixBase<DerivedH>& h) {
  require_dims(v.size() == rbm.visible_count() && h.size() == rbm.hidden_count(), "energy: v/h size mismatch");
  const Vector<Scalar> vv = v, hh = h;
  return -rbm.visible_bias.dot(vv) - rbm.hidden_bias.dot(hh) - vv.dot(rbm.weights * hh);
}

/// p(h=1|v) per hidden unit for binary hiddens, the Gaussian mean for
/// linear hiddens. One sample per row.
template <typename Scalar, typename Derived>
Matrix<Scalar> hidden_given_visible_batch(const RbmLayer<Scalar>& rbm, const Eigen::MatrixBase<Derived>& v) {
  require_dims(v.cols() == rbm.visible_count(), "hidden_given_visible: visible size mismatch");
  Matrix<Scalar> input = v * rbm.weights;
  input.rowwise() += rbm.hidden_bias.transpose();
  if (rbm.hidden_kind == UnitKind::binary) return sigmoid_array(input);
  return input;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> visible_given_hidden_batch(const RbmLayer<Scalar>& rbm, const Eigen::MatrixBase<Derived>& h) {
  require_dims(h.cols() == rbm.hidden_count(), "visible_given_hidden: hidden size mismatch");
  Matrix<Scalar> input = h * rbm.weights.transpose();
  input.rowwise() += rbm.visible_bias.transpose();
  if (rbm.visible_kind == UnitKind::binary) return sigmoid_array(input);
  return input;
}

template <typename Scalar, typename Derived>
Vector<Scalar> hidden_given_visible(const RbmLayer<Scalar>& rbm, const Eigen::MatrixBase<Derived>& v) {
  return hidden_given_visible_batch(rbm, v.transpose()).transpose();
}

template <typename Scalar, typename Derived>
Vector<Scalar> visible_given_hidden(const RbmLayer<Scalar>& rbm, const Eigen::MatrixBase<Derived>& h) {
  return visible_given_hidden_batch(rbm, h.transpose()).transpose();
}

/// Binary: 1 with the given probability. Gaussian-linear: mean + N(0,1).
/// Draws are taken in row-major order.
template <typename Derived>
Matrix<typename Derived::Scalar> sample_units(const Eigen::MatrixBase<Derived>& prob_or_mean, UnitKind kind,
                                              Rng& rng) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(prob_or_mean.rows(), prob_or_mean.cols());
  if (kind == UnitKind::binary) {
    if ((prob_or_mean.array() < Scalar(0)).any() || (prob_or_mean.array() > Scalar(1)).any() ||
        !prob_or_mean.allFinite())
      throw InvalidArgument("sample_units: probability outside [0,1]");
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c)
        out(r, c) = uniform(rng) < static_cast<double>(prob_or_mean(r, c)) ? Scalar(1) : Scalar(0);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c)
        out(r, c) = prob_or_mean(r, c) + static_cast<Scalar>(normal(rng));
  }
  return out;
}

/// Momentum state carried between CD steps.
template <typename Scalar>
struct RbmVelocity {
  Matrix<Scalar> weights;
  Vector<Scalar> visible_bias;
  Vector<Scalar> hidden_bias;

  static RbmVelocity zeros_like(const RbmLayer<Scalar>& rbm) {
    return {Matrix<Scalar>::Zero(rbm.visible_count(), rbm.hidden_count()),
            Vector<Scalar>::Zero(rbm.visible_count()), Vector<Scalar>::Zero(rbm.hidden_count())};
  }
};

template <typename Scalar>
struct CdStep {
  RbmLayer<Scalar> layer;
  Scalar reconstruction_error;             // mean squared error per visible unit
  Matrix<Scalar> positive_associations;    // <v h>_data averaged over the batch
  Matrix<Scalar> negative_associations;    // <v h>_recon averaged over the batch
};

/// One contrastive-divergence step on a mini-batch (rows are samples).
///
/// Hidden probabilities (means for linear units) drive both correlation
/// terms; sampled hidden states generate the confabulation, whose visible
/// probabilities are used directly. With momentum m and rate e:
///   inc <- m * inc + e * ((<vh>_data - <vh>_recon) / B - decay * W)
/// Biases follow the same rule without decay.
template <typename Scalar>
CdStep<Scalar> cd1_update(const RbmLayer<Scalar>& rbm, const Matrix<Scalar>& batch, const CdConfig& cfg,
                          Rng& rng, RbmVelocity<Scalar>& velocity, double momentum) {
  cfg.validate();
  require_dims(batch.cols() == rbm.visible_count(), "cd1_update: batch width != visible count");
  require_dims(batch.rows() >= 1, "cd1_update: empty batch");
  const Scalar count = static_cast<Scalar>(batch.rows());

  const Matrix<Scalar> hidden_data = hidden_given_visible_batch(rbm, batch);
  const Matrix<Scalar> hidden_states = sample_units(hidden_data, rbm.hidden_kind, rng);
  const Matrix<Scalar> visible_recon = visible_given_hidden_batch(rbm, hidden_states);
  const Matrix<Scalar> hidden_recon = hidden_given_visible_batch(rbm, visible_recon);

  CdStep<Scalar> step;
  step.positive_associations = batch.transpose() * hidden_data / count;
  step.negative_associations = visible_recon.transpose() * hidden_recon / count;
  step.reconstruction_error = (batch - visible_recon).squaredNorm() / static_cast<Scalar>(batch.size());

  const Scalar eps = static_cast<Scalar>(cfg.learning_rate);
  const Scalar m = static_cast<Scalar>(momentum);
  const Scalar decay = static_cast<Scalar>(cfg.weight_decay);
  velocity.weights = m * velocity.weights +
                     eps * (step.positive_associations - step.negative_associations - decay * rbm.weights);
  velocity.visible_bias =
      m * velocity.visible_bias + eps * (batch - visible_recon).colwise().sum().transpose() / count;
  velocity.hidden_bias =
      m * velocity.hidden_bias + eps * (hidden_data - hidden_recon).colwise().sum().transpose() / count;

  step.layer = rbm;
  step.layer.weights += velocity.weights;
  step.layer.visible_bias += velocity.visible_bias;
  step.layer.hidden_bias += velocity.hidden_bias;
  if (!step.layer.all_finite()) throw TrainingDiverged(-1, "cd1_update produced a non-finite parameter");
  return step;
}

template <typename Scalar>
CdStep<Scalar> cd1_update(const RbmLayer<Scalar>& rbm, const Matrix<Scalar>& batch, const CdConfig& cfg,
                          Rng& rng) {
  auto velocity = RbmVelocity<Scalar>::zeros_like(rbm);
  return cd1_update(rbm, batch, cfg, rng, velocity, 0.0);
}

template <typename Scalar>
struct RbmTrainingResult {
  RbmLayer<Scalar> layer;
  std::vector<double> epoch_errors;  // mean reconstruction error per epoch
};

/// Sample order for each epoch of mini-batch training.
inline std::vector<Eigen::Index> epoch_order(Eigen::Index count, Rng& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // Fisher-Yates with explicit draws; std::shuffle's draw pattern is not
  // pinned by the standard.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

template <typename Scalar>
Matrix<Scalar> gather_rows(const Matrix<Scalar>& data, const std::vector<Eigen::Index>& order, std::size_t begin,
                           std::size_t end) {
  Matrix<Scalar> out(static_cast<Eigen::Index>(end - begin), data.cols());
  for (std::size_t k = begin; k < end; ++k) out.row(static_cast<Eigen::Index>(k - begin)) = data.row(order[k]);
  return out;
}

/// CD-1 over shuffled mini-batches; the last short batch is used as-is.
template <typename Scalar>
RbmTrainingResult<Scalar> train_rbm(RbmLayer<Scalar> rbm, const Matrix<Scalar>& data, const CdConfig& cfg,
                                    Rng& rng) {
  cfg.validate();
  require_dims(data.cols() == rbm.visible_count(), "train_rbm: data width != visible count");
  if (data.rows() == 0) throw InvalidArgument("train_rbm: empty dataset");
  RbmTrainingResult<Scalar> result;
  auto velocity = RbmVelocity<Scalar>::zeros_like(rbm);
  const auto batch = static_cast<std::size_t>(cfg.minibatch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(data.rows(), rng);
    double weighted = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      auto step = cd1_update(rbm, gather_rows(data, order, begin, end), cfg, rng, velocity, cfg.momentum_at(epoch));
      rbm = std::move(step.layer);
      weighted += static_cast<double>(step.reconstruction_error) * static_cast<double>(end - begin);
    }
    result.epoch_errors.push_back(weighted / static_cast<double>(order.size()));
  }
  result.layer = std::move(rbm);
  return result;
}

}  // namespace shapecode

#endif  // SHAPECODE_RBM_HPP
