#ifndef SHAPECODE_DBN_HPP
#define SHAPECODE_DBN_HPP

#include "shapecode/rbm.hpp"

#include <string>
#include <vector>

namespace shapecode {

using LayerSizes = std::vector<Eigen::Index>;

/// 72x72 input, 30-d code.
inline LayerSizes psb_layer_sizes() { return {5184, 1000, 500, 250, 30}; }
/// 72x72 input, 20-d code.
inline LayerSizes esb_layer_sizes() { return {5184, 2000, 500, 100, 20}; }

template <typename Scalar>
struct DbnStack {
  std::vector<RbmLayer<Scalar>> layers;

  LayerSizes layer_sizes() const {
    LayerSizes sizes;
    if (layers.empty()) return sizes;
    sizes.push_back(layers.front().visible_count());
    for (const auto& l : layers) sizes.push_back(l.hidden_count());
    return sizes;
  }

  /// Chained dimensions, binary hiddens everywhere except a linear top.
  void check() const {
    if (layers.empty()) throw InvalidArgument("DBN stack is empty");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto& l = layers[k];
      require_dims(l.consistent(), "DBN layer " + std::to_string(k) + " has inconsistent biases");
      if (k + 1 < layers.size())
        require_dims(l.hidden_count() == layers[k + 1].visible_count(),
                     "DBN layer " + std::to_string(k) + " does not chain into the next");
      const UnitKind expected = k + 1 == layers.size() ? UnitKind::gaussian_linear : UnitKind::binary;
      if (l.hidden_kind != expected)
        throw InvalidArgument("DBN layer " + std::to_string(k) + " has the wrong hidden unit kind");
    }
  }
};

/// Per-layer CD settings: binary layers at lr_binary, the linear top at lr_top.
/// Layer k is seeded with seed + k.
inline std::vector<CdConfig> default_pretrain_schedule(std::size_t layer_count, int epochs = 40,
                                                       int minibatch_size = 100, double lr_binary = 0.1,
                                                       double lr_top = 0.001, std::uint64_t seed = 0) {
  std::vector<CdConfig> schedule(layer_count);
  for (std::size_t k = 0; k < layer_count; ++k) {
    schedule[k].epochs = epochs;
    schedule[k].minibatch_size = minibatch_size;
    schedule[k].learning_rate = k + 1 == layer_count ? lr_top : lr_binary;
    schedule[k].rng_seed = seed + k;
  }
  return schedule;
}

template <typename Scalar>
struct PretrainResult {
  DbnStack<Scalar> stack;
  std::vector<std::vector<double>> layer_errors;  // per layer, per epoch
};

/// Greedy layer-wise training. Layer 0 sees the data; layer k > 0 sees the
/// hidden activation probabilities of layer k-1 on its own input.
template <typename Scalar>
PretrainResult<Scalar> pretrain(const Matrix<Scalar>& data, const LayerSizes& sizes,
                                const std::vector<CdConfig>& schedule) {
  if (sizes.size() < 2) throw InvalidArgument("pretrain needs at least two layer sizes");
  if (schedule.size() != sizes.size() - 1) throw InvalidArgument("pretrain needs one CdConfig per layer");
  require_dims(data.cols() == sizes.front(), "pretrain: data width != input layer size");
  if ((data.array() < Scalar(0)).any() || (data.array() > Scalar(1)).any())
    throw InvalidArgument("pretrain: inputs must lie in [0,1]");

  PretrainResult<Scalar> result;
  Matrix<Scalar> input = data;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const bool top = k + 2 == sizes.size();
    Rng rng(schedule[k].rng_seed);
    auto layer = RbmLayer<Scalar>::random(sizes[k], sizes[k + 1], top ? UnitKind::gaussian_linear : UnitKind::binary,
                                          rng);
    try {
      auto trained = train_rbm(std::move(layer), input, schedule[k], rng);
      result.layer_errors.push_back(std::move(trained.epoch_errors));
      layer = std::move(trained.layer);
    } catch (const TrainingDiverged&) {
      throw TrainingDiverged(static_cast<int>(k), "pretraining diverged in layer " + std::to_string(k));
    }
    if (!top) input = hidden_given_visible_batch(layer, input);
    result.stack.layers.push_back(std::move(layer));
  }
  return result;
}

/// Deterministic mean-field pass; the top layer returns its linear mean.
template <typename Scalar, typename Derived>
Matrix<Scalar> propagate_up_batch(const DbnStack<Scalar>& stack, const Eigen::MatrixBase<Derived>& v) {
  require_dims(!stack.layers.empty() && v.cols() == stack.layers.front().visible_count(),
               "propagate_up: input size mismatch");
  Matrix<Scalar> x = v;
  for (const auto& layer : stack.layers) x = hidden_given_visible_batch(layer, x);
  return x;
}

template <typename Scalar, typename Derived>
Vector<Scalar> propagate_up(const DbnStack<Scalar>& stack, const Eigen::MatrixBase<Derived>& v) {
  return propagate_up_batch(stack, v.transpose()).transpose();
}

}  // namespace shapecode

#endif  // SHAPECODE_DBN_HPP
