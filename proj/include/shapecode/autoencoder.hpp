#ifndef SHAPECODE_AUTOENCODER_HPP
#define SHAPECODE_AUTOENCODER_HPP

#include "shapecode/dbn.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace shapecode {

enum class Activation : std::uint8_t { sigmoid = 0, linear = 1 };

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // in x out
  Vector<Scalar> bias;
  Activation activation = Activation::sigmoid;

  Eigen::Index in_dim() const { return weights.rows(); }
  Eigen::Index out_dim() const { return weights.cols(); }
};

/// Encoder layers followed by decoder layers; the output of layer
/// encoder_depth-1 is the code.
template <typename Scalar>
struct AutoencoderNet {
  std::vector<DenseLayer<Scalar>> layers;
  std::size_t encoder_depth = 0;

  Eigen::Index input_dim() const { return layers.front().in_dim(); }
  Eigen::Index code_dim() const { return layers[encoder_depth - 1].out_dim(); }

  void check() const {
    if (layers.empty() || encoder_depth == 0 || encoder_depth > layers.size())
      throw InvalidArgument("autoencoder has no encoder layers");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      require_dims(layers[k].bias.size() == layers[k].out_dim(), "autoencoder layer bias size mismatch");
      if (k + 1 < layers.size())
        require_dims(layers[k].out_dim() == layers[k + 1].in_dim(), "autoencoder layers do not chain");
    }
    require_dims(layers.back().out_dim() == input_dim(), "autoencoder output size != input size");
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }
};

/// Mirrors the stack: encoder layer k takes (W_k, b_k); its decoder mirror
/// takes (W_k^T, a_k). The code layer is linear, every other layer sigmoid.
template <typename Scalar>
AutoencoderNet<Scalar> unfold(const DbnStack<Scalar>& stack) {
  stack.check();
  AutoencoderNet<Scalar> net;
  const std::size_t depth = stack.layers.size();
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& rbm = stack.layers[k];
    net.layers.push_back({rbm.weights, rbm.hidden_bias,
                          rbm.hidden_kind == UnitKind::gaussian_linear ? Activation::linear : Activation::sigmoid});
  }
  for (std::size_t k = depth; k-- > 0;) {
    const auto& rbm = stack.layers[k];
    net.layers.push_back({rbm.weights.transpose(), rbm.visible_bias, Activation::sigmoid});
  }
  net.encoder_depth = depth;
  return net;
}

template <typename Scalar>
void apply_activation(Matrix<Scalar>& z, Activation activation) {
  if (activation == Activation::sigmoid) z = sigmoid_array(z);
}

/// Activations of every layer, input first. Rows are samples.
template <typename Scalar, typename Derived>
std::vector<Matrix<Scalar>> forward_batch(const AutoencoderNet<Scalar>& net, const Eigen::MatrixBase<Derived>& x,
                                          std::size_t layer_count) {
  require_dims(x.cols() == net.input_dim(), "autoencoder: input size mismatch");
  std::vector<Matrix<Scalar>> acts;
  acts.reserve(layer_count + 1);
  acts.emplace_back(x);
  for (std::size_t k = 0; k < layer_count; ++k) {
    Matrix<Scalar> z = acts.back() * net.layers[k].weights;
    z.rowwise() += net.layers[k].bias.transpose();
    apply_activation(z, net.layers[k].activation);
    acts.push_back(std::move(z));
  }
  return acts;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> reconstruct_batch(const AutoencoderNet<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  return std::move(forward_batch(net, x, net.layers.size()).back());
}

template <typename Scalar, typename Derived>
Matrix<Scalar> encode_batch(const AutoencoderNet<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  return std::move(forward_batch(net, x, net.encoder_depth).back());
}

template <typename Scalar, typename Derived>
Vector<Scalar> reconstruct(const AutoencoderNet<Scalar>& net, const Eigen::MatrixBase<Derived>& v) {
  return reconstruct_batch(net, v.transpose()).transpose();
}

template <typename Scalar, typename Derived>
Vector<Scalar> encode(const AutoencoderNet<Scalar>& net, const Eigen::MatrixBase<Derived>& v) {
  return encode_batch(net, v.transpose()).transpose();
}

/// Root mean squared reconstruction error per pixel over a dataset.
template <typename Scalar>
double reconstruction_rmse(const AutoencoderNet<Scalar>& net, const Matrix<Scalar>& data) {
  if (data.size() == 0) return 0.0;
  const Matrix<Scalar> recon = reconstruct_batch(net, data);
  return std::sqrt(static_cast<double>((recon - data).squaredNorm()) / static_cast<double>(data.size()));
}

template <typename Scalar>
struct NetGradient {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;
};

/// Loss 0.5 * sum of squared reconstruction errors / batch rows, and its
/// gradient by backpropagation.
template <typename Scalar>
std::pair<Scalar, NetGradient<Scalar>> loss_and_gradient(const AutoencoderNet<Scalar>& net,
                                                         const Matrix<Scalar>& batch) {
  const auto acts = forward_batch(net, batch, net.layers.size());
  const Scalar count = static_cast<Scalar>(batch.rows());
  const Matrix<Scalar> residual = acts.back() - batch;
  const Scalar loss = Scalar(0.5) * residual.squaredNorm() / count;

  auto derivative = [](const Matrix<Scalar>& a, Activation act) -> Matrix<Scalar> {
    if (act == Activation::linear) return Matrix<Scalar>::Ones(a.rows(), a.cols());
    return (a.array() * (Scalar(1) - a.array())).matrix();
  };

  const std::size_t n = net.layers.size();
  NetGradient<Scalar> grad;
  grad.weights.resize(n);
  grad.biases.resize(n);
  Matrix<Scalar> delta = (residual / count).cwiseProduct(derivative(acts[n], net.layers[n - 1].activation));
  for (std::size_t k = n; k-- > 0;) {
    grad.weights[k] = acts[k].transpose() * delta;
    grad.biases[k] = delta.colwise().sum().transpose();
    if (k > 0)
      delta = (delta * net.layers[k].weights.transpose()).cwiseProduct(derivative(acts[k], net.layers[k - 1].activation));
  }
  return {loss, std::move(grad)};
}

struct FinetuneConfig {
  double learning_rate = 0.01;
  int epochs = 100;
  int minibatch_size = 100;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(learning_rate >= 0.0) || epochs < 1 || minibatch_size < 1)
      throw InvalidArgument("FinetuneConfig needs learning_rate >= 0, epochs >= 1, minibatch_size >= 1");
  }
};

template <typename Scalar>
struct FinetuneResult {
  AutoencoderNet<Scalar> net;
  double initial_rmse = 0.0;
  std::vector<double> epoch_rmse;  // dataset RMSE after each epoch
};

/// Plain mini-batch gradient descent on the reconstruction loss over
/// shuffled batches.
template <typename Scalar>
FinetuneResult<Scalar> finetune(AutoencoderNet<Scalar> net, const Matrix<Scalar>& data, const FinetuneConfig& cfg) {
  cfg.validate();
  net.check();
  require_dims(data.cols() == net.input_dim(), "finetune: data width != input size");
  if (data.rows() == 0) throw InvalidArgument("finetune: empty dataset");
  FinetuneResult<Scalar> result;
  result.initial_rmse = reconstruction_rmse(net, data);
  Rng rng(cfg.rng_seed);
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const auto batch = static_cast<std::size_t>(cfg.minibatch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = epoch_order(data.rows(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const auto [loss, grad] = loss_and_gradient(net, gather_rows(data, order, begin, end));
      for (std::size_t k = 0; k < net.layers.size(); ++k) {
        net.layers[k].weights -= lr * grad.weights[k];
        net.layers[k].bias -= lr * grad.biases[k];
      }
    }
    if (!net.all_finite()) throw TrainingDiverged(epoch, "fine-tuning diverged in epoch " + std::to_string(epoch));
    result.epoch_rmse.push_back(reconstruction_rmse(net, data));
  }
  result.net = std::move(net);
  return result;
}

}  // namespace shapecode

#endif  // SHAPECODE_AUTOENCODER_HPP
