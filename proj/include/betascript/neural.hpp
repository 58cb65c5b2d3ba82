// Copyright 2026 The Betascript Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Stacked sparse autoencoders with a softmax head.
//
// Samples are matrix columns. Autoencoders use tied weights: the decoder is
// W^T with its own bias. Loss of one autoencoder on N samples of dimension d:
//
//   1/(N d) sum (y - x)^2 + l2 * sum W^2 + beta * sum_j KL(rho || rho_hat_j)
//
// where rho_hat_j is the mean activation of hidden unit j. The classifier loss
// is the mean cross-entropy. Training is full-batch gradient descent with
// momentum, in a fixed order, so results are reproducible bit for bit.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "betascript/error.hpp"

namespace betascript {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kSigmoid, kSoftmax };

struct DenseLayer {
  Matrix W;  // out x in
  Vector b;  // out
  Activation activation = Activation::kSigmoid;

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }
};

inline Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

// Column-wise softmax, shifted by the column maximum.
inline Matrix softmax(const Matrix& z) {
  Matrix e = (z.rowwise() - z.colwise().maxCoeff()).array().exp().matrix();
  return e.array().rowwise() / e.colwise().sum().array();
}

// Applies the layer to every column of `x`.
inline Matrix forward(const DenseLayer& layer, const Matrix& x) {
  if (x.rows() != layer.in_dim()) {
    throw Error(Error::Kind::kShapeMismatch, "layer expects " + std::to_string(layer.in_dim()) + " inputs, got " +
                                                 std::to_string(x.rows()));
  }
  Matrix z = layer.W * x;
  z.colwise() += layer.b;
  return layer.activation == Activation::kSigmoid ? sigmoid(z) : softmax(z);
}

inline Vector encode(const DenseLayer& layer, const Vector& x) { return forward(layer, Matrix(x)).col(0); }

struct AutoencoderHyper {
  int hidden = 240;
  int max_epochs = 400;
  double l2_weight = 0.004;
  double sparsity_weight = 4.0;
  double sparsity_proportion = 0.15;
};

struct SparseAutoencoder {
  DenseLayer encoder;
  Vector decoder_bias;
  AutoencoderHyper hyper;
  std::vector<double> loss_history;

  // Tied decoder: W^T with its own bias.
  DenseLayer decoder() const { return {encoder.W.transpose(), decoder_bias, Activation::kSigmoid}; }
};

struct TrainingConfig {
  AutoencoderHyper ae1{240, 400, 0.004, 4.0, 0.15};
  AutoencoderHyper ae2{120, 100, 0.002, 4.0, 0.10};
  double learning_rate = 0.01;  // autoencoder pretraining
  // Softmax training and fine-tuning. The cross-entropy gradients are small
  // once averaged over samples, and 0.01 leaves the classifier near uniform.
  double classifier_learning_rate = 0.5;
  double momentum = 0.9;
  std::uint64_t seed = 42;
  int softmax_epochs = 1000;
  double softmax_l2 = 0.0;
  bool fine_tune = true;
  int fine_tune_epochs = 100;
  std::size_t min_samples_per_subgroup = 50;

  void validate() const {
    auto check = [](bool ok, const char* what) {
      if (!ok) throw Error(Error::Kind::kInvalidInput, std::string("training config: ") + what);
    };
    for (const auto* h : {&ae1, &ae2}) {
      check(h->hidden > 0 && h->max_epochs >= 0, "hidden units and epochs must be positive");
      check(h->sparsity_proportion > 0.0 && h->sparsity_proportion < 1.0, "sparsity proportion must lie in (0, 1)");
      check(h->l2_weight >= 0.0 && h->sparsity_weight >= 0.0, "regularization weights must be non-negative");
    }
    check(learning_rate > 0.0 && classifier_learning_rate > 0.0, "learning rates must be positive");
    check(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
    check(softmax_epochs >= 0 && fine_tune_epochs >= 0, "epochs must be non-negative");
  }
};

namespace detail {

// Glorot-uniform weights, zero biases.
inline DenseLayer init_layer(Eigen::Index out, Eigen::Index in, Activation act, std::mt19937_64& rng) {
  DenseLayer l;
  l.activation = act;
  l.W.resize(out, in);
  l.b = Vector::Zero(out);
  const double r = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-r, r);
  for (Eigen::Index j = 0; j < in; ++j)
    for (Eigen::Index i = 0; i < out; ++i) l.W(i, j) = u(rng);
  return l;
}

inline void check_finite(double loss, const char* stage, int epoch) {
  if (!std::isfinite(loss)) {
    throw Error(Error::Kind::kNumerical,
                std::string(stage) + ": non-finite loss at epoch " + std::to_string(epoch));
  }
}

// One momentum step for a list of parameter blocks.
struct MomentumState {
  std::vector<Matrix> velocity;

  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr, double mu) {
    if (velocity.empty()) {
      for (const auto* p : params) velocity.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      velocity[k] = mu * velocity[k] - lr * grads[k];
      *params[k] += velocity[k];
    }
  }
};

}  // namespace detail

struct AutoencoderGradient {
  double loss = 0.0;
  Matrix dW;
  Vector db_enc;
  Vector db_dec;
};

inline AutoencoderGradient autoencoder_loss(const Matrix& W, const Vector& b_enc, const Vector& b_dec,
                                            const Matrix& X, const AutoencoderHyper& hp) {
  const double n = static_cast<double>(X.cols());
  const double d = static_cast<double>(X.rows());
  Matrix z1 = W * X;
  z1.colwise() += b_enc;
  const Matrix H = sigmoid(z1);
  Matrix z2 = W.transpose() * H;
  z2.colwise() += b_dec;
  const Matrix Y = sigmoid(z2);
  const Matrix diff = Y - X;
  const Vector rho_hat = H.rowwise().mean();
  const double rho = hp.sparsity_proportion;

  AutoencoderGradient g;
  const double kl = (rho * (rho / rho_hat.array()).log() +
                     (1.0 - rho) * ((1.0 - rho) / (1.0 - rho_hat.array())).log())
                        .sum();
  g.loss = diff.squaredNorm() / (n * d) + hp.l2_weight * W.squaredNorm() + hp.sparsity_weight * kl;

  const Matrix dz2 = ((2.0 / (n * d)) * diff.array() * Y.array() * (1.0 - Y.array())).matrix();
  const Vector dkl = hp.sparsity_weight *
                     ((-rho / rho_hat.array()) + (1.0 - rho) / (1.0 - rho_hat.array())).matrix() / n;
  Matrix dH = W * dz2;
  dH.colwise() += dkl;
  const Matrix dz1 = (dH.array() * H.array() * (1.0 - H.array())).matrix();
  g.dW = H * dz2.transpose() + dz1 * X.transpose() + 2.0 * hp.l2_weight * W;
  g.db_enc = dz1.rowwise().sum();
  g.db_dec = dz2.rowwise().sum();
  return g;
}

// `data` must already be scaled to [0, 1].
inline SparseAutoencoder train_autoencoder(const Matrix& data, const AutoencoderHyper& hp, double lr, double mu,
                                           std::uint64_t seed) {
  if (data.cols() < 2) throw Error(Error::Kind::kInvalidInput, "autoencoder training needs at least 2 samples");
  std::mt19937_64 rng(seed);
  SparseAutoencoder ae;
  ae.hyper = hp;
  ae.encoder = detail::init_layer(hp.hidden, data.rows(), Activation::kSigmoid, rng);
  // Hidden units start at the target activation, which keeps the sparsity
  // term from dominating the first epochs.
  ae.encoder.b.setConstant(std::log(hp.sparsity_proportion / (1.0 - hp.sparsity_proportion)));
  ae.decoder_bias = Vector::Zero(data.rows());
  Matrix b_enc = ae.encoder.b, b_dec = ae.decoder_bias;
  detail::MomentumState state;
  for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
    auto g = autoencoder_loss(ae.encoder.W, b_enc.col(0), b_dec.col(0), data, hp);
    detail::check_finite(g.loss, "autoencoder", epoch);
    ae.loss_history.push_back(g.loss);
    state.step({&ae.encoder.W, &b_enc, &b_dec}, {g.dW, g.db_enc, g.db_dec}, lr, mu);
  }
  ae.encoder.b = b_enc.col(0);
  ae.decoder_bias = b_dec.col(0);
  return ae;
}

// Labels are 0-based class indices < classes.
inline void check_labels(const std::vector<int>& labels, Eigen::Index samples, int classes) {
  if (static_cast<Eigen::Index>(labels.size()) != samples) {
    throw Error(Error::Kind::kShapeMismatch, "label count differs from sample count");
  }
  for (int y : labels)
    if (y < 0 || y >= classes) throw Error(Error::Kind::kInvalidInput, "label out of range");
}

struct SoftmaxGradient {
  double loss = 0.0;
  Matrix dW;
  Vector db;
};

inline SoftmaxGradient softmax_loss(const DenseLayer& layer, const Matrix& H, const std::vector<int>& labels,
                                    double l2) {
  const double n = static_cast<double>(H.cols());
  const Matrix P = forward(layer, H);
  SoftmaxGradient g;
  Matrix dz = P;
  for (Eigen::Index j = 0; j < H.cols(); ++j) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(j)]);
    g.loss -= std::log(std::max(P(y, j), 1e-300));
    dz(y, j) -= 1.0;
  }
  g.loss = g.loss / n + l2 * layer.W.squaredNorm();
  dz /= n;
  g.dW = dz * H.transpose() + 2.0 * l2 * layer.W;
  g.db = dz.rowwise().sum();
  return g;
}

inline DenseLayer train_softmax(const Matrix& H, const std::vector<int>& labels, int classes,
                                const TrainingConfig& cfg, std::vector<double>* history = nullptr) {
  if (classes < 1) throw Error(Error::Kind::kInvalidInput, "softmax needs at least one class");
  check_labels(labels, H.cols(), classes);
  DenseLayer layer{Matrix::Zero(classes, H.rows()), Vector::Zero(classes), Activation::kSoftmax};
  Matrix b = layer.b;
  detail::MomentumState state;
  for (int epoch = 0; epoch < cfg.softmax_epochs; ++epoch) {
    layer.b = b.col(0);
    auto g = softmax_loss(layer, H, labels, cfg.softmax_l2);
    detail::check_finite(g.loss, "softmax", epoch);
    if (history) history->push_back(g.loss);
    state.step({&layer.W, &b}, {g.dW, g.db}, cfg.classifier_learning_rate, cfg.momentum);
  }
  layer.b = b.col(0);
  return layer;
}

struct SubgroupNetwork {
  DenseLayer encoder1;
  DenseLayer encoder2;
  DenseLayer classifier;
  std::vector<double> training_log;

  Eigen::Index input_dim() const { return encoder1.in_dim(); }
  Eigen::Index classes() const { return classifier.out_dim(); }
};

inline Matrix predict(const SubgroupNetwork& net, const Matrix& X) {
  return forward(net.classifier, forward(net.encoder2, forward(net.encoder1, X)));
}

inline Vector predict(const SubgroupNetwork& net, const Vector& x) { return predict(net, Matrix(x)).col(0); }

struct StackGradient {
  double loss = 0.0;
  Matrix dW1, dW2, dW3;
  Vector db1, db2, db3;
};

// Mean cross-entropy of the full stack and its gradient.
inline StackGradient stack_loss(const SubgroupNetwork& net, const Matrix& X, const std::vector<int>& labels) {
  const double n = static_cast<double>(X.cols());
  const Matrix H1 = forward(net.encoder1, X);
  const Matrix H2 = forward(net.encoder2, H1);
  const Matrix P = forward(net.classifier, H2);
  StackGradient g;
  Matrix dz3 = P;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(j)]);
    g.loss -= std::log(std::max(P(y, j), 1e-300));
    dz3(y, j) -= 1.0;
  }
  g.loss /= n;
  dz3 /= n;
  g.dW3 = dz3 * H2.transpose();
  g.db3 = dz3.rowwise().sum();
  const Matrix dz2 = ((net.classifier.W.transpose() * dz3).array() * H2.array() * (1.0 - H2.array())).matrix();
  g.dW2 = dz2 * H1.transpose();
  g.db2 = dz2.rowwise().sum();
  const Matrix dz1 = ((net.encoder2.W.transpose() * dz2).array() * H1.array() * (1.0 - H1.array())).matrix();
  g.dW1 = dz1 * X.transpose();
  g.db1 = dz1.rowwise().sum();
  return g;
}

inline SubgroupNetwork fine_tune(SubgroupNetwork net, const Matrix& X, const std::vector<int>& labels,
                                 const TrainingConfig& cfg) {
  check_labels(labels, X.cols(), static_cast<int>(net.classes()));
  Matrix b1 = net.encoder1.b, b2 = net.encoder2.b, b3 = net.classifier.b;
  detail::MomentumState state;
  for (int epoch = 0; epoch < cfg.fine_tune_epochs; ++epoch) {
    net.encoder1.b = b1.col(0);
    net.encoder2.b = b2.col(0);
    net.classifier.b = b3.col(0);
    auto g = stack_loss(net, X, labels);
    detail::check_finite(g.loss, "fine-tune", epoch);
    net.training_log.push_back(g.loss);
    state.step({&net.encoder1.W, &b1, &net.encoder2.W, &b2, &net.classifier.W, &b3},
               {g.dW1, g.db1, g.dW2, g.db2, g.dW3, g.db3}, cfg.classifier_learning_rate, cfg.momentum);
  }
  net.encoder1.b = b1.col(0);
  net.encoder2.b = b2.col(0);
  net.classifier.b = b3.col(0);
  return net;
}

// Greedy layer-wise pretraining, softmax on h(2), then optional fine-tuning.
// `X` holds scaled samples as columns.
inline SubgroupNetwork train_network(const Matrix& X, const std::vector<int>& labels, int classes,
                                     const TrainingConfig& cfg) {
  cfg.validate();
  check_labels(labels, X.cols(), classes);
  SubgroupNetwork net;
  const auto ae1 = train_autoencoder(X, cfg.ae1, cfg.learning_rate, cfg.momentum, cfg.seed);
  net.encoder1 = ae1.encoder;
  const Matrix H1 = forward(net.encoder1, X);
  const auto ae2 = train_autoencoder(H1, cfg.ae2, cfg.learning_rate, cfg.momentum, cfg.seed + 1);
  net.encoder2 = ae2.encoder;
  const Matrix H2 = forward(net.encoder2, H1);
  net.classifier = train_softmax(H2, labels, classes, cfg);
  net.training_log.push_back(stack_loss(net, X, labels).loss);
  if (cfg.fine_tune) net = fine_tune(std::move(net), X, labels, cfg);
  return net;
}

// Per-dimension min-max scaling fitted on training data.
struct MinMaxScaler {
  Vector min;
  Vector max;

  static MinMaxScaler fit(const Matrix& X) {
    if (X.cols() == 0) throw Error(Error::Kind::kInvalidInput, "cannot fit a scaler on no samples");
    return {X.rowwise().minCoeff(), X.rowwise().maxCoeff()};
  }

  // Constant dimensions map to 0.
  Matrix transform(const Matrix& X) const {
    if (X.rows() != min.size()) throw Error(Error::Kind::kShapeMismatch, "scaler dimension mismatch");
    Matrix out(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double range = max[i] - min[i];
      if (range > 0.0) {
        out.row(i) = (X.row(i).array() - min[i]) / range;
      } else {
        out.row(i).setZero();
      }
    }
    return out;
  }
};

}  // namespace betascript
