#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "posemo/binio.hpp"
#include "posemo/error.hpp"
#include "posemo/parallel.hpp"
#include "posemo/rng.hpp"

namespace posemo {

enum class LossKind { SoftmaxCrossEntropy, BinaryCrossEntropy };

// All nets keep their parameters in one flat vector so the trainer, the
// checkpoint writer and the gradient checker treat them alike.
class Net {
 public:
  virtual ~Net() = default;
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

 protected:
  std::vector<double> params_;
};

// Three-by-three convolution blocks (tanh, 2x2 average pool), global average
// pool, dense softmax head.
class ConvEncoder : public Net {
 public:
  struct Shape {
    std::size_t in_channels = 2;
    std::size_t height = 32;
    std::size_t width = 32;
    std::vector<std::size_t> channels{8, 16, 32};
    std::size_t classes = 2;
  };

  ConvEncoder() = default;
  ConvEncoder(Shape shape, std::uint64_t seed);

  const Shape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t input_size() const { return shape_.in_channels * shape_.height * shape_.width; }
  std::size_t embedding_size() const { return shape_.channels.back(); }

  // Pooled activation before the head (not normalized).
  std::vector<double> features(std::span<const double> input) const;
  std::vector<double> logits(std::span<const double> input) const;
  std::vector<double> probabilities(std::span<const double> input) const;

  // Softmax cross-entropy against class `target`, times `weight`. Adds the
  // parameter gradient into `grad` when non-empty.
  double loss_grad(std::span<const double> input, std::size_t target, std::span<double> grad, double weight = 1.0) const;

  void write(ByteWriter& out) const;
  static ConvEncoder read(ByteReader& in);

 private:
  struct Layout {
    std::size_t w, b;
  };
  struct Cache;
  void build_layout();
  void forward(std::span<const double> input, Cache& cache) const;

  Shape shape_;
  std::uint64_t seed_ = 0;
  std::vector<Layout> conv_;
  std::vector<std::size_t> dims_;  // spatial size entering each block: h0, w0, h1, w1, ...
  std::size_t head_w_ = 0, head_b_ = 0;
};

// A sequence is steps x input values, row-major.
struct SequenceInput {
  std::size_t steps = 0;
  std::vector<double> values;
};

// Gated recurrent cell (input, forget, cell, output gates), mean pool over all
// step outputs, dense sigmoid head. Inputs are multiplied by `input_scale`.
class RecurrentNet : public Net {
 public:
  struct Shape {
    std::size_t input = 1;
    std::size_t hidden = 64;
    std::size_t outputs = 1;
    double input_scale = 1.0;
  };

  RecurrentNet() = default;
  RecurrentNet(Shape shape, std::uint64_t seed);

  const Shape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  void zero_head();

  std::vector<double> forward(const SequenceInput& x) const;
  // Hidden and cell states after every step, for inspection.
  void trace(const SequenceInput& x, std::vector<double>& hidden, std::vector<double>& cell) const;

  // Mean per-class binary cross-entropy times `weight`.
  double loss_grad(const SequenceInput& x, std::span<const double> target, std::span<double> grad,
                   double weight = 1.0) const;

  void write(ByteWriter& out) const;
  static RecurrentNet read(ByteReader& in);

 private:
  void check(const SequenceInput& x) const;

  Shape shape_;
  std::uint64_t seed_ = 0;
  std::size_t wx_ = 0, wh_ = 0, b_ = 0, wo_ = 0, bo_ = 0;
};

// Same-padded kernel-3 convolution over steps, tanh, max pool over time,
// dense sigmoid head.
class Conv1DNet : public Net {
 public:
  struct Shape {
    std::size_t input = 1;
    std::size_t channels = 32;
    std::size_t outputs = 1;
    double input_scale = 1.0;
  };

  Conv1DNet() = default;
  Conv1DNet(Shape shape, std::uint64_t seed);

  const Shape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  void zero_head();

  std::vector<double> forward(const SequenceInput& x) const;
  double loss_grad(const SequenceInput& x, std::span<const double> target, std::span<double> grad,
                   double weight = 1.0) const;

  void write(ByteWriter& out) const;
  static Conv1DNet read(ByteReader& in);

 private:
  void check(const SequenceInput& x) const;

  Shape shape_;
  std::uint64_t seed_ = 0;
  std::size_t w_ = 0, b_ = 0, wo_ = 0, bo_ = 0;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

// Mean binary cross-entropy of sigmoid(logits) against targets.
double bce_with_logits(std::span<const double> logits, std::span<const double> target);

struct TrainSpec {
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::BinaryCrossEntropy;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 5.0;
  // Early stopping on the validation score (higher is better); 0 disables.
  std::size_t patience = 0;

  void validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
    if (epochs == 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (batch == 0) throw Error(ErrorCode::InvalidArgument, "batch must be >= 1");
  }
};

struct TrainResult {
  std::vector<double> epoch_loss;
  std::vector<double> val_score;
  std::size_t best_epoch = 0;
};

// Mini-batch SGD with momentum. Samples are visited in a seeded shuffle; the
// per-sample gradients of a batch are computed in parallel and summed in index
// order, so results do not depend on the thread count. With a validator and
// nonzero patience the parameters of the best-scoring epoch are restored.
template <class NetT, class X, class Y>
TrainResult train(NetT& net, std::span<const X> inputs, std::span<const Y> targets, const TrainSpec& spec,
                  const std::function<double(const NetT&)>& validator = {}) {
  spec.validate();
  if (inputs.empty()) throw Error(ErrorCode::EmptySequence, "training set is empty");
  if (inputs.size() != targets.size()) throw Error(ErrorCode::LengthMismatch, "inputs and targets differ in length");
  const std::size_t n = inputs.size();
  const std::size_t p = net.num_params();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  std::vector<double> velocity(p, 0.0), grad(p);
  std::vector<std::vector<double>> sample_grad(spec.batch, std::vector<double>(p));
  std::vector<double> sample_loss(spec.batch);

  TrainResult result;
  std::optional<double> best;
  std::vector<double> best_params;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += spec.batch) {
      const std::size_t m = std::min(spec.batch, n - start);
      const double w = 1.0 / static_cast<double>(m);
      LoopErrors errors;
#pragma omp parallel for schedule(static)
      for (std::size_t k = 0; k < m; ++k) {
        errors.run(k, [&] {
          auto& g = sample_grad[k];
          std::fill(g.begin(), g.end(), 0.0);
          sample_loss[k] = net.loss_grad(inputs[order[start + k]], targets[order[start + k]], g, w);
        });
      }
      errors.rethrow();
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        total += sample_loss[k];
        for (std::size_t j = 0; j < p; ++j) grad[j] += sample_grad[k][j];
      }
      double norm = 0.0;
      for (double g : grad) norm += g * g;
      norm = std::sqrt(norm);
      if (!std::isfinite(norm) || !std::isfinite(total)) {
        throw Error(ErrorCode::DivergedLoss, "loss diverged in epoch " + std::to_string(epoch));
      }
      const double clip = spec.clip_norm > 0.0 && norm > spec.clip_norm ? spec.clip_norm / norm : 1.0;
      auto& params = net.params();
      for (std::size_t j = 0; j < p; ++j) {
        velocity[j] = spec.momentum * velocity[j] + clip * grad[j];
        params[j] -= spec.lr * velocity[j];
      }
    }
    const double mean = total / static_cast<double>((n + spec.batch - 1) / spec.batch);
    if (!std::isfinite(mean)) throw Error(ErrorCode::DivergedLoss, "loss diverged in epoch " + std::to_string(epoch));
    result.epoch_loss.push_back(mean);
    if (validator) {
      const double score = validator(net);
      result.val_score.push_back(score);
      if (!best || score > *best) {
        best = score;
        best_params = net.params();
        result.best_epoch = epoch;
        since_best = 0;
      } else if (spec.patience > 0 && ++since_best >= spec.patience) {
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (validator && spec.patience > 0 && best) net.params() = best_params;
  return result;
}

// Central finite-difference check of loss_grad over every parameter.
// Returns the largest |a - n| / max(|a| + |n|, floor).
template <class NetT, class X, class Y>
double max_gradient_error(NetT net, const X& x, const Y& y, double h = 1e-5, double floor = 1e-6) {
  std::vector<double> analytic(net.num_params(), 0.0);
  net.loss_grad(x, y, analytic);
  std::span<double> none;
  double worst = 0.0;
  for (std::size_t j = 0; j < net.num_params(); ++j) {
    const double keep = net.params()[j];
    net.params()[j] = keep + h;
    const double up = net.loss_grad(x, y, none);
    net.params()[j] = keep - h;
    const double down = net.loss_grad(x, y, none);
    net.params()[j] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[j] - numeric) / std::max(std::abs(analytic[j]) + std::abs(numeric), floor);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace posemo
