// Fully connected leaky-ReLU network with a scalar linear output, trained by
// minibatch SGD with an l1 penalty on one layer and accuracy-based early
// stopping.
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "spoofdet/common.hpp"

namespace spoofdet {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Parameters of the network. Every layer but the last applies a leaky ReLU
/// with slope `negative_slope` for negative preactivations (also at exactly 0).
struct MlpParams {
  std::vector<DenseLayer> layers;
  double negative_slope = 0.01;

  std::size_t input_size() const;
  /// [input, hidden..., output]
  std::vector<std::size_t> layer_sizes() const;
  std::size_t parameter_count() const;
};

/// Same shape as MlpParams.
struct GradientBundle {
  std::vector<DenseLayer> layers;

  static GradientBundle zeros_like(const MlpParams& params);
  GradientBundle& operator+=(const GradientBundle& other);
};

/// Weights ~ U(-a, a) with a = sqrt(3 / fan_in) (unit-variance preactivations
/// for unit-variance inputs), biases zero.
MlpParams init_params(std::span<const std::size_t> layer_sizes, std::uint64_t seed,
                      double negative_slope = 0.01);

double forward(const MlpParams& params, std::span<const double> input);

/// Activations per layer kept for the backward pass. `inputs[l]` is the input
/// of layer l, `preactivations[l]` its affine output.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> preactivations;
};

/// Column-batched forward pass: one example per column of `inputs`.
Eigen::RowVectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                 ForwardCache* cache = nullptr);

/// Gradient of sum_i upstream[i] * output_i with respect to every parameter.
GradientBundle backward_batch(const MlpParams& params, const ForwardCache& cache,
                              const Eigen::RowVectorXd& upstream);

GradientBundle backward(const MlpParams& params, std::span<const double> input, double upstream);

/// theta <- theta - lr * (grad + l1 * sign(W)) where the sign term only
/// applies to the weights of layer `l1_layer` (sign(0) = 0).
void sgd_step(MlpParams& params, const GradientBundle& grads, double learning_rate, double l1,
              std::size_t l1_layer = 0);

inline constexpr std::size_t kUnlimitedPatience = std::numeric_limits<std::size_t>::max();

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  double l1 = 1e-4;
  std::size_t l1_layer = 0;
  double negative_slope = 0.01;
  std::vector<std::size_t> hidden_layers{512, 512, 512};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mean loss and its gradient over a set of example indices.
class TrainingObjective {
 public:
  virtual ~TrainingObjective() = default;
  virtual std::size_t num_examples() const = 0;
  /// Writes the gradient of the mean loss over `batch` into `grad` (shaped
  /// like params) and returns that mean loss.
  virtual double loss_and_gradient(const MlpParams& params, std::span<const std::size_t> batch,
                                   GradientBundle& grad) const = 0;
};

/// Validation accuracy in [0, 1] of a parameter snapshot.
using ValidationOracle = std::function<double(const MlpParams&)>;

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean data loss over the epoch's minibatches
  double val_accuracy = 0.0;
};

struct TrainResult {
  MlpParams best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Minibatch SGD over reshuffled examples. After every epoch the validation
/// oracle is queried; the earliest snapshot with the highest accuracy is kept
/// and training stops after `patience` epochs without improvement or at
/// `max_epochs`. Throws TrainingError on a non-finite loss.
TrainResult train_loop(MlpParams params, const TrainingObjective& objective,
                       const ValidationOracle& validate, const TrainConfig& config);

}  // namespace spoofdet
