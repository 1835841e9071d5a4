#include "spoofdet/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "spoofdet/common.hpp"

namespace spoofdet {

std::size_t MlpParams::input_size() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::vector<std::size_t> MlpParams::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(input_size());
  for (const auto& l : layers) sizes.push_back(static_cast<std::size_t>(l.weights.rows()));
  return sizes;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += std::size_t(l.weights.size() + l.bias.size());
  return n;
}

GradientBundle GradientBundle::zeros_like(const MlpParams& params) {
  GradientBundle g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

GradientBundle& GradientBundle::operator+=(const GradientBundle& other) {
  if (other.layers.size() != layers.size()) throw DimensionError("gradient bundle shape mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weights += other.layers[i].weights;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

MlpParams init_params(std::span<const std::size_t> layer_sizes, std::uint64_t seed,
                      double negative_slope) {
  if (layer_sizes.size() < 2) throw ConfigError("layer_sizes", "need input and output sizes");
  if (std::find(layer_sizes.begin(), layer_sizes.end(), 0) != layer_sizes.end()) {
    throw ConfigError("layer_sizes", "layer sizes must be positive");
  }
  Engine rng = make_engine(seed);
  MlpParams p;
  p.negative_slope = negative_slope;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const auto in = long(layer_sizes[i]);
    const auto out = long(layer_sizes[i + 1]);
    const double bound = std::sqrt(3.0 / double(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    // Row-major fill order so the draw sequence does not depend on storage order.
    for (long r = 0; r < out; ++r) {
      for (long c = 0; c < in; ++c) layer.weights(r, c) = u(rng);
    }
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace {

void check_input(const MlpParams& params, long rows) {
  if (params.layers.empty()) throw DimensionError("network has no layers");
  if (rows != params.layers.front().weights.cols()) {
    throw DimensionError("input length " + std::to_string(rows) + " does not match network input " +
                         std::to_string(params.layers.front().weights.cols()));
  }
}

}  // namespace

Eigen::RowVectorXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                 ForwardCache* cache) {
  check_input(params, inputs.rows());
  if (params.layers.back().weights.rows() != 1) {
    throw DimensionError("network output layer must have a single neuron");
  }
  const double slope = params.negative_slope;
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  Eigen::MatrixXd a = inputs;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weights * a;
    z.colwise() += layer.bias;
    if (cache) cache->inputs.push_back(std::move(a));
    if (l == last) {
      if (cache) cache->preactivations.push_back(z);
      return z.row(0);
    }
    a = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    if (cache) cache->preactivations.push_back(std::move(z));
  }
  return {};  // unreachable
}

double forward(const MlpParams& params, std::span<const double> input) {
  check_input(params, long(input.size()));
  const double slope = params.negative_slope;
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), long(input.size()));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Eigen::VectorXd z = params.layers[l].weights * a + params.layers[l].bias;
    if (l + 1 == params.layers.size()) {
      if (z.size() != 1) throw DimensionError("network output layer must have a single neuron");
      return z(0);
    }
    a = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  }
  throw DimensionError("network has no layers");
}

GradientBundle backward_batch(const MlpParams& params, const ForwardCache& cache,
                              const Eigen::RowVectorXd& upstream) {
  const std::size_t depth = params.layers.size();
  if (cache.inputs.size() != depth || cache.preactivations.size() != depth) {
    throw DimensionError("forward cache does not match network depth");
  }
  if (upstream.size() != cache.inputs.front().cols()) {
    throw DimensionError("upstream gradient length does not match batch size");
  }
  const double slope = params.negative_slope;
  GradientBundle g;
  g.layers.resize(depth);
  Eigen::MatrixXd delta = upstream;  // d(objective)/d(preactivation), 1 x B
  for (std::size_t l = depth; l-- > 0;) {
    g.layers[l].weights.noalias() = delta * cache.inputs[l].transpose();
    g.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = params.layers[l].weights.transpose() * delta;
    const auto& z = cache.preactivations[l - 1];
    delta = back.cwiseProduct(z.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }));
  }
  return g;
}

GradientBundle backward(const MlpParams& params, std::span<const double> input, double upstream) {
  check_input(params, long(input.size()));
  ForwardCache cache;
  const Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(input.data(), long(input.size()), 1);
  forward_batch(params, x, &cache);
  Eigen::RowVectorXd up(1);
  up(0) = upstream;
  return backward_batch(params, cache, up);
}

void sgd_step(MlpParams& params, const GradientBundle& grads, double learning_rate, double l1,
              std::size_t l1_layer) {
  if (grads.layers.size() != params.layers.size()) {
    throw DimensionError("gradient bundle does not match parameters");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    const auto& g = grads.layers[l];
    if (g.weights.rows() != p.weights.rows() || g.weights.cols() != p.weights.cols() ||
        g.bias.size() != p.bias.size()) {
      throw DimensionError("gradient shape mismatch at layer " + std::to_string(l));
    }
    if (l == l1_layer && l1 != 0.0) {
      p.weights -= learning_rate * (g.weights + l1 * p.weights.cwiseSign());
    } else {
      p.weights -= learning_rate * g.weights;
    }
    p.bias -= learning_rate * g.bias;
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate", "must be > 0");
  }
  if (batch_size == 0) throw ConfigError("batch_size", "must be >= 1");
  if (max_epochs == 0) throw ConfigError("max_epochs", "must be >= 1");
  if (patience == 0) throw ConfigError("patience", "must be >= 1");
  if (!(l1 >= 0.0) || !std::isfinite(l1)) throw ConfigError("l1", "must be >= 0");
  if (!(negative_slope >= 0.0) || !(negative_slope < 1.0)) {
    throw ConfigError("negative_slope", "must lie in [0, 1)");
  }
  if (std::find(hidden_layers.begin(), hidden_layers.end(), 0) != hidden_layers.end()) {
    throw ConfigError("hidden_layers", "hidden layer widths must be positive");
  }
}

TrainResult train_loop(MlpParams params, const TrainingObjective& objective,
                       const ValidationOracle& validate, const TrainConfig& config) {
  config.validate();
  const std::size_t n = objective.num_examples();
  if (n == 0) throw TrainingError("training objective has no examples");

  Engine rng = make_engine(derive_seed(config.seed, "shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.best = params;
  double best_accuracy = -1.0;
  std::size_t since_best = 0;
  GradientBundle grad = GradientBundle::zeros_like(params);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      const double loss = objective.loss_and_gradient(
          params, std::span<const std::size_t>(order).subspan(start, len), grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << " (learning rate "
            << config.learning_rate << " may be too large)";
        throw TrainingError(msg.str());
      }
      sgd_step(params, grad, config.learning_rate, config.l1, config.l1_layer);
      loss_sum += loss;
      ++batches;
    }
    const double accuracy = validate(params);
    result.history.push_back({epoch, loss_sum / double(batches), accuracy});
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      result.best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace spoofdet
