#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "spoofdet/neural.hpp"

using namespace spoofdet;

namespace {

// Plain nested-loop forward pass used as an oracle for the Eigen version.
double oracle_forward(const MlpParams& p, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& W = p.layers[l].weights;
    std::vector<double> z(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double s = p.layers[l].bias(r);
      for (Eigen::Index c = 0; c < W.cols(); ++c) s += W(r, c) * a[std::size_t(c)];
      const bool hidden = l + 1 < p.layers.size();
      z[std::size_t(r)] = hidden && s <= 0.0 ? p.negative_slope * s : s;
    }
    a = std::move(z);
  }
  return a[0];
}

MlpParams random_params(std::vector<std::size_t> sizes, std::uint64_t seed) {
  MlpParams p = init_params(sizes, seed);
  Engine rng(seed + 1);
  std::normal_distribution<double> n(0.0, 0.2);
  for (auto& layer : p.layers)
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = n(rng);
  return p;
}

std::vector<double> random_input(std::size_t n, std::uint64_t seed) {
  Engine rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

// Logistic loss on a scalar-output network: softplus(-y * out), y in {-1, +1}.
class ToyObjective : public TrainingObjective {
 public:
  ToyObjective(std::vector<std::vector<double>> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {}
  std::size_t num_examples() const override { return x_.size(); }
  double loss_and_gradient(const MlpParams& params, std::span<const std::size_t> batch,
                           GradientBundle& grad) const override {
    grad = GradientBundle::zeros_like(params);
    double loss = 0.0;
    for (std::size_t i : batch) {
      const double out = forward(params, x_[i]);
      const double m = -y_[i] * out;
      loss += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      const double dm = 1.0 / (1.0 + std::exp(-m));
      grad += backward(params, x_[i], -y_[i] * dm / double(batch.size()));
    }
    return loss / double(batch.size());
  }
  double accuracy(const MlpParams& params) const {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < x_.size(); ++i) ok += (forward(params, x_[i]) > 0) == (y_[i] > 0);
    return double(ok) / double(x_.size());
  }

 private:
  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
};

class ConstantObjective : public TrainingObjective {
 public:
  explicit ConstantObjective(double value) : value_(value) {}
  std::size_t num_examples() const override { return 10; }
  double loss_and_gradient(const MlpParams& params, std::span<const std::size_t>,
                           GradientBundle& grad) const override {
    grad = GradientBundle::zeros_like(params);
    return value_;
  }

 private:
  double value_;
};

}  // namespace

TEST_CASE("initialization shapes, bounds and determinism") {
  const std::vector<std::size_t> sizes{6, 512, 512, 512, 1};
  const MlpParams p = init_params(sizes, 42);
  REQUIRE(p.layers.size() == 4);
  CHECK(p.layers[0].weights.rows() == 512);
  CHECK(p.layers[0].weights.cols() == 6);
  CHECK(p.layers[1].weights.rows() == 512);
  CHECK(p.layers[1].weights.cols() == 512);
  CHECK(p.layers[2].weights.rows() == 512);
  CHECK(p.layers[3].weights.rows() == 1);
  CHECK(p.layers[3].weights.cols() == 512);
  CHECK(p.input_size() == 6);
  CHECK(p.layer_sizes() == sizes);
  CHECK(p.parameter_count() == 6 * 512 + 512 + 2 * (512 * 512 + 512) + 512 + 1);
  for (const auto& layer : p.layers) {
    CHECK(layer.bias.isZero(0.0));
    const double bound = std::sqrt(3.0 / double(layer.weights.cols()));
    CHECK(layer.weights.cwiseAbs().maxCoeff() <= bound);
  }
  const MlpParams q = init_params(sizes, 42);
  for (std::size_t l = 0; l < 4; ++l) CHECK(p.layers[l].weights == q.layers[l].weights);
  CHECK(p.layers[0].weights != init_params(sizes, 43).layers[0].weights);
  const std::vector<std::size_t> too_short{3};
  CHECK_THROWS_AS(init_params(too_short, 1), ConfigError);
}

TEST_CASE("forward pass") {
  SUBCASE("all-zero parameters give 0") {
    const std::vector<std::size_t> sizes{4, 8, 8, 1};
    MlpParams p = init_params(sizes, 1);
    for (auto& l : p.layers) l.weights.setZero();
    const std::vector<double> x{1.0, -2.0, 3.0, 4.0};
    CHECK(forward(p, x) == 0.0);
  }
  SUBCASE("positive preactivations make the network affine") {
    const std::vector<std::size_t> sizes{2, 2, 1};
    MlpParams p = init_params(sizes, 1);
    p.layers[0].weights << 2.0, 0.0, 0.0, 3.0;
    p.layers[0].bias << 1.0, 1.0;
    p.layers[1].weights << 0.5, -1.0;
    p.layers[1].bias << 0.25;
    const std::vector<double> x{1.0, 2.0};
    // h = [2*1+1, 3*2+1] = [3, 7]; out = 1.5 - 7 + 0.25
    CHECK(forward(p, x) == doctest::Approx(-5.25));
  }
  SUBCASE("negative preactivations are scaled by the slope") {
    const std::vector<std::size_t> sizes{1, 1, 1};
    MlpParams p = init_params(sizes, 1, 0.01);
    p.layers[0].weights << 1.0;
    p.layers[1].weights << 1.0;
    const std::vector<double> x{-4.0};
    CHECK(forward(p, x) == doctest::Approx(-0.04));
  }
  SUBCASE("random parameters match the nested-loop oracle") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const MlpParams p = random_params({6, 64, 32, 16, 1}, s);
      const auto x = random_input(6, 100 + s);
      CHECK(forward(p, x) == doctest::Approx(oracle_forward(p, x)).epsilon(1e-12));
    }
  }
  SUBCASE("batched forward equals per-column forward") {
    const MlpParams p = random_params({5, 32, 32, 1}, 3);
    Eigen::MatrixXd X(5, 7);
    X.setRandom();
    const Eigen::RowVectorXd out = forward_batch(p, X);
    for (Eigen::Index c = 0; c < 7; ++c) {
      const std::vector<double> col(X.col(c).data(), X.col(c).data() + 5);
      CHECK(out(c) == doctest::Approx(forward(p, col)).epsilon(1e-12));
    }
  }
  SUBCASE("wrong input length is rejected") {
    const MlpParams p = random_params({5, 4, 1}, 3);
    const std::vector<double> x{1.0};
    CHECK_THROWS_AS(forward(p, x), DimensionError);
  }
}

TEST_CASE("backward pass") {
  SUBCASE("central finite differences on 100 random parameters") {
    MlpParams p = random_params({6, 24, 24, 24, 1}, 9);
    const auto x = random_input(6, 10);
    const double upstream = 0.7;
    const GradientBundle g = backward(p, x, upstream);
    Engine rng(11);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const std::size_t l = std::size_t(k % 4);
      auto& layer = p.layers[l];
      const bool bias = k % 5 == 4;
      const Eigen::Index r = std::uniform_int_distribution<Eigen::Index>(0, layer.weights.rows() - 1)(rng);
      const Eigen::Index c = std::uniform_int_distribution<Eigen::Index>(0, layer.weights.cols() - 1)(rng);
      double& theta = bias ? layer.bias(r) : layer.weights(r, c);
      const double analytic = bias ? g.layers[l].bias(r) : g.layers[l].weights(r, c);
      const double saved = theta;
      theta = saved + 1e-5;
      const double up = upstream * forward(p, x);
      theta = saved - 1e-5;
      const double down = upstream * forward(p, x);
      theta = saved;
      const double numeric = (up - down) / 2e-5;
      worst = std::max(worst, std::abs(analytic - numeric) /
                                  std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    }
    CHECK(worst < 1e-4);
  }
  SUBCASE("zero upstream gives a zero bundle") {
    const MlpParams p = random_params({4, 8, 1}, 2);
    const GradientBundle g = backward(p, random_input(4, 1), 0.0);
    for (const auto& l : g.layers) {
      CHECK(l.weights.isZero(0.0));
      CHECK(l.bias.isZero(0.0));
    }
  }
  SUBCASE("single linear layer: gradient of w.x is x") {
    const std::vector<std::size_t> sizes{3, 1};
    const MlpParams p = init_params(sizes, 4);
    const std::vector<double> x{1.5, -2.0, 0.25};
    const GradientBundle g = backward(p, x, 1.0);
    CHECK(g.layers[0].weights(0, 0) == 1.5);
    CHECK(g.layers[0].weights(0, 1) == -2.0);
    CHECK(g.layers[0].weights(0, 2) == 0.25);
    CHECK(g.layers[0].bias(0) == 1.0);
  }
  SUBCASE("batched backward sums per-example gradients") {
    const MlpParams p = random_params({4, 16, 16, 1}, 5);
    Eigen::MatrixXd X(4, 3);
    X.setRandom();
    Eigen::RowVectorXd up(3);
    up << 0.3, -1.2, 2.0;
    ForwardCache cache;
    forward_batch(p, X, &cache);
    const GradientBundle batched = backward_batch(p, cache, up);
    GradientBundle summed = GradientBundle::zeros_like(p);
    for (Eigen::Index c = 0; c < 3; ++c) {
      const std::vector<double> col(X.col(c).data(), X.col(c).data() + 4);
      summed += backward(p, col, up(c));
    }
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      CHECK((batched.layers[l].weights - summed.layers[l].weights).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((batched.layers[l].bias - summed.layers[l].bias).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("SGD step") {
  const std::vector<std::size_t> sizes{3, 4, 1};
  SUBCASE("without penalty it is plain gradient descent") {
    MlpParams p = random_params(sizes, 1);
    const MlpParams before = p;
    GradientBundle g = GradientBundle::zeros_like(p);
    for (auto& l : g.layers) {
      l.weights.setConstant(2.0);
      l.bias.setConstant(-1.0);
    }
    sgd_step(p, g, 0.1, 0.0, 0);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      CHECK((p.layers[l].weights - (before.layers[l].weights.array() - 0.2).matrix()).cwiseAbs().maxCoeff() < 1e-15);
      CHECK((p.layers[l].bias - (before.layers[l].bias.array() + 0.1).matrix()).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
  SUBCASE("pure penalty step shrinks only the designated layer's weights") {
    MlpParams p = random_params(sizes, 2);
    p.layers[0].weights(0, 0) = 0.0;
    const MlpParams before = p;
    sgd_step(p, GradientBundle::zeros_like(p), 0.5, 0.01, 0);
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (Eigen::Index c = 0; c < 3; ++c) {
        const double w = before.layers[0].weights(r, c);
        const double sign = w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0);
        CHECK(p.layers[0].weights(r, c) == doctest::Approx(w - 0.005 * sign).epsilon(1e-15));
      }
    }
    CHECK(p.layers[0].weights(0, 0) == 0.0);
    CHECK(p.layers[0].bias == before.layers[0].bias);
    CHECK(p.layers[1].weights == before.layers[1].weights);
  }
  SUBCASE("one step on a one-parameter quadratic") {
    // loss (w - 3)^2 at w = 1: gradient -4, lr 0.1 -> w = 1.4
    const std::vector<std::size_t> one{1, 1};
    MlpParams p = init_params(one, 0);
    p.layers[0].weights(0, 0) = 1.0;
    GradientBundle g = GradientBundle::zeros_like(p);
    g.layers[0].weights(0, 0) = 2.0 * (1.0 - 3.0);
    sgd_step(p, g, 0.1, 0.0, 0);
    CHECK(p.layers[0].weights(0, 0) == doctest::Approx(1.4));
  }
}

TEST_CASE("training loop stopping rules") {
  const std::vector<std::size_t> sizes{2, 4, 1};
  const MlpParams p0 = init_params(sizes, 1);
  const ConstantObjective objective(0.5);
  TrainConfig cfg;
  cfg.hidden_layers = {4};

  SUBCASE("unlimited patience with one epoch runs exactly one epoch") {
    cfg.patience = kUnlimitedPatience;
    cfg.max_epochs = 1;
    const TrainResult r = train_loop(p0, objective, [](const MlpParams&) { return 0.3; }, cfg);
    CHECK(r.history.size() == 1);
    CHECK(r.best_epoch == 0);
    CHECK(r.history[0].train_loss == 0.5);
  }
  SUBCASE("strictly decreasing validation accuracy stops after patience + 1 epochs") {
    cfg.patience = 4;
    cfg.max_epochs = 100;
    double acc = 1.0;
    const TrainResult r =
        train_loop(p0, objective, [&](const MlpParams&) { return acc -= 0.01; }, cfg);
    CHECK(r.history.size() == 5);
    CHECK(r.best_epoch == 0);
  }
  SUBCASE("ties keep the earliest snapshot") {
    cfg.patience = 3;
    cfg.max_epochs = 100;
    const TrainResult r = train_loop(p0, objective, [](const MlpParams&) { return 0.7; }, cfg);
    CHECK(r.history.size() == 4);
    CHECK(r.best_epoch == 0);
  }
  SUBCASE("non-finite loss is reported") {
    const ConstantObjective bad(std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(train_loop(p0, bad, [](const MlpParams&) { return 0.5; }, cfg), TrainingError);
  }
  SUBCASE("invalid configuration") {
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train_loop(p0, objective, [](const MlpParams&) { return 0.5; }, cfg), ConfigError);
    cfg.learning_rate = 0.1;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("separable toy problem reaches full validation accuracy") {
  Engine rng(5);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const double label = i % 2 ? 1.0 : -1.0;
    x.push_back({2.0 * label + n(rng), -1.0 * label + n(rng)});
    y.push_back(label);
  }
  const ToyObjective objective(x, y);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  cfg.max_epochs = 200;
  cfg.patience = kUnlimitedPatience;
  cfg.hidden_layers = {16, 16};
  const std::vector<std::size_t> sizes{2, 16, 16, 1};
  bool reached = false;
  const TrainResult r = train_loop(init_params(sizes, 3), objective,
                                   [&](const MlpParams& p) {
                                     const double a = objective.accuracy(p);
                                     reached = reached || a == 1.0;
                                     return a;
                                   },
                                   cfg);
  CHECK(reached);
  CHECK(objective.accuracy(r.best) == 1.0);
  CHECK(r.history.front().train_loss > r.history.back().train_loss);
}
