#include "spoofdet/detector.hpp"

#include <cmath>

namespace spoofdet {

std::vector<double> fixed_first_layer(std::span<const double> first,
                                      std::span<const double> second) {
  if (first.size() != second.size()) {
    throw DimensionError("feature vectors have different lengths (" +
                         std::to_string(first.size()) + " vs " + std::to_string(second.size()) + ")");
  }
  const std::size_t m = first.size();
  std::vector<double> out(3 * m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = first[i];
    out[m + i] = second[i];
    out[2 * m + i] = first[i] - second[i];
  }
  return out;
}

void DetectorModel::validate() const {
  const std::size_t m = feature_mean.size();
  if (m == 0 || feature_std.size() != m) throw DimensionError("bad standardization statistics");
  if (params.input_size() != 3 * m) {
    throw DimensionError("network input " + std::to_string(params.input_size()) +
                         " does not match 3M = " + std::to_string(3 * m));
  }
  for (double s : feature_std) {
    if (!(s > 0.0)) throw DimensionError("standardization std must be positive");
  }
}

void fit_standardization(const PairSet& pairs, std::vector<double>& mean,
                         std::vector<double>& std) {
  if (pairs.pairs.empty()) throw DataError("cannot fit standardization on an empty pair set");
  const std::size_t m = pairs.pairs.front().first.size();
  mean.assign(m, 0.0);
  std.assign(m, 0.0);
  const double count = 2.0 * double(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    for (std::size_t i = 0; i < m; ++i) mean[i] += p.first[i] + p.second[i];
  }
  for (auto& v : mean) v /= count;
  for (const auto& p : pairs.pairs) {
    for (std::size_t i = 0; i < m; ++i) {
      std[i] += (p.first[i] - mean[i]) * (p.first[i] - mean[i]) +
                (p.second[i] - mean[i]) * (p.second[i] - mean[i]);
    }
  }
  for (auto& v : std) v = std::max(std::sqrt(v / count), kMinFeatureStd);
}

std::vector<double> standardize(const DetectorModel& model, std::span<const double> f) {
  if (f.size() != model.num_features()) {
    throw DimensionError("feature vector has length " + std::to_string(f.size()) +
                         ", model expects " + std::to_string(model.num_features()));
  }
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) throw DataError("non-finite feature value");
    out[i] = (f[i] - model.feature_mean[i]) / model.feature_std[i];
  }
  return out;
}

double statistic(const DetectorModel& model, std::span<const double> first,
                 std::span<const double> second) {
  const auto a = standardize(model, first);
  const auto b = standardize(model, second);
  const double forward_order = forward(model.params, fixed_first_layer(a, b));
  const double swapped_order = forward(model.params, fixed_first_layer(b, a));
  return (forward_order + swapped_order) / 2.0;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Decision decide(const DetectorModel& model, std::span<const double> first,
                std::span<const double> second) {
  const double g = statistic(model, first, second);
  return {g > 0.0 ? Hypothesis::H1 : Hypothesis::H0, g, sigmoid(g)};
}

double pair_loss(const DetectorModel& model, const PairSet& pairs) {
  if (pairs.pairs.empty()) throw DataError("pair_loss needs a nonempty pair set");
  double total = 0.0;
  for (const auto& p : pairs.pairs) {
    const double g = statistic(model, p.first, p.second);
    total += p.label == Label::Same ? softplus(g) : softplus(-g);
  }
  return total / double(pairs.pairs.size());
}

namespace {

void fill_columns(const PairSet& pairs, std::span<const double> mean, std::span<const double> std,
                  Eigen::MatrixXd& direct, Eigen::MatrixXd& swapped) {
  const std::size_t m = mean.size();
  const auto n = long(pairs.pairs.size());
  direct.resize(long(3 * m), n);
  swapped.resize(long(3 * m), n);
  for (long c = 0; c < n; ++c) {
    const auto& p = pairs.pairs[std::size_t(c)];
    if (p.first.size() != m || p.second.size() != m) {
      throw DimensionError("pair feature length does not match standardization");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double a = (p.first[i] - mean[i]) / std[i];
      const double b = (p.second[i] - mean[i]) / std[i];
      const auto r = long(i);
      const auto mm = long(m);
      direct(r, c) = a;
      direct(mm + r, c) = b;
      direct(2 * mm + r, c) = a - b;
      swapped(r, c) = b;
      swapped(mm + r, c) = a;
      swapped(2 * mm + r, c) = b - a;
    }
  }
}

Eigen::RowVectorXd symmetric_outputs(const MlpParams& params, const Eigen::MatrixXd& direct,
                                     const Eigen::MatrixXd& swapped) {
  const long n = direct.cols();
  Eigen::MatrixXd both(direct.rows(), 2 * n);
  both << direct, swapped;
  const Eigen::RowVectorXd out = forward_batch(params, both);
  return (out.head(n) + out.tail(n)) / 2.0;
}

}  // namespace

std::vector<double> statistics(const DetectorModel& model, const PairSet& pairs) {
  model.validate();
  if (pairs.pairs.empty()) return {};
  Eigen::MatrixXd direct;
  Eigen::MatrixXd swapped;
  fill_columns(pairs, model.feature_mean, model.feature_std, direct, swapped);
  const Eigen::RowVectorXd g = symmetric_outputs(model.params, direct, swapped);
  return {g.data(), g.data() + g.size()};
}

PairLossObjective::PairLossObjective(const PairSet& pairs, std::span<const double> mean,
                                     std::span<const double> std) {
  if (pairs.pairs.empty()) throw DataError("pair loss objective needs pairs");
  fill_columns(pairs, mean, std, direct_, swapped_);
  labels_.resize(long(pairs.pairs.size()));
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    labels_(long(i)) = pairs.pairs[i].label == Label::Diff ? 1.0 : 0.0;
  }
}

double PairLossObjective::loss_and_gradient(const MlpParams& params,
                                            std::span<const std::size_t> batch,
                                            GradientBundle& grad) const {
  const auto b = long(batch.size());
  if (b == 0) throw DataError("empty minibatch");
  Eigen::MatrixXd inputs(direct_.rows(), 2 * b);
  for (long i = 0; i < b; ++i) {
    const auto c = long(batch[std::size_t(i)]);
    inputs.col(i) = direct_.col(c);
    inputs.col(b + i) = swapped_.col(c);
  }
  ForwardCache cache;
  const Eigen::RowVectorXd out = forward_batch(params, inputs, &cache);

  double loss = 0.0;
  Eigen::RowVectorXd upstream(2 * b);
  for (long i = 0; i < b; ++i) {
    const double g = (out(i) + out(b + i)) / 2.0;
    const double y = labels_(long(batch[std::size_t(i)]));
    // softplus(g) - y*g is -log(1 - sigmoid(g)) for y=0 and -log(sigmoid(g)) for y=1.
    loss += softplus(g) - y * g;
    const double dg = (sigmoid(g) - y) / double(b);
    upstream(i) = dg / 2.0;
    upstream(b + i) = dg / 2.0;
  }
  grad = backward_batch(params, cache, upstream);
  return loss / double(b);
}

double PairLossObjective::accuracy(const MlpParams& params) const {
  const Eigen::RowVectorXd g = symmetric_outputs(params, direct_, swapped_);
  long correct = 0;
  for (long i = 0; i < g.size(); ++i) {
    const bool h1 = g(i) > 0.0;
    if (h1 == (labels_(i) == 1.0)) ++correct;
  }
  return double(correct) / double(g.size());
}

DetectorTraining train_detector_on_pairs(const PairSet& train, const PairSet& validation,
                                         const TrainConfig& config) {
  config.validate();
  if (train.pairs.empty() || validation.pairs.empty()) {
    throw DataError("training and validation pair sets must be nonempty");
  }
  DetectorModel model;
  fit_standardization(train, model.feature_mean, model.feature_std);
  const std::size_t m = model.feature_mean.size();

  std::vector<std::size_t> sizes{3 * m};
  sizes.insert(sizes.end(), config.hidden_layers.begin(), config.hidden_layers.end());
  sizes.push_back(1);
  MlpParams init = init_params(sizes, derive_seed(config.seed, "init"), config.negative_slope);

  const PairLossObjective objective(train, model.feature_mean, model.feature_std);
  const PairLossObjective val(validation, model.feature_mean, model.feature_std);
  TrainResult trained = train_loop(
      std::move(init), objective, [&val](const MlpParams& p) { return val.accuracy(p); }, config);

  model.params = std::move(trained.best);
  return {std::move(model), trained.best_epoch, std::move(trained.history)};
}

DetectorTraining train_detector(const MeasurementSet& ms, const LocationSplit& split,
                                std::size_t k_train, std::size_t k_val, TrainConfig config,
                                std::uint64_t seed) {
  const PairSet train = build_pair_set(ms, split.train, k_train, derive_seed(seed, "train_pairs"));
  const PairSet val = build_pair_set(ms, split.validation, k_val, derive_seed(seed, "val_pairs"));
  config.seed = derive_seed(seed, "network");
  return train_detector_on_pairs(train, val, config);
}

}  // namespace spoofdet
