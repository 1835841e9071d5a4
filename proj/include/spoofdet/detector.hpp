// Commutative neural detector: g(f, f') = (h([f, f', f - f']) + h([f', f, f' - f])) / 2
// with h a leaky-ReLU MLP, decided against threshold 0.
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spoofdet/common.hpp"
#include "spoofdet/dataset.hpp"
#include "spoofdet/neural.hpp"

namespace spoofdet {

/// Per-feature standard deviations below this value (dB) are clamped to it.
inline constexpr double kMinFeatureStd = 1e-6;

/// [f, f', f - f']: the input pair times [[1, 0, 1], [0, 1, -1]], flattened
/// column by column.
std::vector<double> fixed_first_layer(std::span<const double> first,
                                      std::span<const double> second);

struct DetectorModel {
  MlpParams params;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;

  std::size_t num_features() const noexcept { return feature_mean.size(); }
  /// Throws DimensionError when the parts disagree (network input != 3M, ...).
  void validate() const;
};

/// Mean and (population) standard deviation of every feature over all vectors
/// appearing in the pairs; std is clamped below by kMinFeatureStd.
void fit_standardization(const PairSet& pairs, std::vector<double>& mean, std::vector<double>& std);

std::vector<double> standardize(const DetectorModel& model, std::span<const double> f);

double statistic(const DetectorModel& model, std::span<const double> first,
                 std::span<const double> second);

/// H1 iff statistic > 0; posterior = sigmoid(statistic).
Decision decide(const DetectorModel& model, std::span<const double> first,
                std::span<const double> second);

/// Statistics for every pair of a set (batched; may differ from statistic()
/// in the last bits because of the summation order inside the matrix products).
std::vector<double> statistics(const DetectorModel& model, const PairSet& pairs);

double sigmoid(double x) noexcept;
/// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;

/// Mean negative log-likelihood: softplus(g) for SAME pairs, softplus(-g) for
/// DIFF pairs, divided by the total pair count.
double pair_loss(const DetectorModel& model, const PairSet& pairs);

/// Mean pair loss as a training objective over standardized pairs. Both
/// argument orders of a pair go through the network in a single batch.
class PairLossObjective : public TrainingObjective {
 public:
  PairLossObjective(const PairSet& pairs, std::span<const double> mean, std::span<const double> std);

  std::size_t num_examples() const override { return labels_.size(); }
  double loss_and_gradient(const MlpParams& params, std::span<const std::size_t> batch,
                           GradientBundle& grad) const override;

  /// Validation accuracy of the threshold-0 rule over all pairs.
  double accuracy(const MlpParams& params) const;

 private:
  Eigen::MatrixXd direct_;   // 3M x N, [f, f', f - f']
  Eigen::MatrixXd swapped_;  // 3M x N, [f', f, f' - f]
  Eigen::VectorXd labels_;   // 1 for DIFF
};

struct DetectorTraining {
  DetectorModel model;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Fits standardization on the training pairs, initializes the network from
/// config.seed and runs the early-stopped SGD loop.
DetectorTraining train_detector_on_pairs(const PairSet& train, const PairSet& validation,
                                         const TrainConfig& config);

/// Builds K_tr training pairs from split.train and K_val validation pairs from
/// split.validation, then trains. All randomness derives from `seed`.
DetectorTraining train_detector(const MeasurementSet& ms, const LocationSplit& split,
                                std::size_t k_train, std::size_t k_val, TrainConfig config,
                                std::uint64_t seed);

}  // namespace spoofdet
