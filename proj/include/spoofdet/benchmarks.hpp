// Baseline detectors: distance-based classifiers (l1/l2 norm of the
// difference) and the K-means centroid-distance classifier.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spoofdet/common.hpp"
#include "spoofdet/dataset.hpp"

namespace spoofdet {

struct LabeledDistance {
  double distance = 0.0;
  Label label = Label::Same;
};

struct ThresholdFit {
  double threshold = 0.0;  // may be +-inf
  double accuracy = 0.0;   // training accuracy of "H1 iff distance > threshold"
};

/// Exact accuracy maximizer over thresholds for the rule "H1 iff distance >
/// threshold". Candidates are -inf, midpoints between consecutive distinct
/// distances and +inf; ties go to the smallest threshold.
ThresholdFit tune_threshold(std::span<const LabeledDistance> samples);

/// Accuracy of "H1 iff distance > threshold" on the samples.
double threshold_accuracy(std::span<const LabeledDistance> samples, double threshold);

struct DbcModel {
  int norm_order = 2;  // 1 or 2
  double threshold = 0.0;
};

double pair_distance(std::span<const double> first, std::span<const double> second, int norm_order);

DbcModel train_dbc(const PairSet& pairs, int norm_order);
Decision decide_dbc(const DbcModel& model, std::span<const double> first,
                    std::span<const double> second);

struct KmeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  /// WCSS of each assignment step evaluated against the centroids it was
  /// computed from; first entry follows the initial assignment.
  std::vector<double> wcss_history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd's algorithm. Initial centroids are `k` distinct points picked at
/// random; an emptied cluster is reseeded at the point farthest from its
/// current centroid. Stops at an assignment fixpoint or after max_iterations.
KmeansResult lloyd_kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                          std::uint64_t seed, std::size_t max_iterations = 300);

/// Within-cluster sum of squared Euclidean distances.
double wcss(const std::vector<std::vector<double>>& points,
            const std::vector<std::vector<double>>& centroids,
            const std::vector<std::size_t>& assignment);

struct KmcModel {
  std::vector<std::vector<double>> centroids;
  double threshold = 0.0;
};

/// Euclidean distances from v to every centroid.
std::vector<double> centroid_distances(const KmcModel& model, std::span<const double> v);

/// Clusters every estimate of the training locations into `kappa` clusters,
/// then tunes the threshold of ||d(f) - d(f')||_2 on the training pairs.
KmcModel train_kmc(const MeasurementSet& ms, std::span<const std::size_t> train_locations,
                   const PairSet& pairs, std::size_t kappa, std::uint64_t seed);

double kmc_statistic(const KmcModel& model, std::span<const double> first,
                     std::span<const double> second);
Decision decide_kmc(const KmcModel& model, std::span<const double> first,
                    std::span<const double> second);

}  // namespace spoofdet
