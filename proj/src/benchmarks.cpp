#include "spoofdet/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace spoofdet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

Decision threshold_decision(double distance, double threshold) {
  return {distance > threshold ? Hypothesis::H1 : Hypothesis::H0, distance - threshold,
          std::nullopt};
}

}  // namespace

ThresholdFit tune_threshold(std::span<const LabeledDistance> samples) {
  if (samples.empty()) throw DataError("tune_threshold needs at least one sample");
  std::vector<LabeledDistance> sorted(samples.begin(), samples.end());
  for (const auto& s : sorted) {
    if (std::isnan(s.distance)) throw DataError("tune_threshold got a NaN distance");
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.distance < b.distance; });

  // Threshold -inf: everything is H1, so every DIFF sample is correct.
  std::size_t correct = std::count_if(sorted.begin(), sorted.end(),
                                      [](const auto& s) { return s.label == Label::Diff; });
  ThresholdFit best{-kInf, double(correct) / double(sorted.size())};
  std::size_t best_correct = correct;

  std::size_t i = 0;
  while (i < sorted.size()) {
    // Move the threshold past the group of samples sharing this distance.
    const double value = sorted[i].distance;
    for (; i < sorted.size() && sorted[i].distance == value; ++i) {
      if (sorted[i].label == Label::Same) {
        ++correct;
      } else {
        --correct;
      }
    }
    if (correct > best_correct) {
      best_correct = correct;
      best.threshold = i < sorted.size() ? value + (sorted[i].distance - value) / 2.0 : kInf;
    }
  }
  best.accuracy = double(best_correct) / double(sorted.size());
  return best;
}

double threshold_accuracy(std::span<const LabeledDistance> samples, double threshold) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if ((s.distance > threshold) == (s.label == Label::Diff)) ++correct;
  }
  return double(correct) / double(samples.size());
}

double pair_distance(std::span<const double> first, std::span<const double> second,
                     int norm_order) {
  if (first.size() != second.size()) throw DimensionError("feature vectors differ in length");
  if (norm_order == 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < first.size(); ++i) s += std::abs(first[i] - second[i]);
    return s;
  }
  if (norm_order == 2) return std::sqrt(squared_distance(first, second));
  throw ConfigError("norm_order", "must be 1 or 2");
}

DbcModel train_dbc(const PairSet& pairs, int norm_order) {
  if (norm_order != 1 && norm_order != 2) throw ConfigError("norm_order", "must be 1 or 2");
  std::vector<LabeledDistance> samples;
  samples.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    samples.push_back({pair_distance(p.first, p.second, norm_order), p.label});
  }
  return {norm_order, tune_threshold(samples).threshold};
}

Decision decide_dbc(const DbcModel& model, std::span<const double> first,
                    std::span<const double> second) {
  return threshold_decision(pair_distance(first, second, model.norm_order), model.threshold);
}

double wcss(const std::vector<std::vector<double>>& points,
            const std::vector<std::vector<double>>& centroids,
            const std::vector<std::size_t>& assignment) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    s += squared_distance(points[i], centroids[assignment[i]]);
  }
  return s;
}

namespace {

std::size_t nearest(const std::vector<double>& p, const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_d = kInf;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KmeansResult lloyd_kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                          std::uint64_t seed, std::size_t max_iterations) {
  if (k == 0) throw ConfigError("kappa", "must be >= 1");
  if (points.empty()) throw DataError("k-means needs points");
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw DimensionError("k-means points differ in dimension");
  }

  // Distinct points in first-occurrence order.
  std::vector<std::size_t> distinct;
  {
    std::set<std::vector<double>> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (seen.insert(points[i]).second) distinct.push_back(i);
    }
  }
  if (distinct.size() < k) {
    throw DataError("k-means needs at least " + std::to_string(k) + " distinct points, got " +
                    std::to_string(distinct.size()));
  }

  Engine rng = make_engine(seed);
  std::shuffle(distinct.begin(), distinct.end(), rng);
  KmeansResult r;
  for (std::size_t c = 0; c < k; ++c) r.centroids.push_back(points[distinct[c]]);

  r.assignment.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) r.assignment[i] = nearest(points[i], r.centroids);
  r.wcss_history.push_back(wcss(points, r.centroids, r.assignment));

  for (r.iterations = 1; r.iterations <= max_iterations; ++r.iterations) {
    // Update step.
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[r.assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
      ++counts[r.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) r.centroids[c][d] = sums[c][d] / double(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = squared_distance(points[i], r.centroids[r.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      r.centroids[c] = points[far];
    }

    // Assignment step.
    std::vector<std::size_t> next(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) next[i] = nearest(points[i], r.centroids);
    r.wcss_history.push_back(wcss(points, r.centroids, next));
    const bool fixpoint = next == r.assignment;
    r.assignment = std::move(next);
    if (fixpoint) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, max_iterations);
  return r;
}

std::vector<double> centroid_distances(const KmcModel& model, std::span<const double> v) {
  std::vector<double> out;
  out.reserve(model.centroids.size());
  for (const auto& c : model.centroids) {
    if (c.size() != v.size()) throw DimensionError("feature length does not match centroids");
    out.push_back(std::sqrt(squared_distance(c, v)));
  }
  return out;
}

double kmc_statistic(const KmcModel& model, std::span<const double> first,
                     std::span<const double> second) {
  return pair_distance(centroid_distances(model, first), centroid_distances(model, second), 2);
}

KmcModel train_kmc(const MeasurementSet& ms, std::span<const std::size_t> train_locations,
                   const PairSet& pairs, std::size_t kappa, std::uint64_t seed) {
  std::vector<std::vector<double>> points;
  points.reserve(train_locations.size() * ms.num_estimates());
  for (std::size_t n : train_locations) {
    for (std::size_t j = 0; j < ms.num_estimates(); ++j) {
      const auto f = ms.feature(n, j);
      points.emplace_back(f.begin(), f.end());
    }
  }
  KmcModel model;
  model.centroids = lloyd_kmeans(points, kappa, seed).centroids;

  std::vector<LabeledDistance> samples;
  samples.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    samples.push_back({kmc_statistic(model, p.first, p.second), p.label});
  }
  model.threshold = tune_threshold(samples).threshold;
  return model;
}

Decision decide_kmc(const KmcModel& model, std::span<const double> first,
                    std::span<const double> second) {
  return threshold_decision(kmc_statistic(model, first, second), model.threshold);
}

}  // namespace spoofdet
