#include "spoofdet/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "spoofdet/benchmarks.hpp"
#include "spoofdet/detector.hpp"
#include "spoofdet/evaluation.hpp"
#include "spoofdet/experiment.hpp"
#include "spoofdet/signal_model.hpp"

namespace spoofdet::checks {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<double> random_vector(Engine& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

DetectorModel random_detector(Engine& rng, std::size_t m, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{3 * m};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  DetectorModel model;
  model.params = init_params(sizes, rng(), 0.01);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& layer : model.params.layers) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = n(rng);
  }
  model.feature_mean = random_vector(rng, m, -90.0, -40.0);
  model.feature_std = random_vector(rng, m, 0.5, 10.0);
  return model;
}

PairSet random_pairs(Engine& rng, std::size_t per_class, std::size_t m) {
  PairSet set;
  set.per_class = per_class;
  for (Label label : {Label::Same, Label::Diff}) {
    for (std::size_t p = 0; p < per_class; ++p) {
      LabeledPair pair;
      pair.first = random_vector(rng, m, -100.0, -30.0);
      pair.second = random_vector(rng, m, -100.0, -30.0);
      pair.label = label;
      pair.second_location = label == Label::Diff ? 1 : 0;
      pair.second_estimate = 1;
      set.pairs.push_back(std::move(pair));
    }
  }
  return set;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

CheckResult commutativity(std::size_t cases, std::uint64_t seed) {
  Timer timer;
  Engine rng = make_engine(seed);
  std::uniform_int_distribution<std::size_t> features(1, 16);
  std::uniform_int_distribution<std::size_t> width(1, 64);
  std::uniform_int_distribution<std::size_t> depth(1, 3);
  double worst = 0.0;
  std::size_t decision_mismatches = 0;
  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t m = features(rng);
    // Every 100th case uses the full 3 x 512 architecture.
    std::vector<std::size_t> hidden;
    if (i % 100 == 0) {
      hidden = {512, 512, 512};
    } else {
      for (std::size_t d = depth(rng); d > 0; --d) hidden.push_back(width(rng));
    }
    const DetectorModel model = random_detector(rng, m, hidden);
    const auto f = random_vector(rng, m, -100.0, -30.0);
    const auto g = random_vector(rng, m, -100.0, -30.0);

    const Decision ab = decide(model, f, g);
    const Decision ba = decide(model, g, f);
    worst = std::max(worst, std::abs(ab.statistic - ba.statistic) / (1.0 + std::abs(ab.statistic)));
    if (ab.hypothesis != ba.hypothesis) ++decision_mismatches;

    for (int q : {1, 2}) {
      const DbcModel dbc{q, std::uniform_real_distribution<double>(0.0, 50.0)(rng)};
      if (decide_dbc(dbc, f, g).hypothesis != decide_dbc(dbc, g, f).hypothesis) ++decision_mismatches;
    }
    KmcModel kmc;
    for (std::size_t c = 0; c < 5; ++c) kmc.centroids.push_back(random_vector(rng, m, -100.0, -30.0));
    kmc.threshold = std::uniform_real_distribution<double>(0.0, 30.0)(rng);
    if (decide_kmc(kmc, f, g).hypothesis != decide_kmc(kmc, g, f).hypothesis) ++decision_mismatches;
  }
  const bool ok = worst <= 1e-9 && decision_mismatches == 0;
  return {"commutativity", ok,
          std::to_string(cases) + " cases, worst relative asymmetry " + fmt(worst) +
              ", decision mismatches " + std::to_string(decision_mismatches),
          timer.seconds()};
}

CheckResult gradient(std::size_t coordinates, std::uint64_t seed) {
  Timer timer;
  Engine rng = make_engine(seed);
  const std::size_t m = 16;
  DetectorModel model = random_detector(rng, m, {512, 512, 512});
  const PairSet pairs = random_pairs(rng, 8, m);
  const PairLossObjective objective(pairs, model.feature_mean, model.feature_std);
  std::vector<std::size_t> all(pairs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  GradientBundle grad;
  objective.loss_and_gradient(model.params, all, grad);

  const double step = 1e-5;
  const std::size_t layers = model.params.layers.size();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < coordinates; ++k) {
    const std::size_t l = k % layers;  // round-robin over layers
    auto& layer = model.params.layers[l];
    const bool bias = (k / layers) % 4 == 3;
    double* target = nullptr;
    double analytic = 0.0;
    if (bias) {
      const auto r = std::uniform_int_distribution<Eigen::Index>(0, layer.bias.size() - 1)(rng);
      target = &layer.bias(r);
      analytic = grad.layers[l].bias(r);
    } else {
      const auto r = std::uniform_int_distribution<Eigen::Index>(0, layer.weights.rows() - 1)(rng);
      const auto c = std::uniform_int_distribution<Eigen::Index>(0, layer.weights.cols() - 1)(rng);
      target = &layer.weights(r, c);
      analytic = grad.layers[l].weights(r, c);
    }
    const double saved = *target;
    *target = saved + step;
    const double up = pair_loss(model, pairs);
    *target = saved - step;
    const double down = pair_loss(model, pairs);
    *target = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
    ++checked;
  }
  return {"gradient", worst < 1e-4 && checked >= coordinates,
          std::to_string(checked) + " coordinates over " + std::to_string(layers) +
              " layers, worst relative error " + fmt(worst),
          timer.seconds()};
}

CheckResult loss_anchor(std::size_t sets, std::uint64_t seed) {
  Timer timer;
  Engine rng = make_engine(seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < sets; ++s) {
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    DetectorModel model = random_detector(rng, m, {512, 512, 512});
    for (auto& layer : model.params.layers) {
      layer.weights.setZero();
      layer.bias.setZero();
    }
    const PairSet pairs =
        random_pairs(rng, std::uniform_int_distribution<std::size_t>(1, 50)(rng), m);
    worst = std::max(worst, std::abs(pair_loss(model, pairs) - std::numbers::ln2));
  }
  return {"loss_anchor", worst <= 1e-12,
          std::to_string(sets) + " balanced sets, worst |loss - log 2| " + fmt(worst),
          timer.seconds()};
}

CheckResult threshold_optimality(std::size_t sets, std::uint64_t seed) {
  Timer timer;
  Engine rng = make_engine(seed);
  // Distances live on a 0.01 lattice in [0, 10); the grid puts one threshold
  // in every gap between lattice points, so its maximum is the exact optimum.
  constexpr std::size_t kGrid = 10000;
  std::size_t failures = 0;
  double worst_gap = 0.0;
  for (std::size_t s = 0; s < sets; ++s) {
    std::vector<LabeledDistance> samples;
    const double overlap = std::uniform_real_distribution<double>(0.0, 6.0)(rng);
    for (std::size_t i = 0; i < 200; ++i) {
      const Label label = std::bernoulli_distribution(0.5)(rng) ? Label::Same : Label::Diff;
      const double lo = label == Label::Same ? 0.0 : 6.0 - overlap;
      const double hi = label == Label::Same ? 4.0 + overlap : 9.99;
      const auto tick = std::uniform_int_distribution<int>(int(lo * 100), int(hi * 100))(rng);
      samples.push_back({std::min(tick, 999) / 100.0, label});
    }
    const ThresholdFit fit = tune_threshold(samples);
    const double exact = threshold_accuracy(samples, fit.threshold);
    double grid_best = 0.0;
    for (std::size_t k = 0; k < kGrid; ++k) {
      const double t = -0.0005 + 0.001 * double(k);
      std::size_t correct = 0;
      for (const auto& x : samples) correct += (x.distance > t) == (x.label == Label::Diff);
      grid_best = std::max(grid_best, double(correct) / double(samples.size()));
    }
    worst_gap = std::max(worst_gap, std::abs(fit.accuracy - grid_best));
    if (fit.accuracy != grid_best || exact != fit.accuracy) ++failures;
  }
  return {"threshold_optimality", failures == 0,
          std::to_string(sets) + " sets of 200 distances, mismatches " + std::to_string(failures) +
              ", worst |tuned - grid| " + fmt(worst_gap),
          timer.seconds()};
}

CheckResult kmeans_monotonicity(std::size_t corpora, std::uint64_t seed) {
  Timer timer;
  Engine rng = make_engine(seed);
  std::size_t violations = 0;
  std::size_t non_fixpoints = 0;
  std::size_t total_iterations = 0;
  for (std::size_t c = 0; c < corpora; ++c) {
    const std::size_t dim = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    const std::size_t blobs = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 15)(rng);
    std::vector<std::vector<double>> centers;
    for (std::size_t b = 0; b < blobs; ++b) centers.push_back(random_vector(rng, dim, -100.0, -30.0));
    std::normal_distribution<double> noise(0.0, std::uniform_real_distribution<double>(0.5, 8.0)(rng));
    std::vector<std::vector<double>> points;
    for (std::size_t i = 0; i < 300; ++i) {
      auto p = centers[i % blobs];
      for (auto& v : p) v += noise(rng);
      points.push_back(std::move(p));
    }
    const KmeansResult r = lloyd_kmeans(points, k, rng());
    total_iterations += r.iterations;
    for (std::size_t i = 1; i < r.wcss_history.size(); ++i) {
      if (r.wcss_history[i] > r.wcss_history[i - 1] * (1.0 + 1e-12)) ++violations;
    }
    // Fixpoint: nearest-centroid assignment is unchanged and every nonempty
    // cluster's centroid is the mean of its members.
    bool fixpoint = r.converged;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size() && fixpoint; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        double d = 0.0;
        for (std::size_t t = 0; t < dim; ++t) {
          d += (points[i][t] - r.centroids[j][t]) * (points[i][t] - r.centroids[j][t]);
        }
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (best != r.assignment[i]) fixpoint = false;
      for (std::size_t t = 0; t < dim; ++t) sums[best][t] += points[i][t];
      ++counts[best];
    }
    for (std::size_t j = 0; j < k && fixpoint; ++j) {
      for (std::size_t t = 0; t < dim && counts[j] > 0; ++t) {
        if (std::abs(sums[j][t] / double(counts[j]) - r.centroids[j][t]) > 1e-9) fixpoint = false;
      }
    }
    if (!fixpoint) ++non_fixpoints;
  }
  return {"kmeans_monotonicity", violations == 0 && non_fixpoints == 0,
          std::to_string(corpora) + " corpora, " + std::to_string(total_iterations) +
              " Lloyd iterations, WCSS increases " + std::to_string(violations) +
              ", non-fixpoint endings " + std::to_string(non_fixpoints),
          timer.seconds()};
}

CheckResult estimator_consistency(std::size_t seeds, std::uint64_t seed) {
  Timer timer;
  const Scenario scenario = generate_scenario(ScenarioConfig{}, derive_seed(seed, "scenario"));
  auto mean_abs_error = [&](std::size_t samples) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < seeds; ++s) {
      const std::size_t location = s % scenario.num_locations();
      const auto truth = true_rss(scenario, location).rss_dbm;
      const auto est = estimate_rss_vector(scenario, location, samples, derive_seed(seed, s));
      for (std::size_t m = 0; m < est.size(); ++m) {
        total += std::abs(est[m] - truth[m]);
        ++count;
      }
    }
    return total / double(count);
  };
  const double short_error = mean_abs_error(16);
  const double long_error = mean_abs_error(1024);
  return {"estimator_consistency", long_error < short_error,
          "mean |f_hat - f| over " + std::to_string(seeds) + " seeds: N_s=16 -> " +
              fmt(short_error) + " dB, N_s=1024 -> " + fmt(long_error) + " dB",
          timer.seconds()};
}

CheckResult harness_calibration(const MeasurementSet& corpus, std::size_t test_pairs_per_class,
                                std::uint64_t seed) {
  Timer timer;
  ProtocolConfig protocol;
  protocol.k_test = test_pairs_per_class;
  const SweepPoint point{"locations", "40", std::min<std::size_t>(40, corpus.num_locations() - 2), {}};
  const TrialData trial = prepare_trial(corpus, point, protocol, seed);
  const double always_h1 =
      evaluate_accuracy(trial.test, [](const LabeledPair&) { return Hypothesis::H1; });
  const double cheat = evaluate_accuracy(trial.test, [](const LabeledPair& p) {
    return p.first_location == p.second_location ? Hypothesis::H0 : Hypothesis::H1;
  });
  const bool ok = std::abs(always_h1 - 0.5) <= 0.02 && cheat == 1.0;
  return {"harness_calibration", ok,
          std::to_string(2 * test_pairs_per_class) + " test pairs: always-H1 " + fmt(always_h1) +
              ", provenance oracle " + fmt(cheat),
          timer.seconds()};
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(commutativity(1000, derive_seed(seed, "commutativity")));
  out.push_back(gradient(120, derive_seed(seed, "gradient")));
  out.push_back(loss_anchor(20, derive_seed(seed, "loss_anchor")));
  out.push_back(threshold_optimality(50, derive_seed(seed, "threshold")));
  out.push_back(kmeans_monotonicity(50, derive_seed(seed, "kmeans")));
  out.push_back(estimator_consistency(100, derive_seed(seed, "estimator")));
  ExperimentConfig config;
  config.seed = seed;
  out.push_back(harness_calibration(build_corpus(config), 1000, derive_seed(seed, "harness")));
  return out;
}

}  // namespace spoofdet::checks
