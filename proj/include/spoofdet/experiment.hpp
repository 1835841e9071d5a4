// Experiment configuration (flat `key = value` files) and the three sweeps.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "spoofdet/evaluation.hpp"
#include "spoofdet/signal_model.hpp"

namespace spoofdet {

/// Smallest location count accepted in a sweep that includes DNNC: fewer
/// locations leave too few for a meaningful train/validation split.
inline constexpr std::size_t kMinDnncLocations = 10;

struct ExperimentConfig {
  std::uint64_t seed = 0;
  /// Measurement CSV; empty means "generate the synthetic corpus".
  std::string corpus;
  ScenarioConfig scenario;
  std::size_t num_samples = 16;
  /// 305 = floor(4888 / 16) non-overlapping 16-sample windows per location.
  std::size_t estimates = 305;

  std::vector<Algorithm> algorithms{Algorithm::Dnnc, Algorithm::Dbc1, Algorithm::Dbc2,
                                    Algorithm::Kmc};
  std::vector<std::size_t> locations_grid{10, 20, 30, 40, 45, 50};
  std::vector<std::vector<std::size_t>> feature_subsets{
      {0}, {0, 1}, {0, 4}, {0, 1, 2, 3}, {0, 4, 8, 12}, {0, 1, 2, 3, 4, 5, 6, 7},
      {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}};
  std::size_t feature_sweep_locations = 40;
  std::vector<std::size_t> samples_grid{4, 8, 16, 32, 64};
  std::size_t samples_sweep_locations = 40;

  std::size_t iterations = 20;
  std::size_t threads = 1;
  ProtocolConfig protocol;
};

/// Applies one `key = value` setting. Unknown keys and bad values throw
/// ConfigError naming the key.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Reads a config file: one `key = value` per line, `#` starts a comment.
ExperimentConfig load_config(const std::filesystem::path& path);
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// Every key with its current value, in the file format.
std::string format_config(const ExperimentConfig& config);

/// Synthetic scenario of the config (seeded from config.seed).
Scenario build_scenario(const ExperimentConfig& config);

/// Loads config.corpus or generates the synthetic corpus with
/// config.num_samples samples per estimate.
MeasurementSet build_corpus(const ExperimentConfig& config);

/// Accuracy vs. number of locations used for training and validation.
EvalReport sweep_locations(const MeasurementSet& corpus, const ExperimentConfig& config,
                           ProgressFn progress = {});

/// Accuracy vs. feature subset at config.feature_sweep_locations locations.
EvalReport sweep_features(const MeasurementSet& corpus, const ExperimentConfig& config,
                          ProgressFn progress = {});

/// Accuracy vs. samples per RSS estimate (synthetic corpora only).
EvalReport sweep_samples(const ExperimentConfig& config, ProgressFn progress = {});

}  // namespace spoofdet
