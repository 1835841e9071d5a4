// Monte Carlo evaluation: per-iteration location splits, training of every
// requested algorithm, test accuracy on balanced pairs, sweep aggregation and
// CSV reports.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spoofdet/dataset.hpp"
#include "spoofdet/model_io.hpp"
#include "spoofdet/neural.hpp"

namespace spoofdet {

enum class Algorithm { Dnnc, Dbc1, Dbc2, Kmc };

std::string_view to_string(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);

/// Pair counts, split fraction and per-algorithm hyperparameters of one
/// Monte Carlo iteration.
struct ProtocolConfig {
  std::size_t k_train = 1250;
  std::size_t k_val = 150;
  std::size_t k_test = 1000;
  double train_fraction = 0.8;
  std::size_t kappa = 15;
  TrainConfig train;
};

using PairClassifier = std::function<Hypothesis(const LabeledPair&)>;

/// Fraction of pairs whose decision matches the label.
double evaluate_accuracy(const PairSet& pairs, const PairClassifier& classify);

struct SweepPoint {
  std::string variable;  // "locations", "features" or "samples"
  std::string value;
  std::size_t locations_used = 0;
  std::vector<std::size_t> features;  // empty: all features
};

/// Everything one iteration trains and tests on.
struct TrialData {
  MeasurementSet corpus;  // projected onto the point's features
  LocationSplit split;
  PairSet train;
  PairSet validation;
  PairSet test;
};

TrialData prepare_trial(const MeasurementSet& corpus, const SweepPoint& point,
                        const ProtocolConfig& protocol, std::uint64_t seed);

/// Train and validation pairs merged (SAME pairs first): what the benchmarks fit on.
PairSet merge_pair_sets(const PairSet& a, const PairSet& b);

/// Trains one algorithm on a trial. DNNC uses train pairs with validation-based
/// early stopping; the benchmarks fit on train and validation data together.
AnyModel train_algorithm(Algorithm algorithm, const TrialData& trial,
                         const ProtocolConfig& protocol, std::uint64_t seed,
                         std::vector<EpochRecord>* history = nullptr);

struct AlgorithmAccuracy {
  Algorithm algorithm;
  double accuracy = 0.0;
};

std::vector<AlgorithmAccuracy> run_iteration(const MeasurementSet& corpus, const SweepPoint& point,
                                             std::span<const Algorithm> algorithms,
                                             const ProtocolConfig& protocol, std::uint64_t seed);

struct ReportRow {
  std::string algorithm;
  std::string sweep_var;
  std::string sweep_value;
  std::vector<double> accuracies;  // one per Monte Carlo iteration
  std::vector<std::uint64_t> seeds;

  double mean() const;
  /// Sample standard deviation / sqrt(R); empty when R < 2.
  std::optional<double> std_error() const;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::string config_echo;
};

using ProgressFn = std::function<void(const std::string&)>;

struct SweepOptions {
  std::size_t iterations = 20;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  ProgressFn progress;
};

/// R iterations of run_iteration per point; iteration r of point s uses
/// iteration_seed(master, s, r). `corpora[s]` is the corpus of point s.
/// Results do not depend on `threads`.
EvalReport run_sweep(std::span<const MeasurementSet* const> corpora,
                     std::span<const SweepPoint> points, std::span<const Algorithm> algorithms,
                     const ProtocolConfig& protocol, const SweepOptions& options);

/// Canonical text of a feature subset: "0+4+8".
std::string format_feature_subset(std::span<const std::size_t> features);
/// Parses "0+4+8" or ranges such as "0-15" (also mixed: "0-3+8").
std::vector<std::size_t> parse_feature_subset(std::string_view text);

struct SummaryRow {
  std::string algorithm;
  std::string sweep_var;
  std::string sweep_value;
  double mean_accuracy = 0.0;
  std::optional<double> std_error;
  std::size_t iterations = 0;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

std::vector<SummaryRow> summarize(const EvalReport& report);

inline constexpr std::string_view kReportHeader =
    "algorithm,sweep_var,sweep_value,mean_accuracy,std_error,iterations";
inline constexpr std::string_view kRawHeader =
    "algorithm,sweep_var,sweep_value,iteration,seed,accuracy";
inline constexpr std::string_view kHistoryHeader = "epoch,train_loss,val_accuracy";

/// Summary CSV; std_error is "NA" when R = 1. When the report carries a
/// config echo it is written to `<path>.config.txt`.
void emit_report(const EvalReport& report, const std::filesystem::path& path);
/// One row per (algorithm, sweep point, iteration).
void emit_raw(const EvalReport& report, const std::filesystem::path& path);
void emit_history(std::span<const EpochRecord> history, const std::filesystem::path& path);

std::vector<SummaryRow> read_report(const std::filesystem::path& path);
/// Rebuilds the report rows (without the config echo) from a raw file.
EvalReport read_raw(const std::filesystem::path& path);

}  // namespace spoofdet
