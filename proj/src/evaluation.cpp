#include "spoofdet/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "spoofdet/benchmarks.hpp"
#include "spoofdet/detector.hpp"
#include "text_util.hpp"

namespace spoofdet {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Dnnc: return "DNNC";
    case Algorithm::Dbc1: return "DBC1";
    case Algorithm::Dbc2: return "DBC2";
    case Algorithm::Kmc: return "KMC";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  name = text::trim(name);
  for (auto a : {Algorithm::Dnnc, Algorithm::Dbc1, Algorithm::Dbc2, Algorithm::Kmc}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("algorithms", "unknown algorithm '" + std::string(name) +
                                      "' (expected DNNC, DBC1, DBC2 or KMC)");
}

double evaluate_accuracy(const PairSet& pairs, const PairClassifier& classify) {
  if (pairs.pairs.empty()) throw DataError("cannot evaluate accuracy on an empty pair set");
  std::size_t correct = 0;
  for (const auto& p : pairs.pairs) {
    if (classify(p) == hypothesis_for(p.label)) ++correct;
  }
  return double(correct) / double(pairs.pairs.size());
}

PairSet merge_pair_sets(const PairSet& a, const PairSet& b) {
  PairSet out;
  out.per_class = a.per_class + b.per_class;
  out.pairs.reserve(a.size() + b.size());
  for (Label label : {Label::Same, Label::Diff}) {
    for (const PairSet* set : {&a, &b}) {
      for (const auto& p : set->pairs) {
        if (p.label == label) out.pairs.push_back(p);
      }
    }
  }
  return out;
}

TrialData prepare_trial(const MeasurementSet& corpus, const SweepPoint& point,
                        const ProtocolConfig& protocol, std::uint64_t seed) {
  TrialData t{point.features.empty() ? corpus : select_features(corpus, point.features), {}, {}, {}, {}};
  t.split = split_locations(t.corpus, point.locations_used, protocol.train_fraction,
                            derive_seed(seed, "split"));
  if (t.split.test.size() < 2) {
    throw ConfigError("locations_used", "need at least 2 held-out test locations, " +
                                            std::to_string(t.split.test.size()) + " left");
  }
  if (t.split.train.size() < 2 || t.split.validation.size() < 2) {
    throw ConfigError("locations_used", "training and validation need at least 2 locations each, got " +
                                            std::to_string(t.split.train.size()) + " and " +
                                            std::to_string(t.split.validation.size()));
  }
  t.train = build_pair_set(t.corpus, t.split.train, protocol.k_train, derive_seed(seed, "train_pairs"));
  t.validation =
      build_pair_set(t.corpus, t.split.validation, protocol.k_val, derive_seed(seed, "val_pairs"));
  t.test = build_pair_set(t.corpus, t.split.test, protocol.k_test, derive_seed(seed, "test_pairs"));
  return t;
}

AnyModel train_algorithm(Algorithm algorithm, const TrialData& trial,
                         const ProtocolConfig& protocol, std::uint64_t seed,
                         std::vector<EpochRecord>* history) {
  switch (algorithm) {
    case Algorithm::Dnnc: {
      TrainConfig cfg = protocol.train;
      cfg.seed = derive_seed(seed, "network");
      auto trained = train_detector_on_pairs(trial.train, trial.validation, cfg);
      if (history) *history = std::move(trained.history);
      return std::move(trained.model);
    }
    case Algorithm::Dbc1:
      return train_dbc(merge_pair_sets(trial.train, trial.validation), 1);
    case Algorithm::Dbc2:
      return train_dbc(merge_pair_sets(trial.train, trial.validation), 2);
    case Algorithm::Kmc: {
      std::vector<std::size_t> locations = trial.split.train;
      locations.insert(locations.end(), trial.split.validation.begin(),
                       trial.split.validation.end());
      return train_kmc(trial.corpus, locations, merge_pair_sets(trial.train, trial.validation),
                       protocol.kappa, derive_seed(seed, "kmeans"));
    }
  }
  throw ConfigError("algorithms", "unknown algorithm");
}

std::vector<AlgorithmAccuracy> run_iteration(const MeasurementSet& corpus, const SweepPoint& point,
                                             std::span<const Algorithm> algorithms,
                                             const ProtocolConfig& protocol, std::uint64_t seed) {
  const TrialData trial = prepare_trial(corpus, point, protocol, seed);
  std::vector<AlgorithmAccuracy> out;
  for (Algorithm a : algorithms) {
    const AnyModel model = train_algorithm(a, trial, protocol, seed);
    double accuracy = 0.0;
    if (const auto* dnnc = std::get_if<DetectorModel>(&model)) {
      // Batched evaluation of the symmetric statistic.
      const auto g = statistics(*dnnc, trial.test);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto h = g[i] > 0.0 ? Hypothesis::H1 : Hypothesis::H0;
        if (h == hypothesis_for(trial.test.pairs[i].label)) ++correct;
      }
      accuracy = double(correct) / double(g.size());
    } else {
      accuracy = evaluate_accuracy(trial.test, [&model](const LabeledPair& p) {
        return decide_any(model, p.first, p.second).hypothesis;
      });
    }
    out.push_back({a, accuracy});
  }
  return out;
}

double ReportRow::mean() const {
  if (accuracies.empty()) return 0.0;
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  return sum / double(accuracies.size());
}

std::optional<double> ReportRow::std_error() const {
  const std::size_t r = accuracies.size();
  if (r < 2) return std::nullopt;
  const double m = mean();
  double ss = 0.0;
  for (double a : accuracies) ss += (a - m) * (a - m);
  return std::sqrt(ss / double(r - 1)) / std::sqrt(double(r));
}

EvalReport run_sweep(std::span<const MeasurementSet* const> corpora,
                     std::span<const SweepPoint> points, std::span<const Algorithm> algorithms,
                     const ProtocolConfig& protocol, const SweepOptions& options) {
  if (corpora.size() != points.size()) throw ConfigError("points", "one corpus per sweep point");
  if (points.empty()) throw ConfigError("points", "sweep grid is empty");
  if (algorithms.empty()) throw ConfigError("algorithms", "no algorithm selected");
  if (options.iterations == 0) throw ConfigError("iterations", "must be >= 1");

  const std::size_t r_count = options.iterations;
  const std::size_t jobs = points.size() * r_count;
  std::vector<std::vector<AlgorithmAccuracy>> results(jobs);

  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t s = job / r_count;
      const std::size_t r = job % r_count;
      try {
        results[job] = run_iteration(*corpora[s], points[s], algorithms, protocol,
                                     iteration_seed(options.master_seed, s, r));
        if (options.progress) {
          std::lock_guard lock(mutex);
          std::string line = points[s].variable + "=" + points[s].value + " iteration " +
                             std::to_string(r + 1) + "/" + std::to_string(r_count);
          for (const auto& a : results[job]) {
            line += " " + std::string(to_string(a.algorithm)) + "=" + text::format_double(a.accuracy);
          }
          options.progress(line);
        }
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = jobs;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport report;
  for (std::size_t s = 0; s < points.size(); ++s) {
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      ReportRow row{std::string(to_string(algorithms[a])), points[s].variable, points[s].value, {}, {}};
      for (std::size_t r = 0; r < r_count; ++r) {
        row.accuracies.push_back(results[s * r_count + r][a].accuracy);
        row.seeds.push_back(iteration_seed(options.master_seed, s, r));
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string format_feature_subset(std::span<const std::size_t> features) {
  std::string out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i) out += '+';
    out += std::to_string(features[i]);
  }
  return out;
}

std::vector<std::size_t> parse_feature_subset(std::string_view text) {
  std::vector<std::size_t> out;
  for (auto part : text::split(text::trim(text), '+')) {
    part = text::trim(part);
    const auto dash = part.find('-');
    if (dash == std::string_view::npos) {
      const auto v = text::parse_uint(part);
      if (!v) throw ConfigError("feature_subsets", "bad feature id '" + std::string(part) + "'");
      out.push_back(std::size_t(*v));
    } else {
      const auto lo = text::parse_uint(part.substr(0, dash));
      const auto hi = text::parse_uint(part.substr(dash + 1));
      if (!lo || !hi || *lo > *hi) {
        throw ConfigError("feature_subsets", "bad feature range '" + std::string(part) + "'");
      }
      for (auto v = *lo; v <= *hi; ++v) out.push_back(std::size_t(v));
    }
  }
  if (out.empty()) throw ConfigError("feature_subsets", "empty feature subset");
  return out;
}

std::vector<SummaryRow> summarize(const EvalReport& report) {
  std::vector<SummaryRow> out;
  for (const auto& row : report.rows) {
    out.push_back({row.algorithm, row.sweep_var, row.sweep_value, row.mean(), row.std_error(),
                   row.accuracies.size()});
  }
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::string_view header, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != header) {
    throw DataError(path.string() + ": header must be " + std::string(header));
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(text::trim(line), ',');
    if (cells.size() != columns) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " columns");
    }
    rows.emplace_back(cells.begin(), cells.end());
  }
  return rows;
}

double need_double(const std::string& s, const std::filesystem::path& path) {
  const auto v = text::parse_double(s);
  if (!v) throw DataError(path.string() + ": bad number '" + s + "'");
  return *v;
}

std::uint64_t need_uint(const std::string& s, const std::filesystem::path& path) {
  const auto v = text::parse_uint(s);
  if (!v) throw DataError(path.string() + ": bad integer '" + s + "'");
  return *v;
}

}  // namespace

void emit_report(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kReportHeader << '\n';
  for (const auto& s : summarize(report)) {
    out << s.algorithm << ',' << s.sweep_var << ',' << s.sweep_value << ','
        << text::format_double(s.mean_accuracy) << ','
        << (s.std_error ? text::format_double(*s.std_error) : std::string("NA")) << ','
        << s.iterations << '\n';
  }
  finish(out, path);
  if (!report.config_echo.empty()) {
    auto echo_path = path;
    echo_path += ".config.txt";
    auto echo = open_out(echo_path);
    echo << report.config_echo;
    finish(echo, echo_path);
  }
}

void emit_raw(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kRawHeader << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t r = 0; r < row.accuracies.size(); ++r) {
      out << row.algorithm << ',' << row.sweep_var << ',' << row.sweep_value << ',' << r << ','
          << row.seeds[r] << ',' << text::format_double(row.accuracies[r]) << '\n';
    }
  }
  finish(out, path);
}

void emit_history(std::span<const EpochRecord> history, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kHistoryHeader << '\n';
  for (const auto& e : history) {
    out << e.epoch << ',' << text::format_double(e.train_loss) << ','
        << text::format_double(e.val_accuracy) << '\n';
  }
  finish(out, path);
}

std::vector<SummaryRow> read_report(const std::filesystem::path& path) {
  std::vector<SummaryRow> out;
  for (const auto& c : read_csv(path, kReportHeader, 6)) {
    SummaryRow row{c[0], c[1], c[2], need_double(c[3], path), std::nullopt,
                   std::size_t(need_uint(c[5], path))};
    if (c[4] != "NA") row.std_error = need_double(c[4], path);
    out.push_back(std::move(row));
  }
  return out;
}

EvalReport read_raw(const std::filesystem::path& path) {
  EvalReport report;
  for (const auto& c : read_csv(path, kRawHeader, 6)) {
    const std::uint64_t iteration = need_uint(c[3], path);
    if (report.rows.empty() || report.rows.back().algorithm != c[0] ||
        report.rows.back().sweep_var != c[1] || report.rows.back().sweep_value != c[2]) {
      report.rows.push_back({c[0], c[1], c[2], {}, {}});
    }
    auto& row = report.rows.back();
    if (iteration != row.accuracies.size()) {
      throw DataError(path.string() + ": iterations out of order for " + c[0] + " at " + c[2]);
    }
    row.seeds.push_back(need_uint(c[4], path));
    row.accuracies.push_back(need_double(c[5], path));
  }
  return report;
}

}  // namespace spoofdet
