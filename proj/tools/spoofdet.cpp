// spoofdet: command-line front end for corpus generation, training, single
// decisions, accuracy sweeps and the invariant checks.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spoofdet/checks.hpp"
#include "spoofdet/common.hpp"
#include "spoofdet/dataset.hpp"
#include "spoofdet/evaluation.hpp"
#include "spoofdet/experiment.hpp"
#include "spoofdet/model_io.hpp"
#include "spoofdet/signal_model.hpp"

namespace fs = std::filesystem;
using namespace spoofdet;

namespace {

struct SharedOptions {
  std::string config_file;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::string corpus;
};

void add_shared(CLI::App* cmd, SharedOptions& opts, bool needs_seed) {
  cmd->add_option("--config", opts.config_file, "key = value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.settings, "Override one setting, KEY=VALUE (repeatable)");
  auto* seed = cmd->add_option("--seed", opts.seed, "Master seed");
  if (needs_seed) seed->required();
  cmd->add_option("--corpus", opts.corpus, "Measurement CSV (default: synthetic scenario)");
}

ExperimentConfig resolve_config(const SharedOptions& opts) {
  ExperimentConfig config;
  if (!opts.config_file.empty()) apply_config_file(config, opts.config_file);
  for (const auto& kv : opts.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set", "expected KEY=VALUE, got '" + kv + "'");
    }
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) config.seed = *opts.seed;
  if (!opts.corpus.empty()) config.corpus = opts.corpus;
  return config;
}

std::vector<double> parse_vector(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(field, "not a number: '" + item + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

fs::path default_raw_path(const fs::path& out) {
  fs::path raw = out;
  raw.replace_extension(".raw.csv");
  return raw;
}

ProgressFn progress_printer(bool quiet) {
  if (quiet) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

void finish_sweep(const EvalReport& report, const fs::path& out, const std::string& raw) {
  emit_report(report, out);
  const fs::path raw_path = raw.empty() ? default_raw_path(out) : fs::path(raw);
  emit_raw(report, raw_path);
  for (const auto& row : summarize(report)) {
    std::cout << row.algorithm << ' ' << row.sweep_var << '=' << row.sweep_value
              << " mean_accuracy=" << row.mean_accuracy;
    if (row.std_error) std::cout << " std_error=" << *row.std_error;
    std::cout << '\n';
  }
  std::cout << "wrote " << out.string() << " and " << raw_path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RSS-based spoofing detection: corpus generation, training and evaluation"};
  app.require_subcommand(1);

  // generate
  SharedOptions gen_opts;
  std::string gen_out;
  std::string window_out;
  std::size_t window_location = 0;
  std::size_t window_receiver = 0;
  auto* gen = app.add_subcommand("generate", "Write a synthetic measurement corpus");
  add_shared(gen, gen_opts, true);
  gen->add_option("--out", gen_out, "Corpus CSV path")->required();
  gen->add_option("--window-out", window_out, "Also dump one raw sample window (binary)");
  gen->add_option("--window-location", window_location, "Location of the dumped window");
  gen->add_option("--window-receiver", window_receiver, "Receiver of the dumped window");

  // train
  SharedOptions train_opts;
  std::string algorithm_name;
  std::string model_out;
  std::string history_out;
  std::size_t train_locations = 45;
  std::string train_features;
  auto* train = app.add_subcommand("train", "Train one detector and report its test accuracy");
  add_shared(train, train_opts, true);
  train->add_option("--algorithm", algorithm_name, "DNNC, DBC1, DBC2 or KMC")->required();
  train->add_option("--out", model_out, "Model file path")->required();
  train->add_option("--history", history_out, "Per-epoch training history CSV (DNNC)");
  train->add_option("--locations", train_locations, "Locations used for training/validation");
  train->add_option("--features", train_features, "Channel subset, e.g. 0+4 or 0-7");

  // decide
  std::string model_path;
  std::string first_text;
  std::string second_text;
  auto* decide_cmd = app.add_subcommand("decide", "Classify one pair of RSS vectors");
  decide_cmd->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  decide_cmd->add_option("--first", first_text, "Comma-separated RSS vector (dBm)")->required();
  decide_cmd->add_option("--second", second_text, "Comma-separated RSS vector (dBm)")->required();

  // sweeps
  struct SweepCli {
    SharedOptions opts;
    std::string out;
    std::string raw;
    bool quiet = false;
  };
  SweepCli loc_cli, feat_cli, samp_cli;
  auto add_sweep = [&](const char* name, const char* help, SweepCli& s) {
    auto* cmd = app.add_subcommand(name, help);
    add_shared(cmd, s.opts, true);
    cmd->add_option("--out", s.out, "Summary CSV path")->required();
    cmd->add_option("--raw", s.raw, "Per-iteration CSV path (default: <out>.raw.csv)");
    cmd->add_flag("--quiet", s.quiet, "Suppress progress on stderr");
    return cmd;
  };
  auto* sweep_loc = add_sweep("sweep-locations", "Accuracy vs. number of training locations", loc_cli);
  auto* sweep_feat = add_sweep("sweep-features", "Accuracy vs. receiver-channel subset", feat_cli);
  auto* sweep_samp = add_sweep("sweep-samples", "Accuracy vs. samples per estimate (synthetic)", samp_cli);

  // check
  std::uint64_t check_seed = 1;
  auto* check = app.add_subcommand("check", "Run the invariant checks");
  check->add_option("--seed", check_seed, "Seed for the random check cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error,kind=usage,message=" << e.what() << '\n';
    return 2;
  }

  try {
    if (*gen) {
      const ExperimentConfig config = resolve_config(gen_opts);
      const Scenario scenario = build_scenario(config);
      const MeasurementSet corpus = build_corpus(config);
      save_measurements(corpus, gen_out);
      std::cout << "wrote " << gen_out << " (" << corpus.num_locations() << " locations x "
                << corpus.num_estimates() << " estimates x " << corpus.num_features()
                << " channels) and " << locations_sidecar_path(gen_out).string() << '\n';
      if (!window_out.empty()) {
        const auto window =
            draw_sample_window(scenario, window_location, window_receiver, config.num_samples,
                               derive_seed(config.seed, "window"));
        write_sample_window(window, window_out);
        std::cout << "wrote " << window_out << " (" << window.samples.size() << " samples)\n";
      }
    } else if (*train) {
      const ExperimentConfig config = resolve_config(train_opts);
      const Algorithm algorithm = parse_algorithm(algorithm_name);
      const MeasurementSet corpus = build_corpus(config);
      SweepPoint point{"locations", std::to_string(train_locations), train_locations, {}};
      if (!train_features.empty()) point.features = parse_feature_subset(train_features);
      const std::uint64_t seed = derive_seed(config.seed, "train");
      const TrialData trial = prepare_trial(corpus, point, config.protocol, seed);
      std::vector<EpochRecord> history;
      const AnyModel model = train_algorithm(algorithm, trial, config.protocol, seed, &history);
      save_model(model, model_out);
      if (!history_out.empty()) emit_history(history, history_out);
      const double accuracy = evaluate_accuracy(trial.test, [&](const LabeledPair& p) {
        return decide_any(model, p.first, p.second).hypothesis;
      });
      std::cout << "algorithm=" << to_string(algorithm) << ",test_accuracy=" << accuracy
                << ",epochs=" << history.size() << ",model=" << model_out << '\n';
    } else if (*decide_cmd) {
      const AnyModel model = load_model(model_path);
      const auto first = parse_vector(first_text, "--first");
      const auto second = parse_vector(second_text, "--second");
      const Decision d = decide_any(model, first, second);
      std::cout.precision(17);
      std::cout << "hypothesis=" << to_string(d.hypothesis) << ",statistic=" << d.statistic
                << ",posterior=";
      if (d.posterior) {
        std::cout << *d.posterior;
      } else {
        std::cout << "NA";
      }
      std::cout << '\n';
    } else if (*sweep_loc) {
      const ExperimentConfig config = resolve_config(loc_cli.opts);
      const MeasurementSet corpus = build_corpus(config);
      finish_sweep(sweep_locations(corpus, config, progress_printer(loc_cli.quiet)), loc_cli.out,
                   loc_cli.raw);
    } else if (*sweep_feat) {
      const ExperimentConfig config = resolve_config(feat_cli.opts);
      const MeasurementSet corpus = build_corpus(config);
      finish_sweep(sweep_features(corpus, config, progress_printer(feat_cli.quiet)), feat_cli.out,
                   feat_cli.raw);
    } else if (*sweep_samp) {
      const ExperimentConfig config = resolve_config(samp_cli.opts);
      finish_sweep(sweep_samples(config, progress_printer(samp_cli.quiet)), samp_cli.out,
                   samp_cli.raw);
    } else if (*check) {
      bool all = true;
      for (const auto& r : checks::run_all(check_seed)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " ("
                  << r.seconds << " s)\n";
        all = all && r.passed;
      }
      return all ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error,kind=" << e.kind() << ",message=" << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error,kind=internal,message=" << e.what() << '\n';
    return 1;
  }
  return 0;
}
