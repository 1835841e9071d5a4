// Synthetic RSS scenarios: log-distance path loss with frozen shadowing,
// tone-plus-noise sample windows and short-term RSS estimation.
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spoofdet/common.hpp"
#include "spoofdet/dataset.hpp"

namespace spoofdet {

/// Parameters of a synthetic scenario. Powers are in dBm; -inf is allowed for
/// the transmit and noise powers (transmitter off / noiseless receivers).
struct ScenarioConfig {
  std::size_t num_locations = 52;
  Point3 region_min{0.0, 0.0, 0.0};
  Point3 region_max{250.0, 250.0, 3.0};

  /// Explicit receiver channel positions. When empty, `receiver_groups`
  /// groups of `antennas_per_group` antennas are laid out on the region
  /// perimeter (see antenna_group_layout).
  std::vector<Point3> receivers;
  std::size_t receiver_groups = 4;
  std::size_t antennas_per_group = 4;
  double antenna_spacing_m = 0.05;
  double receiver_height_m = 2.0;

  double path_loss_exponent = 2.5;
  double reference_loss_db = 40.0;
  double shadowing_std_db = 6.0;
  /// Shadowing correlation across receiver channels is
  /// exp(-|r_m - r_m'| / decorrelation). 0 makes channels independent.
  double shadowing_decorrelation_m = 1.0;

  double noise_power_dbm = -90.0;
  double tx_power_dbm = 0.0;
  double sampling_interval_s = 5e-8;
  double tone_frequency_hz = 5e6;
};

/// Receiver groups spread evenly along the perimeter of the region's xy
/// footprint, starting at the (min, min) corner; four groups land on the
/// corners. Antennas of a group sit on a square grid with the given spacing.
std::vector<Point3> antenna_group_layout(const ScenarioConfig& config);

class Scenario {
 public:
  Scenario(ScenarioConfig config, std::vector<Point3> receivers, std::vector<Point3> locations,
           std::vector<double> shadowing_db, std::vector<double> channel_phase);

  const ScenarioConfig& config() const noexcept { return config_; }
  const std::vector<Point3>& receivers() const noexcept { return receivers_; }
  const std::vector<Point3>& locations() const noexcept { return locations_; }
  std::size_t num_locations() const noexcept { return locations_.size(); }
  std::size_t num_receivers() const noexcept { return receivers_.size(); }

  double shadowing_db(std::size_t location, std::size_t receiver) const;
  double channel_phase(std::size_t location, std::size_t receiver) const;

  /// Received signal power (no noise) in dBm: tx - ref loss
  /// - 10*gamma*log10(max(d, 1 m)) + shadowing.
  double received_signal_dbm(std::size_t location, std::size_t receiver) const;

 private:
  void check_ids(std::size_t location, std::size_t receiver) const;

  ScenarioConfig config_;
  std::vector<Point3> receivers_;
  std::vector<Point3> locations_;
  std::vector<double> shadowing_db_;  // L x M, row-major
  std::vector<double> channel_phase_;
};

/// Validates `config` and draws transmitter locations, shadowing and channel
/// phases. Deterministic given the seed.
Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed);

struct TrueRssVector {
  std::size_t location = 0;
  std::vector<double> rss_dbm;
};

/// Expected received power (signal plus noise) per receiver channel, in dBm.
TrueRssVector true_rss(const Scenario& scenario, std::size_t location);

struct SampleWindow {
  std::size_t location = 0;
  std::size_t receiver = 0;
  std::vector<std::complex<double>> samples;
  double sampling_interval_s = 0.0;
};

/// r[k] = h * exp(j(2 pi f k Ts + phi)) + v[k] with |h|^2 the received
/// signal power, phi uniform and v circular Gaussian at the noise power.
SampleWindow draw_sample_window(const Scenario& scenario, std::size_t location,
                                std::size_t receiver, std::size_t num_samples, std::uint64_t seed);

/// 10*log10 of the mean squared magnitude of the samples.
/// Throws DegeneratePowerError for an all-zero window.
double estimate_rss(std::span<const std::complex<double>> samples);
double estimate_rss(const SampleWindow& window);

/// One short-term RSS estimate per receiver channel from independent windows.
std::vector<double> estimate_rss_vector(const Scenario& scenario, std::size_t location,
                                        std::size_t num_samples, std::uint64_t seed);

/// `estimates` RSS vector estimates for every location of the scenario.
MeasurementSet generate_corpus(const Scenario& scenario, std::size_t estimates,
                               std::size_t num_samples, std::uint64_t seed);

/// Binary window dump: "RSSW", u32 N_s, u32 receiver, u32 location, then
/// N_s little-endian float32 (I, Q) pairs.
void write_sample_window(const SampleWindow& window, const std::filesystem::path& path);
SampleWindow read_sample_window(const std::filesystem::path& path);

}  // namespace spoofdet
