// Measurement corpora, balanced SAME/DIFF pair sets and location splits.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "spoofdet/common.hpp"

namespace spoofdet {

/// Dense corpus of RSS vector estimates in dB, indexed (location, estimate).
/// Immutable once constructed.
class MeasurementSet {
 public:
  MeasurementSet() = default;

  /// `values` is row-major over (location, estimate, feature). Throws
  /// DataError when a value is non-finite, the sizes disagree or fewer than
  /// two estimates per location are given.
  MeasurementSet(std::size_t num_locations, std::size_t num_estimates, std::size_t num_features,
                 std::vector<double> values,
                 std::optional<std::vector<Point3>> coordinates = std::nullopt);

  std::size_t num_locations() const noexcept { return num_locations_; }
  std::size_t num_estimates() const noexcept { return num_estimates_; }
  std::size_t num_features() const noexcept { return num_features_; }

  std::span<const double> feature(std::size_t location, std::size_t estimate) const;

  const std::vector<double>& values() const noexcept { return values_; }
  const std::optional<std::vector<Point3>>& coordinates() const noexcept { return coordinates_; }

  friend bool operator==(const MeasurementSet&, const MeasurementSet&) = default;

 private:
  std::size_t num_locations_ = 0;
  std::size_t num_estimates_ = 0;
  std::size_t num_features_ = 0;
  std::vector<double> values_;
  std::optional<std::vector<Point3>> coordinates_;
};

struct LabeledPair {
  std::vector<double> first;
  std::vector<double> second;
  Label label = Label::Same;
  std::size_t first_location = 0;
  std::size_t second_location = 0;
  std::size_t first_estimate = 0;
  std::size_t second_estimate = 0;
};

/// `per_class` SAME pairs followed by `per_class` DIFF pairs.
struct PairSet {
  std::vector<LabeledPair> pairs;
  std::size_t per_class = 0;

  std::size_t size() const noexcept { return pairs.size(); }
};

/// Draws `per_class` SAME and `per_class` DIFF pairs from the given locations.
/// Each draw is independent: SAME picks one location and two distinct
/// estimates, DIFF picks two distinct locations and two distinct estimate
/// indices. Duplicate pairs across draws are possible.
PairSet build_pair_set(const MeasurementSet& ms, std::span<const std::size_t> location_ids,
                       std::size_t per_class, std::uint64_t seed);

struct LocationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Picks `used` locations uniformly at random; round(train_fraction * used)
/// of them train, the rest validate. Unused locations form the test part.
LocationSplit split_locations(const MeasurementSet& ms, std::size_t used, double train_fraction,
                              std::uint64_t seed);

/// Projects every vector onto the given ordered channel subset.
MeasurementSet select_features(const MeasurementSet& ms, std::span<const std::size_t> channels);

/// Sidecar path holding location coordinates: `corpus.csv` -> `corpus.locations.csv`.
std::filesystem::path locations_sidecar_path(const std::filesystem::path& corpus_path);

/// Writes the corpus CSV (`location_id,estimate_id,feat_0,...`) and, when the
/// set carries coordinates, the `location_id,x,y,z` sidecar.
void save_measurements(const MeasurementSet& ms, const std::filesystem::path& path);

/// Reads a corpus CSV and its sidecar if present. Errors name the offending row.
MeasurementSet load_measurements(const std::filesystem::path& path);

}  // namespace spoofdet
