// Shared vocabulary types: errors, hypotheses, decisions and seed derivation.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spoofdet {

/// Base exception. `kind()` is a stable machine-readable tag used by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Invalid configuration value; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error("config", field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error("data", message) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("dimension", message) {}
};

/// Raised when a sample window carries zero energy (its dB estimate would be -inf).
class DegeneratePowerError : public Error {
 public:
  explicit DegeneratePowerError(const std::string& message)
      : Error("degenerate_power", message) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& message) : Error("training", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(const Point3& a, const Point3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

/// H0: both transmissions come from the same location. H1: different locations.
enum class Hypothesis { H0, H1 };

/// Ground-truth label of a pair. SAME corresponds to H0, DIFF to H1.
enum class Label { Same, Diff };

constexpr Hypothesis hypothesis_for(Label label) noexcept {
  return label == Label::Same ? Hypothesis::H0 : Hypothesis::H1;
}

std::string_view to_string(Hypothesis h) noexcept;
std::string_view to_string(Label label) noexcept;

/// Outcome of a pairwise detector. `posterior` is only set by detectors that
/// produce a calibrated P[H1 | f, f'].
struct Decision {
  Hypothesis hypothesis = Hypothesis::H0;
  double statistic = 0.0;
  std::optional<double> posterior;
};

// Seed derivation. Every random stream in the library is an mt19937_64 seeded
// from a value obtained by hashing a parent seed with a tag (splitmix64 mix).

std::uint64_t mix_seed(std::uint64_t value) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept;

/// Seed of Monte Carlo iteration `iteration` at sweep point `point`:
/// derive_seed(derive_seed(master, point), iteration).
std::uint64_t iteration_seed(std::uint64_t master, std::uint64_t point,
                             std::uint64_t iteration) noexcept;

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace spoofdet
