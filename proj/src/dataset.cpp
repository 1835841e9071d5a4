#include "spoofdet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "text_util.hpp"

namespace spoofdet {

MeasurementSet::MeasurementSet(std::size_t num_locations, std::size_t num_estimates,
                               std::size_t num_features, std::vector<double> values,
                               std::optional<std::vector<Point3>> coordinates)
    : num_locations_(num_locations),
      num_estimates_(num_estimates),
      num_features_(num_features),
      values_(std::move(values)),
      coordinates_(std::move(coordinates)) {
  if (num_locations_ == 0 || num_features_ == 0) {
    throw DataError("measurement set needs at least one location and one feature");
  }
  if (num_estimates_ < 2) {
    throw DataError("measurement set needs at least 2 estimates per location, got " +
                    std::to_string(num_estimates_));
  }
  if (values_.size() != num_locations_ * num_estimates_ * num_features_) {
    throw DataError("measurement set value count does not match L*E*M");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      const std::size_t row = i / num_features_;
      throw DataError("non-finite feature at location " + std::to_string(row / num_estimates_) +
                      ", estimate " + std::to_string(row % num_estimates_) + ", feature " +
                      std::to_string(i % num_features_));
    }
  }
  if (coordinates_ && coordinates_->size() != num_locations_) {
    throw DataError("coordinate count does not match location count");
  }
}

std::span<const double> MeasurementSet::feature(std::size_t location, std::size_t estimate) const {
  if (location >= num_locations_ || estimate >= num_estimates_) {
    throw DimensionError("feature index (" + std::to_string(location) + ", " +
                         std::to_string(estimate) + ") out of range");
  }
  return {values_.data() + (location * num_estimates_ + estimate) * num_features_,
          num_features_};
}

namespace {

LabeledPair make_pair(const MeasurementSet& ms, std::size_t n1, std::size_t j1, std::size_t n2,
                      std::size_t j2, Label label) {
  const auto a = ms.feature(n1, j1);
  const auto b = ms.feature(n2, j2);
  return LabeledPair{{a.begin(), a.end()}, {b.begin(), b.end()}, label, n1, n2, j1, j2};
}

// Two distinct indices drawn uniformly without replacement from {0..count-1}.
std::pair<std::size_t, std::size_t> draw_distinct(Engine& rng, std::size_t count) {
  std::uniform_int_distribution<std::size_t> first(0, count - 1);
  std::uniform_int_distribution<std::size_t> second(0, count - 2);
  const std::size_t a = first(rng);
  std::size_t b = second(rng);
  if (b >= a) ++b;
  return {a, b};
}

}  // namespace

PairSet build_pair_set(const MeasurementSet& ms, std::span<const std::size_t> location_ids,
                       std::size_t per_class, std::uint64_t seed) {
  if (location_ids.size() < 2) {
    throw ConfigError("location_ids", "need at least 2 locations to form DIFF pairs");
  }
  if (ms.num_estimates() < 2) {
    throw DataError("need at least 2 estimates per location to form SAME pairs");
  }
  if (per_class == 0) throw ConfigError("per_class", "must be >= 1");
  for (std::size_t id : location_ids) {
    if (id >= ms.num_locations()) {
      throw ConfigError("location_ids", "location " + std::to_string(id) + " not in corpus");
    }
  }

  Engine rng = make_engine(seed);
  const std::size_t estimates = ms.num_estimates();
  std::uniform_int_distribution<std::size_t> pick_location(0, location_ids.size() - 1);

  PairSet out;
  out.per_class = per_class;
  out.pairs.reserve(2 * per_class);
  for (std::size_t p = 0; p < per_class; ++p) {
    const std::size_t n = location_ids[pick_location(rng)];
    const auto [j1, j2] = draw_distinct(rng, estimates);
    out.pairs.push_back(make_pair(ms, n, j1, n, j2, Label::Same));
  }
  for (std::size_t p = 0; p < per_class; ++p) {
    const auto [i1, i2] = draw_distinct(rng, location_ids.size());
    const auto [j1, j2] = draw_distinct(rng, estimates);
    out.pairs.push_back(make_pair(ms, location_ids[i1], j1, location_ids[i2], j2, Label::Diff));
  }
  return out;
}

LocationSplit split_locations(const MeasurementSet& ms, std::size_t used, double train_fraction,
                              std::uint64_t seed) {
  if (used < 2 || used > ms.num_locations()) {
    throw ConfigError("locations_used", "must lie in [2, " + std::to_string(ms.num_locations()) +
                                            "], got " + std::to_string(used));
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction", "must lie in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * double(used)));
  if (n_train < 1 || n_train >= used) {
    throw ConfigError("train_fraction", "split of " + std::to_string(used) +
                                            " locations leaves an empty train or validation part");
  }

  std::vector<std::size_t> ids(ms.num_locations());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Engine rng = make_engine(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  LocationSplit split;
  split.train.assign(ids.begin(), ids.begin() + long(n_train));
  split.validation.assign(ids.begin() + long(n_train), ids.begin() + long(used));
  split.test.assign(ids.begin() + long(used), ids.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

MeasurementSet select_features(const MeasurementSet& ms, std::span<const std::size_t> channels) {
  if (channels.empty()) throw ConfigError("features", "feature subset is empty");
  std::vector<bool> seen(ms.num_features(), false);
  for (std::size_t c : channels) {
    if (c >= ms.num_features()) {
      throw ConfigError("features", "feature " + std::to_string(c) + " out of range (M=" +
                                        std::to_string(ms.num_features()) + ")");
    }
    if (seen[c]) throw ConfigError("features", "feature " + std::to_string(c) + " repeated");
    seen[c] = true;
  }
  std::vector<double> values;
  values.reserve(ms.num_locations() * ms.num_estimates() * channels.size());
  for (std::size_t n = 0; n < ms.num_locations(); ++n) {
    for (std::size_t j = 0; j < ms.num_estimates(); ++j) {
      const auto f = ms.feature(n, j);
      for (std::size_t c : channels) values.push_back(f[c]);
    }
  }
  return MeasurementSet(ms.num_locations(), ms.num_estimates(), channels.size(),
                        std::move(values), ms.coordinates());
}

std::filesystem::path locations_sidecar_path(const std::filesystem::path& corpus_path) {
  auto p = corpus_path;
  p.replace_extension(".locations.csv");
  return p;
}

void save_measurements(const MeasurementSet& ms, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "location_id,estimate_id";
  for (std::size_t m = 0; m < ms.num_features(); ++m) out << ",feat_" << m;
  out << '\n';
  for (std::size_t n = 0; n < ms.num_locations(); ++n) {
    for (std::size_t j = 0; j < ms.num_estimates(); ++j) {
      out << n << ',' << j;
      for (double v : ms.feature(n, j)) out << ',' << text::format_double(v);
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed for " + path.string());

  if (ms.coordinates()) {
    const auto side = locations_sidecar_path(path);
    std::ofstream loc(side, std::ios::binary);
    if (!loc) throw IoError("cannot write " + side.string());
    loc << "location_id,x,y,z\n";
    for (std::size_t n = 0; n < ms.num_locations(); ++n) {
      const auto& p = (*ms.coordinates())[n];
      loc << n << ',' << text::format_double(p.x) << ',' << text::format_double(p.y) << ','
          << text::format_double(p.z) << '\n';
    }
    if (!loc) throw IoError("write failed for " + side.string());
  }
}

namespace {

std::optional<std::vector<Point3>> load_sidecar(const std::filesystem::path& path,
                                                std::size_t num_locations) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  std::getline(in, line);
  if (text::trim(line) != "location_id,x,y,z") {
    throw DataError(path.string() + ": bad header, expected location_id,x,y,z");
  }
  std::vector<Point3> coords(num_locations);
  std::vector<bool> seen(num_locations, false);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(text::trim(line), ',');
    const auto id = cells.size() == 4 ? text::parse_uint(cells[0]) : std::nullopt;
    if (!id || *id >= num_locations || seen[*id]) {
      throw DataError(path.string() + ": bad location row " + std::to_string(row));
    }
    double xyz[3];
    for (int k = 0; k < 3; ++k) {
      const auto v = text::parse_double(cells[k + 1]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(path.string() + ": bad coordinate at row " + std::to_string(row) +
                        ", column " + std::to_string(k + 2));
      }
      xyz[k] = *v;
    }
    coords[*id] = {xyz[0], xyz[1], xyz[2]};
    seen[*id] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw DataError(path.string() + ": missing coordinates for some locations");
  }
  return coords;
}

}  // namespace

MeasurementSet load_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string() + ": ";

  std::string line;
  if (!std::getline(in, line)) throw DataError(where + "empty file");
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 3 || header[0] != "location_id" || header[1] != "estimate_id") {
    throw DataError(where + "header must start with location_id,estimate_id,feat_0");
  }
  const std::size_t num_features = header.size() - 2;
  for (std::size_t m = 0; m < num_features; ++m) {
    if (header[m + 2] != "feat_" + std::to_string(m)) {
      throw DataError(where + "header column " + std::to_string(m + 3) + " should be feat_" +
                      std::to_string(m));
    }
  }

  // (location, estimate) -> features; ordered so the dense layout is direct.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> rows;
  std::size_t row = 1;
  std::size_t max_location = 0;
  std::size_t max_estimate = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    const auto cells = text::split(trimmed, ',');
    if (cells.size() != num_features + 2) {
      throw DataError(where + "row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(num_features + 2));
    }
    const auto n = text::parse_uint(cells[0]);
    const auto j = text::parse_uint(cells[1]);
    if (!n || !j) throw DataError(where + "row " + std::to_string(row) + " has a bad id");
    std::vector<double> f(num_features);
    for (std::size_t m = 0; m < num_features; ++m) {
      const auto v = text::parse_double(cells[m + 2]);
      if (!v || !std::isfinite(*v)) {
        throw DataError(where + "row " + std::to_string(row) + ", column " +
                        std::to_string(m + 3) + ": non-finite or unparsable value");
      }
      f[m] = *v;
    }
    if (!rows.emplace(std::pair{std::size_t(*n), std::size_t(*j)}, std::move(f)).second) {
      throw DataError(where + "row " + std::to_string(row) + " duplicates (location, estimate)");
    }
    max_location = std::max<std::size_t>(max_location, *n);
    max_estimate = std::max<std::size_t>(max_estimate, *j);
  }
  if (rows.empty()) throw DataError(where + "no data rows");

  const std::size_t num_locations = max_location + 1;
  const std::size_t num_estimates = max_estimate + 1;
  if (rows.size() != num_locations * num_estimates) {
    throw DataError(where + "corpus is ragged: expected every (location, estimate) slot in [0," +
                    std::to_string(num_locations) + ")x[0," + std::to_string(num_estimates) +
                    ") to be present");
  }
  if (num_estimates < 2) throw DataError(where + "need at least 2 estimates per location");

  std::vector<double> values;
  values.reserve(rows.size() * num_features);
  for (const auto& [key, f] : rows) values.insert(values.end(), f.begin(), f.end());

  return MeasurementSet(num_locations, num_estimates, num_features, std::move(values),
                        load_sidecar(locations_sidecar_path(path), num_locations));
}

}  // namespace spoofdet
