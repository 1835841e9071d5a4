#include "spoofdet/model_io.hpp"

#include <cmath>
#include <fstream>

#include "binary_io.hpp"

namespace spoofdet {

namespace {

enum : std::uint32_t { kTagDnnc = 1, kTagDbc = 2, kTagKmc = 3 };

void write_body(std::ostream& out, const DetectorModel& m) {
  m.validate();
  binary::put_u32(out, kTagDnnc);
  binary::put_u32(out, std::uint32_t(m.num_features()));
  const auto sizes = m.params.layer_sizes();
  binary::put_u32(out, std::uint32_t(sizes.size()));
  for (auto s : sizes) binary::put_u32(out, std::uint32_t(s));
  binary::put_f64(out, m.params.negative_slope);
  for (const auto& layer : m.params.layers) {
    for (long r = 0; r < layer.weights.rows(); ++r) {
      for (long c = 0; c < layer.weights.cols(); ++c) binary::put_f64(out, layer.weights(r, c));
    }
    for (long r = 0; r < layer.bias.size(); ++r) binary::put_f64(out, layer.bias(r));
  }
  for (double v : m.feature_mean) binary::put_f64(out, v);
  for (double v : m.feature_std) binary::put_f64(out, v);
}

void write_body(std::ostream& out, const DbcModel& m) {
  binary::put_u32(out, kTagDbc);
  binary::put_u32(out, std::uint32_t(m.norm_order));
  binary::put_f64(out, m.threshold);
}

void write_body(std::ostream& out, const KmcModel& m) {
  binary::put_u32(out, kTagKmc);
  binary::put_u32(out, std::uint32_t(m.centroids.size()));
  const std::size_t dim = m.centroids.empty() ? 0 : m.centroids.front().size();
  binary::put_u32(out, std::uint32_t(dim));
  for (const auto& c : m.centroids) {
    if (c.size() != dim) throw DimensionError("centroids differ in dimension");
    for (double v : c) binary::put_f64(out, v);
  }
  binary::put_f64(out, m.threshold);
}

constexpr std::uint32_t kMaxDim = 1u << 20;

std::uint32_t bounded(binary::Reader& r, const std::string& what, const std::string& source) {
  const std::uint32_t v = r.u32();
  if (v == 0 || v > kMaxDim) throw DataError(source + ": implausible " + what + " " + std::to_string(v));
  return v;
}

DetectorModel read_dnnc(binary::Reader& r, const std::string& source) {
  DetectorModel m;
  const std::uint32_t features = bounded(r, "feature count", source);
  const std::uint32_t count = bounded(r, "layer count", source);
  if (count < 2) throw DataError(source + ": network needs at least one layer");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) s = bounded(r, "layer size", source);
  m.params.negative_slope = r.f64();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer{Eigen::MatrixXd(long(sizes[l + 1]), long(sizes[l])),
                     Eigen::VectorXd(long(sizes[l + 1]))};
    for (long row = 0; row < layer.weights.rows(); ++row) {
      for (long c = 0; c < layer.weights.cols(); ++c) layer.weights(row, c) = r.f64();
    }
    for (long row = 0; row < layer.bias.size(); ++row) layer.bias(row) = r.f64();
    m.params.layers.push_back(std::move(layer));
  }
  m.feature_mean.resize(features);
  m.feature_std.resize(features);
  for (auto& v : m.feature_mean) v = r.f64();
  for (auto& v : m.feature_std) v = r.f64();
  m.validate();
  return m;
}

}  // namespace

void save_model(const AnyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("SPDM", 4);
  binary::put_u32(out, kModelFormatVersion);
  std::visit([&out](const auto& m) { write_body(out, m); }, model);
  if (!out) throw IoError("write failed for " + path.string());
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string source = path.string();
  binary::Reader r(in, source);
  if (r.tag(4) != "SPDM") throw DataError(source + ": bad magic, expected SPDM");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw DataError(source + ": unsupported model format version " + std::to_string(version));
  }
  AnyModel model;
  switch (const std::uint32_t tag = r.u32()) {
    case kTagDnnc:
      model = read_dnnc(r, source);
      break;
    case kTagDbc: {
      DbcModel m;
      m.norm_order = int(r.u32());
      m.threshold = r.f64();
      if (m.norm_order != 1 && m.norm_order != 2) throw DataError(source + ": bad norm order");
      if (std::isnan(m.threshold)) throw DataError(source + ": NaN threshold");
      model = m;
      break;
    }
    case kTagKmc: {
      KmcModel m;
      const std::uint32_t kappa = bounded(r, "cluster count", source);
      const std::uint32_t dim = bounded(r, "feature count", source);
      m.centroids.assign(kappa, std::vector<double>(dim));
      for (auto& c : m.centroids) {
        for (auto& v : c) v = r.f64();
      }
      m.threshold = r.f64();
      if (std::isnan(m.threshold)) throw DataError(source + ": NaN threshold");
      model = std::move(m);
      break;
    }
    default:
      throw DataError(source + ": unknown model type tag " + std::to_string(tag));
  }
  if (!r.at_end()) throw DataError(source + ": trailing bytes after model");
  return model;
}

Decision decide_any(const AnyModel& model, std::span<const double> first,
                    std::span<const double> second) {
  struct Visitor {
    std::span<const double> a, b;
    Decision operator()(const DetectorModel& m) const { return decide(m, a, b); }
    Decision operator()(const DbcModel& m) const { return decide_dbc(m, a, b); }
    Decision operator()(const KmcModel& m) const { return decide_kmc(m, a, b); }
  };
  return std::visit(Visitor{first, second}, model);
}

std::size_t model_feature_count(const AnyModel& model) {
  struct Visitor {
    std::size_t operator()(const DetectorModel& m) const { return m.num_features(); }
    std::size_t operator()(const DbcModel&) const { return 0; }
    std::size_t operator()(const KmcModel& m) const {
      return m.centroids.empty() ? 0 : m.centroids.front().size();
    }
  };
  return std::visit(Visitor{}, model);
}

}  // namespace spoofdet
