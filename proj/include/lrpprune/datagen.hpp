#pragma once

// Deterministic 2-D toy datasets: two moons, concentric circles, and four
// Gaussian blobs. Every draw is class-balanced and a pure function of its
// seed.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lrpprune/csv.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/rng.hpp"
#include "lrpprune/types.hpp"

namespace lrpprune {

enum class DatasetKind { moon, circle, multi };

inline std::string_view to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::moon: return "moon";
    case DatasetKind::circle: return "circle";
    case DatasetKind::multi: return "multi";
  }
  return "?";
}

inline DatasetKind parse_dataset_kind(std::string_view s) {
  if (s == "moon" || s == "moons") return DatasetKind::moon;
  if (s == "circle" || s == "circles") return DatasetKind::circle;
  if (s == "multi" || s == "mult" || s == "blobs") return DatasetKind::multi;
  throw ConfigError("unknown dataset kind '" + std::string(s) + "'");
}

inline int num_classes(DatasetKind k) { return k == DatasetKind::multi ? 4 : 2; }

/// Generator jitter: coordinate noise for moons/circles, blob std for multi.
inline double default_jitter(DatasetKind k) { return k == DatasetKind::multi ? 0.5 : 0.1; }

/// Inner/outer radius ratio of the circles generator.
inline constexpr double kCircleFactor = 0.3;

/// Blob centers of the multi generator, one per class. Classes 0 and 1
/// overlap (about 8% pairwise Bayes error at std 0.5); classes 2 and 3 sit far
/// from everything else.
inline constexpr std::array<std::array<double, 2>, 4> kBlobCenters{{
    {-0.7, 0.0}, {0.7, 0.0}, {-3.0, 3.0}, {3.0, 3.0}}};

struct Provenance {
  enum class Kind { train, reference, test };
  Kind kind = Kind::train;
  std::size_t n_per_class = 0;  // reference(n) / test
  double noise_sigma = 0.0;     // test(sigma)

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Dataset {
  Matrix inputs;            // rows are 2-vectors
  std::vector<int> labels;  // class indices in [0, num_classes)
  int num_classes = 0;
  Provenance provenance;

  std::size_t size() const { return labels.size(); }
  Index dim() const { return inputs.cols(); }

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.inputs.resize(static_cast<Index>(rows.size()), inputs.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.inputs.row(static_cast<Index>(i)) = inputs.row(rows[i]);
      out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
    }
    out.num_classes = num_classes;
    out.provenance = provenance;
    return out;
  }

  /// Throws unless |inputs| = |labels|, labels < k and every class is present.
  void validate() const {
    if (static_cast<std::size_t>(inputs.rows()) != labels.size())
      throw ShapeError("dataset has " + std::to_string(inputs.rows()) + " inputs but " +
                       std::to_string(labels.size()) + " labels");
    if (num_classes < 1) throw ConfigError("dataset needs at least one class");
    std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
    for (int y : labels) {
      if (y < 0 || y >= num_classes)
        throw ConfigError("label " + std::to_string(y) + " outside [0, " +
                          std::to_string(num_classes) + ")");
      seen[static_cast<std::size_t>(y)] = true;
    }
    if (!labels.empty())
      for (int c = 0; c < num_classes; ++c)
        if (!seen[static_cast<std::size_t>(c)])
          throw ConfigError("class " + std::to_string(c) + " missing from dataset");
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.num_classes == b.num_classes && a.labels == b.labels && a.provenance == b.provenance &&
           a.inputs.rows() == b.inputs.rows() && a.inputs.cols() == b.inputs.cols() &&
           a.inputs == b.inputs;
  }
};

struct DataConfig {
  DatasetKind kind = DatasetKind::moon;
  std::size_t samples_per_class = 1000;
  double noise_sigma = 0.1;  // generator jitter, see default_jitter()
  std::uint64_t seed = 0;

  static DataConfig defaults(DatasetKind kind, std::size_t per_class = 1000,
                             std::uint64_t seed = 0) {
    return {kind, per_class, default_jitter(kind), seed};
  }

  void validate() const {
    if (samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
      throw ConfigError("generator noise must be a finite nonnegative number");
  }
};

namespace detail {

/// Point i of n for one class. Moons and circles place their points at
/// evenly spaced angles (half-circle endpoints included, full circle
/// endpoint excluded) before jitter, like the scikit-learn generators.
inline std::array<double, 2> sample_point(DatasetKind kind, int label, std::size_t i, std::size_t n, double jitter,
                                          Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<double, 2> p{};
  switch (kind) {
    case DatasetKind::moon: {
      const double t = n > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
      p = label == 0 ? std::array<double, 2>{std::cos(t), std::sin(t)}
                     : std::array<double, 2>{1.0 - std::cos(t), 0.5 - std::sin(t)};
      break;
    }
    case DatasetKind::circle: {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      const double r = label == 0 ? 1.0 : kCircleFactor;
      p = {r * std::cos(t), r * std::sin(t)};
      break;
    }
    case DatasetKind::multi:
      p = kBlobCenters[static_cast<std::size_t>(label)];
      break;
  }
  const double nx = gauss(rng);
  const double ny = gauss(rng);
  p[0] += jitter * nx;
  p[1] += jitter * ny;
  return p;
}

}  // namespace detail

/// Draws cfg.samples_per_class points per class, grouped by class.
inline Dataset generate(const DataConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int k = num_classes(cfg.kind);
  const auto n = cfg.samples_per_class;
  Dataset ds;
  ds.num_classes = k;
  ds.inputs.resize(static_cast<Index>(n) * k, 2);
  ds.labels.reserve(n * static_cast<std::size_t>(k));
  Index row = 0;
  for (int c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i, ++row) {
      const auto p = detail::sample_point(cfg.kind, c, i, n, cfg.noise_sigma, rng);
      ds.inputs(row, 0) = p[0];
      ds.inputs(row, 1) = p[1];
      ds.labels.push_back(c);
    }
  }
  return ds;
}

/// Fresh class-balanced draw used to compute pruning criteria.
inline Dataset draw_reference(const DataConfig& cfg, std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("reference draw needs n_per_class >= 1");
  DataConfig c = cfg;
  c.samples_per_class = n_per_class;
  c.seed = seed;
  Dataset ds = generate(c);
  ds.provenance = {Provenance::Kind::reference, n_per_class, 0.0};
  return ds;
}

/// Fresh draw with i.i.d. N(0, sigma^2) added to every coordinate afterwards.
inline Dataset noisy_test(const DataConfig& cfg, std::size_t n_per_class, double sigma,
                          std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ConfigError("test noise sigma must be a finite nonnegative number");
  DataConfig c = cfg;
  c.samples_per_class = n_per_class;
  c.seed = seed;
  Dataset ds = generate(c);
  if (sigma > 0.0) {
    Rng rng(derive_seed(seed, {tag(SeedPurpose::noise)}));
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Index r = 0; r < ds.inputs.rows(); ++r)
      for (Index j = 0; j < ds.inputs.cols(); ++j) ds.inputs(r, j) += gauss(rng);
  }
  ds.provenance = {Provenance::Kind::test, n_per_class, sigma};
  return ds;
}

/// CSV with header x1,x2,label and 17 significant digits.
inline void write_csv(std::ostream& out, const Dataset& ds) {
  out << "x1,x2,label\n";
  for (Index r = 0; r < ds.inputs.rows(); ++r)
    out << csv::real17(ds.inputs(r, 0)) << ',' << csv::real17(ds.inputs(r, 1)) << ','
        << ds.labels[static_cast<std::size_t>(r)] << '\n';
}

inline void write_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  write_csv(out, ds);
}

/// Reads x1,x2,label. The class count is max(label)+1 unless given.
inline Dataset read_csv(std::istream& in, int num_classes_hint = 0) {
  const auto table = csv::read_table(in);
  const auto cx = table.column("x1"), cy = table.column("x2"), cl = table.column("label");
  Dataset ds;
  ds.inputs.resize(static_cast<Index>(table.rows.size()), 2);
  int max_label = -1;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    ds.inputs(static_cast<Index>(i), 0) = csv::parse_real(r[cx]);
    ds.inputs(static_cast<Index>(i), 1) = csv::parse_real(r[cy]);
    ds.labels.push_back(csv::parse_int<int>(r[cl]));
    max_label = std::max(max_label, ds.labels.back());
  }
  ds.num_classes = num_classes_hint > 0 ? num_classes_hint : max_label + 1;
  ds.validate();
  return ds;
}

inline Dataset read_csv(const std::string& path, int num_classes_hint = 0) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return read_csv(in, num_classes_hint);
}

}  // namespace lrpprune
