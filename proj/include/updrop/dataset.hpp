#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "network.hpp"
#include "numeric.hpp"
#include "rng.hpp"

namespace updrop {

// Feature matrix with integer labels in [1:num_labels]. truth, when present,
// records the generating architecture id of each row (synthetic data only).
struct Dataset {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t num_labels = 0;
  std::vector<double> x;             // row-major, n * d
  std::vector<std::size_t> y;        // 1-based labels
  std::vector<std::size_t> truth;    // empty, or per-row cluster id (1-based)

  std::span<const double> row(std::size_t i) const { return {x.data() + i * d, d}; }

  void validate() const {
    if (x.size() != n * d || y.size() != n)
      throw StructureError("dataset buffers do not match n and d");
    if (!truth.empty() && truth.size() != n)
      throw StructureError("truth ids present but not one per row");
    for (std::size_t v : y)
      if (v < 1 || v > num_labels) throw StructureError("label out of range [1:num_labels]");
    for (double v : x)
      if (!std::isfinite(v)) throw StructureError("non-finite feature value");
  }
};

// Shape of the synthetic generator: a K_true-component Gaussian mixture pushed
// through one random network under K_true distinct half-dropout masks.
struct SynthSpec {
  std::size_t n = 6000;
  std::size_t d = 50;
  std::size_t num_labels = 2;
  std::size_t units_per_layer = 25;
  std::size_t k_true = 3;
  std::size_t hidden_layers = 2;
  double cluster_mean_scale = 5.0;
  double feature_variance = 50.0;
  double drop_rate = 0.5;

  std::size_t per_cluster() const { return k_true == 0 ? 0 : n / k_true; }

  // Shared per-coordinate mean of cluster k (1-based): 0, +s, -s, +2s, -2s, ...
  double cluster_mean(std::size_t k) const {
    if (k == 1) return 0.0;
    double step = double((k) / 2) * cluster_mean_scale;
    return k % 2 == 0 ? step : -step;
  }

  void validate() const {
    if (n < 1) throw UsageError("synthetic spec: n must be >= 1");
    if (k_true < 1) throw UsageError("synthetic spec: k_true must be >= 1");
    if (n % k_true != 0) throw UsageError("synthetic spec: n must be divisible by k_true");
    if (!(drop_rate > 0.0 && drop_rate < 1.0))
      throw UsageError("synthetic spec: drop_rate must lie in (0, 1)");
    if (!(feature_variance > 0.0)) throw UsageError("synthetic spec: feature_variance must be > 0");
    NetworkConfig{d, hidden_layers, units_per_layer, num_labels}.validate();
  }
};

struct SynthOutput {
  Dataset data;
  WeightSet generator;
  std::vector<UnitMask> masks;  // one per true cluster
};

// Drops exactly drop_count distinct units in [0, u) via a partial shuffle.
inline UnitMask exact_drop_layer_mask(std::size_t u, std::size_t drop_count,
                                      std::mt19937_64& rng) {
  std::vector<std::size_t> idx(u);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t t = 0; t < drop_count; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, u - 1);
    std::swap(idx[t], idx[pick(rng)]);
  }
  UnitMask mask(u, 1);
  for (std::size_t t = 0; t < drop_count; ++t) mask[idx[t]] = 0;
  return mask;
}

// Generator weights are N(0,1) with zero biases; each cluster's mask drops
// exactly floor(drop_rate * U) units per hidden layer; features are Gaussian
// around the cluster mean; labels are the argmax output under that mask.
inline SynthOutput generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  SynthOutput out;
  NetworkConfig cfg{spec.d, spec.hidden_layers, spec.units_per_layer, spec.num_labels};

  std::mt19937_64 weight_rng = make_rng(seed, {0});
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  out.generator.config = cfg;
  for (std::size_t l = 0; l <= cfg.hidden_layers; ++l) {
    std::size_t fan_in = l == 0 ? cfg.input_dim : cfg.units_per_layer;
    std::size_t fan_out = l == cfg.hidden_layers ? cfg.num_labels : cfg.units_per_layer;
    LayerWeights lw = zero_layer(fan_in, fan_out);
    for (double& v : lw.w) v = unit_normal(weight_rng);
    out.generator.layers.push_back(std::move(lw));
  }

  std::mt19937_64 mask_rng = make_rng(seed, {1});
  std::size_t drop_count = std::size_t(spec.drop_rate * double(spec.units_per_layer));
  for (std::size_t k = 0; k < spec.k_true; ++k) {
    UnitMask mask;
    mask.reserve(cfg.total_hidden_units());
    for (std::size_t h = 0; h < spec.hidden_layers; ++h) {
      UnitMask layer = exact_drop_layer_mask(spec.units_per_layer, drop_count, mask_rng);
      mask.insert(mask.end(), layer.begin(), layer.end());
    }
    out.masks.push_back(std::move(mask));
  }

  std::mt19937_64 feature_rng = make_rng(seed, {2});
  double sigma = std::sqrt(spec.feature_variance);
  Dataset& data = out.data;
  data.n = spec.n;
  data.d = spec.d;
  data.num_labels = spec.num_labels;
  data.x.resize(spec.n * spec.d);
  data.y.resize(spec.n);
  data.truth.resize(spec.n);
  std::size_t per = spec.per_cluster();
  for (std::size_t k = 1; k <= spec.k_true; ++k) {
    double mean = spec.cluster_mean(k);
    for (std::size_t i = 0; i < per; ++i) {
      std::size_t r = (k - 1) * per + i;
      double* row = data.x.data() + r * spec.d;
      for (std::size_t c = 0; c < spec.d; ++c) row[c] = mean + sigma * unit_normal(feature_rng);
      std::vector<double> yhat = forward_probs(data.row(r), out.generator, out.masks[k - 1]);
      std::size_t best = 0;
      for (std::size_t l = 1; l < yhat.size(); ++l)
        if (yhat[l] > yhat[best]) best = l;
      data.y[r] = best + 1;
      data.truth[r] = k;
    }
  }
  return out;
}

// ----- CSV ingestion -----

struct CsvColumn {
  std::string name;
  bool categorical = false;
};

struct CsvSchema {
  std::vector<CsvColumn> columns;  // feature columns, in desired order
  std::string label;               // name of the label column
};

// How raw columns were turned into the numeric matrix: category lists are in
// first-appearance order, and labels map to ids by first appearance as well.
struct ColumnEncoding {
  std::string name;
  bool categorical = false;
  std::vector<std::string> categories;  // empty for numeric columns
};

struct DataEncoding {
  std::vector<ColumnEncoding> features;
  std::vector<std::string> labels;  // label value of id 1, 2, ...

  std::size_t width() const {
    std::size_t w = 0;
    for (const auto& f : features) w += f.categorical ? f.categories.size() : 1;
    return w;
  }
};

struct LoadedCsv {
  Dataset data;
  DataEncoding encoding;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  return cells;
}

inline double parse_cell_double(const std::string& cell, std::size_t row1,
                                const std::string& column) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && *(end - 1) == ' ') --end;
  double value = 0.0;
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end || begin == end)
    throw ParseError("row " + std::to_string(row1) + ", column '" + column +
                     "': cannot parse '" + cell + "' as a number");
  return value;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace detail

// Loads a header CSV through a schema. When `fixed` is given, its category and
// label lists are authoritative and unseen values are an error; otherwise both
// are collected in first-appearance order. The label column may be absent from
// the file only when require_label is false.
inline LoadedCsv load_csv(const std::string& path, const CsvSchema& schema,
                          const DataEncoding* fixed = nullptr, bool require_label = true) {
  if (schema.columns.empty()) throw UsageError("schema declares no feature columns");
  std::vector<std::string> lines = detail::read_lines(path);
  if (lines.empty()) throw ParseError(path + ": missing header row");

  std::vector<std::string> header = detail::split_csv_line(lines[0]);
  auto column_index = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };

  std::vector<std::size_t> feature_pos;
  for (const CsvColumn& col : schema.columns) {
    auto idx = column_index(col.name);
    if (!idx) throw ParseError(path + ": schema column '" + col.name + "' not found in header");
    feature_pos.push_back(*idx);
  }
  std::optional<std::size_t> label_pos = column_index(schema.label);
  if (require_label && !label_pos)
    throw ParseError(path + ": label column '" + schema.label + "' not found in header");

  LoadedCsv out;
  DataEncoding& enc = out.encoding;
  if (fixed) {
    enc = *fixed;
  } else {
    for (const CsvColumn& col : schema.columns)
      enc.features.push_back(ColumnEncoding{col.name, col.categorical, {}});
  }

  std::size_t rows = lines.size() - 1;
  std::vector<std::vector<std::string>> cells(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    cells[r] = detail::split_csv_line(lines[r + 1]);
    if (cells[r].size() != header.size())
      throw ParseError("row " + std::to_string(r + 1) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells[r].size()));
  }

  auto intern = [](std::vector<std::string>& seen, const std::string& value, bool frozen,
                   const std::string& what, std::size_t row1) -> std::size_t {
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] == value) return i;
    if (frozen)
      throw ParseError("row " + std::to_string(row1) + ": unseen " + what + " '" + value + "'");
    seen.push_back(value);
    return seen.size() - 1;
  };

  // First pass: collect categories and label values (or verify against fixed).
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < schema.columns.size(); ++f) {
      if (!enc.features[f].categorical) continue;
      const std::string& v = cells[r][feature_pos[f]];
      if (v.empty())
        throw ParseError("row " + std::to_string(r + 1) + ", column '" +
                         schema.columns[f].name + "': missing value");
      intern(enc.features[f].categories, v, fixed != nullptr,
             "category in column '" + schema.columns[f].name + "'", r + 1);
    }
    if (label_pos) {
      const std::string& v = cells[r][*label_pos];
      if (v.empty()) throw ParseError("row " + std::to_string(r + 1) + ": missing label");
      intern(enc.labels, v, fixed != nullptr, "label", r + 1);
    }
  }

  Dataset& data = out.data;
  data.n = rows;
  data.d = enc.width();
  data.num_labels = enc.labels.size();
  data.x.assign(rows * data.d, 0.0);
  if (label_pos) data.y.resize(rows);

  for (std::size_t r = 0; r < rows; ++r) {
    double* rowp = data.x.data() + r * data.d;
    std::size_t offset = 0;
    for (std::size_t f = 0; f < schema.columns.size(); ++f) {
      const std::string& v = cells[r][feature_pos[f]];
      const ColumnEncoding& ce = enc.features[f];
      if (ce.categorical) {
        std::size_t cat = intern(enc.features[f].categories, v, true, "category", r + 1);
        rowp[offset + cat] = 1.0;
        offset += ce.categories.size();
      } else {
        if (v.empty())
          throw ParseError("row " + std::to_string(r + 1) + ", column '" + ce.name +
                           "': missing value");
        rowp[offset] = detail::parse_cell_double(v, r + 1, ce.name);
        offset += 1;
      }
    }
    if (label_pos)
      data.y[r] = 1 + intern(enc.labels, cells[r][*label_pos], true, "label", r + 1);
  }
  if (!label_pos) {
    data.num_labels = fixed ? fixed->labels.size() : 0;
  }
  return out;
}

// Writes features as x1..xD plus a final integer label column.
inline void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw IoError("cannot write file: " + path);
  for (std::size_t c = 0; c < data.d; ++c) outf << 'x' << (c + 1) << ',';
  outf << "label\n";
  for (std::size_t r = 0; r < data.n; ++r) {
    std::span<const double> row = data.row(r);
    for (std::size_t c = 0; c < data.d; ++c) outf << format_double(row[c]) << ',';
    outf << data.y[r] << '\n';
  }
  if (!outf) throw IoError("write failed: " + path);
}

// ----- Standardization, splitting, batching -----

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // population std; 1 for zero-variance columns
};

inline Standardizer fit_standardizer(const Dataset& train) {
  if (train.n == 0) throw UsageError("cannot standardize an empty dataset");
  Standardizer s;
  s.mean.assign(train.d, 0.0);
  s.scale.assign(train.d, 1.0);
  for (std::size_t r = 0; r < train.n; ++r) {
    std::span<const double> row = train.row(r);
    for (std::size_t c = 0; c < train.d; ++c) s.mean[c] += row[c];
  }
  for (double& m : s.mean) m /= double(train.n);
  std::vector<double> var(train.d, 0.0);
  for (std::size_t r = 0; r < train.n; ++r) {
    std::span<const double> row = train.row(r);
    for (std::size_t c = 0; c < train.d; ++c) {
      double dev = row[c] - s.mean[c];
      var[c] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < train.d; ++c) {
    double v = var[c] / double(train.n);
    s.scale[c] = v > 0.0 ? std::sqrt(v) : 1.0;
  }
  return s;
}

inline void apply_standardizer(const Standardizer& s, Dataset& data) {
  if (s.mean.size() != data.d) throw StructureError("standardizer width does not match dataset");
  for (std::size_t r = 0; r < data.n; ++r) {
    double* row = data.x.data() + r * data.d;
    for (std::size_t c = 0; c < data.d; ++c) row[c] = (row[c] - s.mean[c]) / s.scale[c];
  }
}

// Fits on train, transforms train and every dataset in others in place.
inline Standardizer standardize(Dataset& train, const std::vector<Dataset*>& others = {}) {
  Standardizer s = fit_standardizer(train);
  apply_standardizer(s, train);
  for (Dataset* d : others) apply_standardizer(s, *d);
  return s;
}

inline Dataset take_rows(const Dataset& src, std::span<const std::size_t> rows) {
  Dataset out;
  out.n = rows.size();
  out.d = src.d;
  out.num_labels = src.num_labels;
  out.x.reserve(out.n * out.d);
  out.y.reserve(out.n);
  for (std::size_t i : rows) {
    std::span<const double> row = src.row(i);
    out.x.insert(out.x.end(), row.begin(), row.end());
    out.y.push_back(src.y[i]);
    if (!src.truth.empty()) out.truth.push_back(src.truth[i]);
  }
  return out;
}

// Uniform shuffle, then the first ceil(fraction * n) rows become train.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double fraction,
                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("split fraction must lie in (0, 1)");
  std::vector<std::size_t> idx(data.n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng = make_rng(seed, {0});
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t n_train = std::size_t(std::ceil(fraction * double(data.n)));
  std::span<const std::size_t> all(idx);
  return {take_rows(data, all.subspan(0, n_train)), take_rows(data, all.subspan(n_train))};
}

// Epoch-level shuffle into contiguous chunks; the last chunk may be short.
inline std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                                     std::mt19937_64& rng) {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::size_t stop = std::min(n, start + batch_size);
    out.emplace_back(idx.begin() + long(start), idx.begin() + long(stop));
  }
  return out;
}

inline std::vector<std::vector<std::size_t>> batches(const Dataset& data, std::size_t batch_size,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed, {0});
  return batches(data.n, batch_size, rng);
}

}  // namespace updrop
