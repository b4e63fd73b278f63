#pragma once

#include <optional>
#include <string>
#include <vector>

#include "serialize.hpp"

namespace updrop {

// Where a command gets its instances: an inline synthetic spec, or a CSV path
// plus the schema file describing its columns.
struct DataSource {
  std::optional<SynthSpec> synthetic;
  std::string csv_path;
  std::string schema_path;

  bool is_synthetic() const { return synthetic.has_value(); }
};

struct TrainRunConfig {
  TrainConfig train;
  DataSource data;
  std::size_t positive_label = 2;
};

struct BenchmarkRunConfig {
  TrainConfig base;  // shared by every method; method is set per run
  std::vector<std::string> dataset_names;
  std::vector<DataSource> dataset_sources;
  std::vector<TrainMethod> methods;
  std::size_t repeats = 10;
  std::size_t positive_label = 2;
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
};

inline SynthSpec synth_spec_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j,
             {"n", "d", "num_labels", "units_per_layer", "k_true", "hidden_layers",
              "cluster_mean_scale", "feature_variance", "drop_rate"},
             ctx);
  SynthSpec spec;
  opt_size(j, "n", spec.n, ctx);
  opt_size(j, "d", spec.d, ctx);
  opt_size(j, "num_labels", spec.num_labels, ctx);
  opt_size(j, "units_per_layer", spec.units_per_layer, ctx);
  opt_size(j, "k_true", spec.k_true, ctx);
  opt_size(j, "hidden_layers", spec.hidden_layers, ctx);
  opt_number(j, "cluster_mean_scale", spec.cluster_mean_scale, ctx);
  opt_number(j, "feature_variance", spec.feature_variance, ctx);
  opt_number(j, "drop_rate", spec.drop_rate, ctx);
  spec.validate();
  return spec;
}

inline Json to_json(const SynthSpec& spec) {
  return Json{{"n", spec.n},
              {"d", spec.d},
              {"num_labels", spec.num_labels},
              {"units_per_layer", spec.units_per_layer},
              {"k_true", spec.k_true},
              {"hidden_layers", spec.hidden_layers},
              {"cluster_mean_scale", spec.cluster_mean_scale},
              {"feature_variance", spec.feature_variance},
              {"drop_rate", spec.drop_rate}};
}

inline CsvSchema schema_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"columns", "label"}, ctx);
  CsvSchema schema;
  const Json& columns = as_array(require_key(j, "columns", ctx), ctx + ".columns");
  for (std::size_t c = 0; c < columns.size(); ++c) {
    std::string cctx = ctx + ".columns[" + std::to_string(c) + "]";
    check_keys(columns[c], {"name", "kind"}, cctx);
    CsvColumn col;
    col.name = as_string(require_key(columns[c], "name", cctx), cctx + ".name");
    std::string kind = as_string(require_key(columns[c], "kind", cctx), cctx + ".kind");
    if (kind == "numeric")
      col.categorical = false;
    else if (kind == "categorical")
      col.categorical = true;
    else
      throw UsageError(cctx + ".kind: must be 'numeric' or 'categorical'");
    schema.columns.push_back(std::move(col));
  }
  schema.label = as_string(require_key(j, "label", ctx), ctx + ".label");
  return schema;
}

inline Json to_json(const CsvSchema& schema) {
  Json columns = Json::array();
  for (const CsvColumn& col : schema.columns)
    columns.push_back(
        Json{{"name", col.name}, {"kind", col.categorical ? "categorical" : "numeric"}});
  return Json{{"columns", columns}, {"label", schema.label}};
}

inline DataSource data_source_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"synthetic", "csv", "schema"}, ctx);
  DataSource src;
  bool has_synth = j.contains("synthetic");
  bool has_csv = j.contains("csv");
  if (has_synth == has_csv)
    throw UsageError(ctx + ": give exactly one of 'synthetic' or 'csv'");
  if (has_synth) {
    src.synthetic = synth_spec_from_json(j.at("synthetic"), ctx + ".synthetic");
  } else {
    src.csv_path = as_string(j.at("csv"), ctx + ".csv");
    src.schema_path = as_string(require_key(j, "schema", ctx), ctx + ".schema");
  }
  return src;
}

namespace confdetail {

// The network block never carries data-derived dimensions; input_dim and
// num_labels are filled in from the dataset right before training.
inline void apply_network_block(const Json& j, NetworkConfig& cfg, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"hidden_layers", "units_per_layer"}, ctx);
  opt_size(j, "hidden_layers", cfg.hidden_layers, ctx);
  opt_size(j, "units_per_layer", cfg.units_per_layer, ctx);
}

inline void apply_train_block(const Json& j, TrainConfig& cfg, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"epochs", "batch_size", "learning_rate", "dropout_rate", "upmm"}, ctx);
  opt_size(j, "epochs", cfg.epochs, ctx);
  opt_size(j, "batch_size", cfg.batch_size, ctx);
  opt_number(j, "learning_rate", cfg.learning_rate, ctx);
  opt_number(j, "dropout_rate", cfg.dropout_rate, ctx);
  if (j.contains("upmm")) cfg.upmm = upmm_params_from_json(j.at("upmm"), ctx + ".upmm");
}

}  // namespace confdetail

inline TrainRunConfig train_config_from_json(const Json& j) {
  using namespace jsondetail;
  const std::string ctx = "config";
  check_keys(j, {"method", "seed", "data", "network", "train", "positive_label"}, ctx);
  TrainRunConfig cfg;
  cfg.train.network = NetworkConfig{1, 2, 25, 2};  // dims overridden by the data
  cfg.train.method = parse_method(as_string(require_key(j, "method", ctx), ctx + ".method"));
  opt_uint(j, "seed", cfg.train.seed, ctx);
  cfg.data = data_source_from_json(require_key(j, "data", ctx), ctx + ".data");
  if (j.contains("network"))
    confdetail::apply_network_block(j.at("network"), cfg.train.network, ctx + ".network");
  if (j.contains("train")) confdetail::apply_train_block(j.at("train"), cfg.train, ctx + ".train");
  opt_size(j, "positive_label", cfg.positive_label, ctx);
  if (cfg.positive_label < 1) throw UsageError(ctx + ".positive_label: must be >= 1");
  return cfg;
}

inline BenchmarkRunConfig benchmark_config_from_json(const Json& j) {
  using namespace jsondetail;
  const std::string ctx = "config";
  check_keys(j,
             {"seed", "repeats", "methods", "positive_label", "train_fraction", "datasets",
              "network", "train"},
             ctx);
  BenchmarkRunConfig cfg;
  cfg.base.network = NetworkConfig{1, 2, 25, 2};
  opt_uint(j, "seed", cfg.seed, ctx);
  opt_size(j, "repeats", cfg.repeats, ctx);
  opt_size(j, "positive_label", cfg.positive_label, ctx);
  opt_number(j, "train_fraction", cfg.train_fraction, ctx);
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    throw UsageError(ctx + ".train_fraction: must lie in (0, 1)");

  const Json& methods = as_array(require_key(j, "methods", ctx), ctx + ".methods");
  if (methods.empty()) throw UsageError(ctx + ".methods: must name at least one method");
  for (const Json& m : methods)
    cfg.methods.push_back(parse_method(as_string(m, ctx + ".methods element")));

  const Json& datasets = as_array(require_key(j, "datasets", ctx), ctx + ".datasets");
  if (datasets.empty()) throw UsageError(ctx + ".datasets: must name at least one dataset");
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    std::string dctx = ctx + ".datasets[" + std::to_string(d) + "]";
    check_object(datasets[d], dctx);
    Json entry = datasets[d];
    std::string name = as_string(require_key(entry, "name", dctx), dctx + ".name");
    entry.erase("name");
    cfg.dataset_names.push_back(name);
    cfg.dataset_sources.push_back(data_source_from_json(entry, dctx));
  }

  if (j.contains("network"))
    confdetail::apply_network_block(j.at("network"), cfg.base.network, ctx + ".network");
  // The shared train block carries no per-method keys; "method" in particular
  // is rejected by the key check inside.
  if (j.contains("train")) confdetail::apply_train_block(j.at("train"), cfg.base, ctx + ".train");
  return cfg;
}

}  // namespace updrop
