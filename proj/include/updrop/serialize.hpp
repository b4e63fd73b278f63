#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "trainer.hpp"
#include "upmm.hpp"

namespace updrop {

using Json = nlohmann::json;

// ----- files -----

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

inline Json parse_json_file(const std::string& path) {
  std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ----- typed extraction; every failure names the key and its context -----

namespace jsondetail {

inline void check_object(const Json& j, const std::string& ctx) {
  if (!j.is_object()) throw UsageError(ctx + ": expected a JSON object");
}

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                       const std::string& ctx) {
  check_object(j, ctx);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) throw UsageError(ctx + ": unknown key '" + item.key() + "'");
  }
}

inline const Json& require_key(const Json& j, const char* key, const std::string& ctx) {
  check_object(j, ctx);
  auto it = j.find(key);
  if (it == j.end()) throw UsageError(ctx + ": missing key '" + std::string(key) + "'");
  return *it;
}

inline double as_number(const Json& j, const std::string& ctx) {
  if (!j.is_number()) throw UsageError(ctx + ": expected a number");
  return j.get<double>();
}

inline std::uint64_t as_uint(const Json& j, const std::string& ctx) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                 j.get<std::int64_t>() < 0))
    throw UsageError(ctx + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

inline bool as_bool(const Json& j, const std::string& ctx) {
  if (!j.is_boolean()) throw UsageError(ctx + ": expected true or false");
  return j.get<bool>();
}

inline std::string as_string(const Json& j, const std::string& ctx) {
  if (!j.is_string()) throw UsageError(ctx + ": expected a string");
  return j.get<std::string>();
}

inline const Json& as_array(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw UsageError(ctx + ": expected an array");
  return j;
}

inline std::vector<double> as_double_vector(const Json& j, const std::string& ctx) {
  as_array(j, ctx);
  std::vector<double> out;
  out.reserve(j.size());
  for (const Json& v : j) out.push_back(as_number(v, ctx + " element"));
  return out;
}

// Optional-field helpers: apply the value when present, else keep the default.
inline void opt_number(const Json& j, const char* key, double& into, const std::string& ctx) {
  if (j.contains(key)) into = as_number(j.at(key), ctx + "." + key);
}
inline void opt_uint(const Json& j, const char* key, std::uint64_t& into, const std::string& ctx) {
  if (j.contains(key)) into = as_uint(j.at(key), ctx + "." + key);
}
inline void opt_size(const Json& j, const char* key, std::size_t& into, const std::string& ctx) {
  if (j.contains(key)) into = std::size_t(as_uint(j.at(key), ctx + "." + key));
}
inline void opt_bool(const Json& j, const char* key, bool& into, const std::string& ctx) {
  if (j.contains(key)) into = as_bool(j.at(key), ctx + "." + key);
}

}  // namespace jsondetail

// ----- network weights -----

inline Json to_json(const NetworkConfig& cfg) {
  return Json{{"input_dim", cfg.input_dim},
              {"hidden_layers", cfg.hidden_layers},
              {"units_per_layer", cfg.units_per_layer},
              {"num_labels", cfg.num_labels}};
}

inline NetworkConfig network_config_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"input_dim", "hidden_layers", "units_per_layer", "num_labels"}, ctx);
  NetworkConfig cfg;
  cfg.input_dim = std::size_t(as_uint(require_key(j, "input_dim", ctx), ctx + ".input_dim"));
  cfg.hidden_layers =
      std::size_t(as_uint(require_key(j, "hidden_layers", ctx), ctx + ".hidden_layers"));
  cfg.units_per_layer =
      std::size_t(as_uint(require_key(j, "units_per_layer", ctx), ctx + ".units_per_layer"));
  cfg.num_labels = std::size_t(as_uint(require_key(j, "num_labels", ctx), ctx + ".num_labels"));
  cfg.validate();
  return cfg;
}

inline Json to_json(const WeightSet& ws) {
  Json layers = Json::array();
  for (const LayerWeights& lw : ws.layers)
    layers.push_back(Json{{"weights", lw.w}, {"bias", lw.b}});
  return Json{{"config", to_json(ws.config)}, {"layers", layers}};
}

inline WeightSet weight_set_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"config", "layers"}, ctx);
  WeightSet ws;
  ws.config = network_config_from_json(require_key(j, "config", ctx), ctx + ".config");
  const Json& layers = as_array(require_key(j, "layers", ctx), ctx + ".layers");
  const auto& cfg = ws.config;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::string lctx = ctx + ".layers[" + std::to_string(l) + "]";
    check_keys(layers[l], {"weights", "bias"}, lctx);
    LayerWeights lw;
    lw.fan_in = l == 0 ? cfg.input_dim : cfg.units_per_layer;
    lw.fan_out = l < cfg.hidden_layers ? cfg.units_per_layer : cfg.num_labels;
    lw.w = as_double_vector(require_key(layers[l], "weights", lctx), lctx + ".weights");
    lw.b = as_double_vector(require_key(layers[l], "bias", lctx), lctx + ".bias");
    if (lw.w.size() != lw.fan_in * lw.fan_out || lw.b.size() != lw.fan_out)
      throw StructureError(lctx + ": weight shapes do not match the network config");
    ws.layers.push_back(std::move(lw));
  }
  ws.validate();
  return ws;
}

// ----- mixture parameters and architectures -----

inline Json to_json(const UpmmParams& p) {
  return Json{{"alpha", p.alpha},
              {"beta1", p.beta1},
              {"beta2", p.beta2},
              {"theta", p.theta},
              {"gamma1", p.gamma1},
              {"gamma2", p.gamma2},
              {"new_arch_samples", p.new_arch_samples},
              {"sweeps_per_update", p.sweeps_per_update},
              {"k_max", p.k_max},
              {"regularized", p.regularized},
              {"assignment", p.sample_assignment ? "sample" : "argmax"}};
}

inline UpmmParams upmm_params_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j,
             {"alpha", "beta1", "beta2", "theta", "gamma1", "gamma2", "new_arch_samples",
              "sweeps_per_update", "k_max", "regularized", "assignment"},
             ctx);
  UpmmParams p;
  opt_number(j, "alpha", p.alpha, ctx);
  opt_number(j, "beta1", p.beta1, ctx);
  opt_number(j, "beta2", p.beta2, ctx);
  opt_number(j, "theta", p.theta, ctx);
  opt_number(j, "gamma1", p.gamma1, ctx);
  opt_number(j, "gamma2", p.gamma2, ctx);
  opt_size(j, "new_arch_samples", p.new_arch_samples, ctx);
  opt_size(j, "sweeps_per_update", p.sweeps_per_update, ctx);
  opt_size(j, "k_max", p.k_max, ctx);
  opt_bool(j, "regularized", p.regularized, ctx);
  if (j.contains("assignment")) {
    std::string mode = as_string(j.at("assignment"), ctx + ".assignment");
    if (mode == "argmax")
      p.sample_assignment = false;
    else if (mode == "sample")
      p.sample_assignment = true;
    else
      throw UsageError(ctx + ".assignment: must be 'argmax' or 'sample'");
  }
  p.validate();
  return p;
}

inline Json to_json(const ArchitectureState& state) {
  Json mask = Json::array();
  for (std::uint8_t bit : state.mask) mask.push_back(unsigned(bit));
  return Json{{"mask", mask},
              {"member_count", state.member_count},
              {"feature_sum", state.feature_sum}};
}

// Member index lists are not persisted; the anchor mean is reconstructed from
// the feature sum so prediction-side similarity works.
inline ArchitectureState architecture_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"mask", "member_count", "feature_sum"}, ctx);
  ArchitectureState state;
  const Json& mask = as_array(require_key(j, "mask", ctx), ctx + ".mask");
  for (const Json& bit : mask) {
    std::uint64_t v = as_uint(bit, ctx + ".mask element");
    if (v > 1) throw UsageError(ctx + ".mask: bits must be 0 or 1");
    state.mask.push_back(std::uint8_t(v));
  }
  state.member_count =
      std::size_t(as_uint(require_key(j, "member_count", ctx), ctx + ".member_count"));
  state.feature_sum =
      as_double_vector(require_key(j, "feature_sum", ctx), ctx + ".feature_sum");
  if (state.member_count > 0) {
    state.anchor_mean = state.feature_sum;
    for (double& v : state.anchor_mean) v /= double(state.member_count);
  }
  return state;
}

inline Json to_json(const UpmmModel& model) {
  Json archs = Json::array();
  for (const ArchitectureState& state : model.architectures) archs.push_back(to_json(state));
  return Json{{"params", to_json(model.params)},
              {"weights", to_json(model.weights)},
              {"architectures", archs}};
}

inline UpmmModel model_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"params", "weights", "architectures"}, ctx);
  UpmmModel model;
  model.params = upmm_params_from_json(require_key(j, "params", ctx), ctx + ".params");
  model.weights = weight_set_from_json(require_key(j, "weights", ctx), ctx + ".weights");
  model.config = model.weights.config;
  const Json& archs = as_array(require_key(j, "architectures", ctx), ctx + ".architectures");
  std::size_t units = model.config.total_hidden_units();
  for (std::size_t k = 0; k < archs.size(); ++k) {
    std::string actx = ctx + ".architectures[" + std::to_string(k) + "]";
    ArchitectureState state = architecture_from_json(archs[k], actx);
    if (state.mask.size() != units)
      throw StructureError(actx + ": mask length does not match the network");
    if (state.feature_sum.size() != model.config.input_dim)
      throw StructureError(actx + ": feature_sum length does not match the input width");
    model.architectures.push_back(std::move(state));
  }
  return model;
}

// ----- the trained-model artifact: weights plus the feature/label pipeline -----

struct Pipeline {
  Standardizer standardizer;
  DataEncoding encoding;
  std::string label_column = "label";
};

struct ModelFile {
  TrainMethod method = TrainMethod::dnn;
  WeightSet weights;                      // baselines; for coda see model.weights
  UpmmModel model;                        // coda only
  Pipeline pipeline;

  bool is_coda() const { return method == TrainMethod::coda; }
};

inline Json to_json(const Pipeline& p) {
  Json features = Json::array();
  for (const ColumnEncoding& col : p.encoding.features)
    features.push_back(Json{{"name", col.name},
                            {"categorical", col.categorical},
                            {"categories", col.categories}});
  return Json{{"mean", p.standardizer.mean},
              {"scale", p.standardizer.scale},
              {"features", features},
              {"labels", p.encoding.labels},
              {"label_column", p.label_column}};
}

inline Pipeline pipeline_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  check_keys(j, {"mean", "scale", "features", "labels", "label_column"}, ctx);
  Pipeline p;
  p.standardizer.mean = as_double_vector(require_key(j, "mean", ctx), ctx + ".mean");
  p.standardizer.scale = as_double_vector(require_key(j, "scale", ctx), ctx + ".scale");
  const Json& features = as_array(require_key(j, "features", ctx), ctx + ".features");
  for (std::size_t f = 0; f < features.size(); ++f) {
    std::string fctx = ctx + ".features[" + std::to_string(f) + "]";
    check_keys(features[f], {"name", "categorical", "categories"}, fctx);
    ColumnEncoding col;
    col.name = as_string(require_key(features[f], "name", fctx), fctx + ".name");
    col.categorical = as_bool(require_key(features[f], "categorical", fctx), fctx + ".categorical");
    for (const Json& c : as_array(require_key(features[f], "categories", fctx), fctx))
      col.categories.push_back(as_string(c, fctx + ".categories element"));
    p.encoding.features.push_back(std::move(col));
  }
  for (const Json& l : as_array(require_key(j, "labels", ctx), ctx + ".labels"))
    p.encoding.labels.push_back(as_string(l, ctx + ".labels element"));
  p.label_column = as_string(require_key(j, "label_column", ctx), ctx + ".label_column");
  return p;
}

inline Json to_json(const ModelFile& mf) {
  Json j{{"method", method_name(mf.method)}, {"pipeline", to_json(mf.pipeline)}};
  if (mf.is_coda()) {
    Json model = to_json(mf.model);
    j["params"] = model["params"];
    j["weights"] = model["weights"];
    j["architectures"] = model["architectures"];
  } else {
    j["weights"] = to_json(mf.weights);
  }
  return j;
}

inline ModelFile model_file_from_json(const Json& j, const std::string& ctx) {
  using namespace jsondetail;
  ModelFile mf;
  mf.method = parse_method(as_string(require_key(j, "method", ctx), ctx + ".method"));
  mf.pipeline = pipeline_from_json(require_key(j, "pipeline", ctx), ctx + ".pipeline");
  if (mf.method == TrainMethod::coda) {
    check_keys(j, {"method", "pipeline", "params", "weights", "architectures"}, ctx);
    Json inner{{"params", require_key(j, "params", ctx)},
               {"weights", require_key(j, "weights", ctx)},
               {"architectures", require_key(j, "architectures", ctx)}};
    mf.model = model_from_json(inner, ctx);
    mf.weights = mf.model.weights;
  } else {
    check_keys(j, {"method", "pipeline", "weights"}, ctx);
    mf.weights = weight_set_from_json(require_key(j, "weights", ctx), ctx + ".weights");
  }
  return mf;
}

// Canonical artifact text: sorted keys (map-backed), 2-space indent, shortest
// round-trip numbers, trailing newline. Byte-stable across reruns.
inline std::string dump_artifact(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace updrop
