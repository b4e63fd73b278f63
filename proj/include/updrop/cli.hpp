#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "serialize.hpp"

namespace updrop {

namespace clidetail {

inline std::string out_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + dir);
}

// Identity pipeline for in-memory synthetic data: numeric columns x1..xD and
// the integer labels spelled out, matching what save_csv would emit.
inline Pipeline synthetic_pipeline(const Dataset& data) {
  Pipeline p;
  for (std::size_t c = 0; c < data.d; ++c)
    p.encoding.features.push_back(ColumnEncoding{"x" + std::to_string(c + 1), false, {}});
  for (std::size_t l = 1; l <= data.num_labels; ++l)
    p.encoding.labels.push_back(std::to_string(l));
  p.label_column = "label";
  return p;
}

inline Dataset materialize_train_data(const DataSource& src, std::uint64_t seed,
                                      Pipeline& pipeline) {
  if (src.is_synthetic()) {
    Dataset data = generate_synthetic(*src.synthetic, derive_seed(seed, {9})).data;
    pipeline = synthetic_pipeline(data);
    return data;
  }
  CsvSchema schema = schema_from_json(parse_json_file(src.schema_path), "schema");
  LoadedCsv loaded = load_csv(src.csv_path, schema);
  pipeline.encoding = loaded.encoding;
  pipeline.label_column = schema.label;
  return loaded.data;
}

}  // namespace clidetail

inline void cmd_gen_data(const std::string& spec_path, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override, std::ostream& log) {
  Json j = parse_json_file(spec_path);
  jsondetail::check_object(j, "spec");
  std::uint64_t seed = 0;
  if (j.contains("seed")) {
    seed = jsondetail::as_uint(j.at("seed"), "spec.seed");
    j.erase("seed");
  }
  SynthSpec spec = synth_spec_from_json(j, "spec");
  if (seed_override) seed = *seed_override;

  SynthOutput gen = generate_synthetic(spec, seed);
  clidetail::ensure_out_dir(out_dir);
  save_csv(gen.data, clidetail::out_path(out_dir, "data.csv"));

  Json masks = Json::array();
  for (const UnitMask& mask : gen.masks) {
    Json bits = Json::array();
    for (std::uint8_t bit : mask) bits.push_back(unsigned(bit));
    masks.push_back(bits);
  }
  Json truth{{"cluster_ids", gen.data.truth},
             {"masks", masks},
             {"weights", to_json(gen.generator)}};
  write_text_file(clidetail::out_path(out_dir, "truth.json"), dump_artifact(truth));

  Json echo = to_json(spec);
  echo["seed"] = seed;
  write_text_file(clidetail::out_path(out_dir, "spec.json"), dump_artifact(echo));

  CsvSchema schema;
  for (std::size_t c = 0; c < spec.d; ++c)
    schema.columns.push_back(CsvColumn{"x" + std::to_string(c + 1), false});
  schema.label = "label";
  write_text_file(clidetail::out_path(out_dir, "schema.json"), dump_artifact(to_json(schema)));

  log << "wrote data.csv, truth.json, spec.json, schema.json to " << out_dir << "\n";
}

inline void cmd_train(const std::string& config_path, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override, std::ostream& log) {
  TrainRunConfig cfg = train_config_from_json(parse_json_file(config_path));
  if (seed_override) cfg.train.seed = *seed_override;

  ModelFile mf;
  mf.method = cfg.train.method;
  Dataset data = clidetail::materialize_train_data(cfg.data, cfg.train.seed, mf.pipeline);
  cfg.train.network.input_dim = data.d;
  cfg.train.network.num_labels = data.num_labels;
  mf.pipeline.standardizer = standardize(data);

  std::string log_csv;
  if (cfg.train.method == TrainMethod::coda) {
    log_csv = "epoch,loss,K\n";
    mf.model = train_coda(data, cfg.train, [&](std::size_t e, double loss, std::size_t k) {
      log_csv += std::to_string(e + 1) + "," + format_double(loss) + "," + std::to_string(k) + "\n";
    });
    mf.weights = mf.model.weights;
  } else {
    auto on_epoch = [&](std::size_t e, double loss, std::size_t) {
      log_csv += std::to_string(e + 1) + "," + format_double(loss) + "\n";
    };
    log_csv = "epoch,loss\n";
    mf.weights = cfg.train.method == TrainMethod::dnn ? train_dnn(data, cfg.train, on_epoch)
                                                      : train_dropout(data, cfg.train, on_epoch);
  }

  clidetail::ensure_out_dir(out_dir);
  write_text_file(clidetail::out_path(out_dir, "model.json"), dump_artifact(to_json(mf)));
  write_text_file(clidetail::out_path(out_dir, "log.csv"), log_csv);
  log << "wrote model.json, log.csv to " << out_dir << "\n";
}

inline void cmd_predict(const std::string& model_path, const std::string& csv_path,
                        const std::string& out_dir, std::ostream& log) {
  ModelFile mf = model_file_from_json(parse_json_file(model_path), "model");
  if (mf.pipeline.encoding.labels.size() != mf.weights.config.num_labels)
    throw StructureError("model: pipeline labels do not match the network output width");

  CsvSchema schema;
  for (const ColumnEncoding& col : mf.pipeline.encoding.features)
    schema.columns.push_back(CsvColumn{col.name, col.categorical});
  schema.label = mf.pipeline.label_column;
  LoadedCsv loaded = load_csv(csv_path, schema, &mf.pipeline.encoding, false);
  apply_standardizer(mf.pipeline.standardizer, loaded.data);

  const std::vector<std::string>& labels = mf.pipeline.encoding.labels;
  std::string out_csv;
  if (mf.is_coda()) {
    out_csv = "label,architecture\n";
    for (std::size_t r = 0; r < loaded.data.n; ++r) {
      Prediction p = predict(loaded.data.row(r), mf.model);
      out_csv += labels[p.label - 1] + "," + std::to_string(p.architecture) + "\n";
    }
  } else {
    out_csv = "label\n";
    for (std::size_t r = 0; r < loaded.data.n; ++r)
      out_csv += labels[predict_label(loaded.data.row(r), mf.weights) - 1] + "\n";
  }

  clidetail::ensure_out_dir(out_dir);
  write_text_file(clidetail::out_path(out_dir, "predictions.csv"), out_csv);
  log << "wrote predictions.csv (" << loaded.data.n << " rows) to " << out_dir << "\n";
}

namespace clidetail {

inline std::string results_csv(const BenchmarkResult& result) {
  std::string csv = "dataset,method,repeat,f1,precision,recall,K,seed\n";
  for (const RunResult& run : result.runs) {
    csv += run.dataset + "," + run.method + "," + std::to_string(run.repeat) + ",";
    if (run.ok()) {
      csv += format_double(run.f1) + "," + format_double(run.precision) + "," +
             format_double(run.recall) + ",";
      csv += run.method == "coda" ? std::to_string(run.k) : std::string();
    } else {
      csv += ",,,";
    }
    csv += "," + std::to_string(run.seed) + "\n";
  }
  return csv;
}

inline std::string significance_marker(double p) {
  if (p < 0.01) return " **";
  if (p < 0.05) return " *";
  return "";
}

inline std::string report_md(const BenchmarkRunConfig& cfg, const BenchmarkResult& result) {
  std::string md = "# Benchmark report\n\n";
  md += "- seed: " + std::to_string(cfg.seed) + "\n";
  md += "- repeats: " + std::to_string(cfg.repeats) + "\n";
  md += "- positive label: " + std::to_string(cfg.positive_label) + "\n";
  md += "- train fraction: " + format_double(cfg.train_fraction) + "\n";

  for (const std::string& name : cfg.dataset_names) {
    md += "\n## " + name + "\n\n";
    md += "| method | mean f1 | std f1 | runs | t vs coda | p vs coda |\n";
    md += "|---|---|---|---|---|---|\n";
    for (const CellSummary& cell : result.summaries) {
      if (cell.dataset != name) continue;
      md += "| " + cell.method + " | ";
      md += cell.n > 0 ? format_double(cell.mean_f1) : "n/a";
      md += " | ";
      md += std::isnan(cell.std_f1) ? "n/a" : format_double(cell.std_f1);
      md += " | " + std::to_string(cell.n) + " | ";
      if (cell.has_test) {
        md += format_double(cell.t) + " | " + format_double(cell.p) + significance_marker(cell.p);
      } else {
        md += cell.method == "coda" ? "- | -" : "n/a | n/a";
      }
      md += " |\n";
    }
  }

  bool any_failed = false;
  for (const RunResult& run : result.runs)
    if (!run.ok()) any_failed = true;
  if (any_failed) {
    md += "\n## failed runs\n\n";
    for (const RunResult& run : result.runs)
      if (!run.ok())
        md += "- " + run.dataset + "/" + run.method + " repeat " + std::to_string(run.repeat) +
              ": " + run.error + "\n";
  }
  return md;
}

}  // namespace clidetail

// Returns the process exit code: 0 unless every run failed.
inline int cmd_benchmark(const std::string& config_path, const std::string& out_dir,
                         std::optional<std::uint64_t> seed_override, std::ostream& log) {
  BenchmarkRunConfig cfg = benchmark_config_from_json(parse_json_file(config_path));
  if (seed_override) cfg.seed = *seed_override;

  std::vector<BenchmarkInput> inputs;
  for (std::size_t d = 0; d < cfg.dataset_sources.size(); ++d) {
    const DataSource& src = cfg.dataset_sources[d];
    if (src.is_synthetic()) {
      inputs.push_back(BenchmarkInput{cfg.dataset_names[d], *src.synthetic});
    } else {
      CsvSchema schema = schema_from_json(parse_json_file(src.schema_path), "schema");
      inputs.push_back(BenchmarkInput{cfg.dataset_names[d], load_csv(src.csv_path, schema).data});
    }
  }

  BenchmarkResult result = run_benchmark(inputs, cfg.methods, cfg.repeats, cfg.base, cfg.seed,
                                         cfg.positive_label, cfg.train_fraction);

  clidetail::ensure_out_dir(out_dir);
  write_text_file(clidetail::out_path(out_dir, "results.csv"), clidetail::results_csv(result));
  write_text_file(clidetail::out_path(out_dir, "report.md"), clidetail::report_md(cfg, result));
  log << "wrote results.csv, report.md to " << out_dir << "\n";

  bool any_ok = false;
  for (const RunResult& run : result.runs)
    if (run.ok()) any_ok = true;
  if (!any_ok) {
    log << "every run failed; see results.csv and report.md\n";
    return 3;
  }
  return 0;
}

// In-process entry point; args exclude the program name. Exit codes: 0 ok,
// 2 configuration/validation problem, 3 runtime/numeric/io failure.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"uniform-process dropout workbench"};
  app.require_subcommand(1);
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed_value, "override the configured seed");
  std::string out_dir = ".";
  app.add_option("--out", out_dir, "output directory (created if missing)");

  std::string spec_path, train_config_path, model_path, data_path, bench_config_path;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->add_option("spec", spec_path, "synthetic spec JSON file")->required();
  gen->fallthrough();
  CLI::App* train = app.add_subcommand("train", "train a model from a run config");
  train->add_option("config", train_config_path, "run config JSON file")->required();
  train->fallthrough();
  CLI::App* predict_cmd = app.add_subcommand("predict", "predict labels for a CSV");
  predict_cmd->add_option("model", model_path, "model JSON file")->required();
  predict_cmd->add_option("data", data_path, "input CSV file")->required();
  predict_cmd->fallthrough();
  CLI::App* bench = app.add_subcommand("benchmark", "run the benchmark matrix");
  bench->add_option("config", bench_config_path, "benchmark config JSON file")->required();
  bench->fallthrough();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  std::optional<std::uint64_t> seed_override;
  if (seed_opt->count() > 0) seed_override = seed_value;

  try {
    if (gen->parsed()) {
      cmd_gen_data(spec_path, out_dir, seed_override, out);
    } else if (train->parsed()) {
      cmd_train(train_config_path, out_dir, seed_override, out);
    } else if (predict_cmd->parsed()) {
      cmd_predict(model_path, data_path, out_dir, out);
    } else if (bench->parsed()) {
      return cmd_benchmark(bench_config_path, out_dir, seed_override, out);
    }
    return 0;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const StructureError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace updrop
