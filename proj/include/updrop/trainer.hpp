#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "upmm.hpp"

namespace updrop {

enum class TrainMethod { dnn, dropout, coda };

inline std::string method_name(TrainMethod m) {
  switch (m) {
    case TrainMethod::dnn: return "dnn";
    case TrainMethod::dropout: return "dropout";
    case TrainMethod::coda: return "coda";
  }
  throw UsageError("unknown training method");
}

inline TrainMethod parse_method(const std::string& name) {
  if (name == "dnn") return TrainMethod::dnn;
  if (name == "dropout") return TrainMethod::dropout;
  if (name == "coda") return TrainMethod::coda;
  throw UsageError("unknown training method '" + name + "'");
}

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  TrainMethod method = TrainMethod::dnn;
  double dropout_rate = 0.5;  // dropout baseline only
  UpmmParams upmm;            // coda only
  NetworkConfig network;

  void validate() const {
    if (epochs < 1) throw UsageError("train: epochs must be >= 1");
    if (batch_size < 1) throw UsageError("train: batch_size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw UsageError("train: learning_rate must be finite and >= 0");
    network.validate();
    if (method == TrainMethod::dropout && !(dropout_rate > 0.0 && dropout_rate < 1.0))
      throw UsageError("train: dropout_rate must lie in (0, 1)");
    if (method == TrainMethod::coda) upmm.validate();
  }
};

// on_epoch(epoch, mean training loss, K); K is 0 for the baselines.
using EpochCallback = std::function<void(std::size_t, double, std::size_t)>;
// on_batch(model, instances assigned so far this epoch); coda only.
using BatchCallback = std::function<void(const UpmmModel&, std::size_t)>;

namespace detail {

// Seed-stream tags. dnn and dropout share the init and shuffle streams so the
// dropout-rate -> 0 limit reproduces dnn exactly.
constexpr std::uint64_t kStreamInit = 0;
constexpr std::uint64_t kStreamShuffle = 1;
constexpr std::uint64_t kStreamAssign = 2;
constexpr std::uint64_t kStreamAnneal = 3;
constexpr std::uint64_t kStreamDropout = 4;

inline void check_dims(const Dataset& data, const NetworkConfig& cfg) {
  if (data.d != cfg.input_dim) throw StructureError("dataset width does not match network input");
  if (data.num_labels != cfg.num_labels)
    throw StructureError("dataset label count does not match network output");
}

inline void gather(const Dataset& data, const std::vector<std::size_t>& rows,
                   std::vector<std::span<const double>>& xs, std::vector<std::size_t>& ys) {
  xs.clear();
  ys.clear();
  xs.reserve(rows.size());
  ys.reserve(rows.size());
  for (std::size_t i : rows) {
    xs.push_back(data.row(i));
    ys.push_back(data.y[i] - 1);
  }
}

}  // namespace detail

inline WeightSet train_dnn(const Dataset& train, const TrainConfig& cfg,
                           const EpochCallback& on_epoch = {}) {
  cfg.validate();
  train.validate();
  detail::check_dims(train, cfg.network);
  WeightSet ws = init_weights(cfg.network, derive_seed(cfg.seed, {detail::kStreamInit}));
  UnitMask full = full_mask(cfg.network);
  std::vector<std::span<const double>> xs;
  std::vector<std::size_t> ys;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    auto shuffle_rng = make_rng(cfg.seed, {detail::kStreamShuffle, e});
    double loss_sum = 0.0;
    for (const auto& batch : batches(train.n, cfg.batch_size, shuffle_rng)) {
      detail::gather(train, batch, xs, ys);
      auto [grads, loss] = batch_gradients(xs, ys, ws, full);
      ws = sgd_step(ws, grads, cfg.learning_rate);
      loss_sum += loss * double(batch.size());
    }
    if (on_epoch) on_epoch(e, loss_sum / double(train.n), 0);
  }
  return ws;
}

// Fresh i.i.d. Bernoulli(1 - rate) keep mask over all hidden units.
inline UnitMask sample_dropout_mask(std::size_t units, double rate, std::mt19937_64& rng) {
  if (!(rate > 0.0 && rate < 1.0)) throw UsageError("dropout rate must lie in (0, 1)");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  UnitMask mask(units);
  for (auto& bit : mask) bit = unif(rng) < (1.0 - rate) ? 1 : 0;
  return mask;
}

// Classical dropout: a fresh mask per mini-batch during training; the returned
// weights have every hidden unit's outgoing weights pre-scaled by (1 - rate)
// so inference uses the full mask with no randomness.
inline WeightSet train_dropout(const Dataset& train, const TrainConfig& cfg,
                               const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (!(cfg.dropout_rate > 0.0 && cfg.dropout_rate < 1.0))
    throw UsageError("train: dropout_rate must lie in (0, 1)");
  train.validate();
  detail::check_dims(train, cfg.network);
  WeightSet ws = init_weights(cfg.network, derive_seed(cfg.seed, {detail::kStreamInit}));
  auto mask_rng = make_rng(cfg.seed, {detail::kStreamDropout});
  std::size_t units = cfg.network.total_hidden_units();
  std::vector<std::span<const double>> xs;
  std::vector<std::size_t> ys;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    auto shuffle_rng = make_rng(cfg.seed, {detail::kStreamShuffle, e});
    double loss_sum = 0.0;
    for (const auto& batch : batches(train.n, cfg.batch_size, shuffle_rng)) {
      UnitMask mask = sample_dropout_mask(units, cfg.dropout_rate, mask_rng);
      detail::gather(train, batch, xs, ys);
      auto [grads, loss] = batch_gradients(xs, ys, ws, mask);
      ws = sgd_step(ws, grads, cfg.learning_rate);
      loss_sum += loss * double(batch.size());
    }
    if (on_epoch) on_epoch(e, loss_sum / double(train.n), 0);
  }
  for (std::size_t l = 1; l < ws.layers.size(); ++l)
    for (double& w : ws.layers[l].w) w *= 1.0 - cfg.dropout_rate;
  return ws;
}

inline UpmmModel train_coda(const Dataset& train, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {},
                            const BatchCallback& on_batch = {}) {
  cfg.validate();
  if (cfg.method != TrainMethod::coda) throw UsageError("train_coda requires method = coda");
  train.validate();
  detail::check_dims(train, cfg.network);

  UpmmModel model;
  model.config = cfg.network;
  model.params = cfg.upmm;
  model.weights = init_weights(cfg.network, derive_seed(cfg.seed, {detail::kStreamInit}));

  auto assign_rng = make_rng(cfg.seed, {detail::kStreamAssign});
  auto anneal_rng = make_rng(cfg.seed, {detail::kStreamAnneal});
  std::vector<std::span<const double>> xs;
  std::vector<std::size_t> ys;

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    // Assignments are rebuilt every epoch; the last live mean becomes the
    // anchor so similarity stays defined until the architecture refills.
    for (ArchitectureState& state : model.architectures) {
      if (state.member_count > 0) state.anchor_mean = state.mean();
      state.members.clear();
      state.feature_sum.assign(train.d, 0.0);
      state.member_count = 0;
    }

    auto shuffle_rng = make_rng(cfg.seed, {detail::kStreamShuffle, e});
    double loss_sum = 0.0;
    std::size_t assigned = 0;
    for (const auto& batch : batches(train.n, cfg.batch_size, shuffle_rng)) {
      std::map<std::size_t, std::vector<std::size_t>> groups;
      for (std::size_t i : batch) {
        auto x = train.row(i);
        auto scores =
            assignment_scores(x, train.y[i], model, assign_rng, cfg.upmm.regularized);
        std::size_t c = cfg.upmm.sample_assignment ? assign(scores, assign_rng)
                                                   : assign_argmax(scores);
        if (c == model.k()) {
          model.architectures.push_back(spawn_architecture(x, i, scores.candidate, cfg.upmm.theta));
        } else {
          ArchitectureState& state = model.architectures[c];
          state.members.push_back(i);
          ++state.member_count;
          for (std::size_t col = 0; col < train.d; ++col) state.feature_sum[col] += x[col];
        }
        groups[c].push_back(i);
      }
      for (const auto& [k, rows] : groups) {
        detail::gather(train, rows, xs, ys);
        auto [grads, loss] = batch_gradients(xs, ys, model.weights, model.architectures[k].mask);
        model.weights = sgd_step(model.weights, grads, cfg.learning_rate);
        loss_sum += loss * double(rows.size());
      }
      assigned += batch.size();
      if (on_batch) on_batch(model, assigned);
    }

    for (std::size_t k = 0; k < model.k(); ++k)
      if (model.architectures[k].member_count > 0) update_mask_sa(model, k, train, anneal_rng);
    std::erase_if(model.architectures,
                  [](const ArchitectureState& s) { return s.member_count == 0; });

    if (on_epoch) on_epoch(e, loss_sum / double(train.n), model.k());
  }
  return model;
}

// Full-mask argmax label (1-based) for the baseline models; ties to the
// lowest label.
inline std::size_t predict_label(std::span<const double> x, const WeightSet& ws) {
  std::vector<double> yhat = forward_probs(x, ws, full_mask(ws.config));
  std::size_t best = 0;
  for (std::size_t l = 1; l < yhat.size(); ++l)
    if (yhat[l] > yhat[best]) best = l;
  return best + 1;
}

// Fraction of assigned instances whose architecture's dominant ground-truth
// cluster matches their own: sum_k max_c |members_k with truth c| / total.
inline double cluster_purity(const UpmmModel& model, const Dataset& data) {
  if (data.truth.empty()) throw UsageError("purity needs ground-truth cluster ids");
  std::size_t total = 0;
  std::size_t agree = 0;
  for (const ArchitectureState& state : model.architectures) {
    std::unordered_map<std::size_t, std::size_t> counts;
    for (std::size_t i : state.members) {
      if (i >= data.n) throw StructureError("architecture member outside the dataset");
      ++counts[data.truth[i]];
    }
    std::size_t top = 0;
    for (const auto& [c, cnt] : counts) top = std::max(top, cnt);
    agree += top;
    total += state.members.size();
  }
  if (total == 0) throw UsageError("purity of a model with no assigned members");
  return double(agree) / double(total);
}

struct BenchmarkInput {
  std::string name;
  std::variant<SynthSpec, Dataset> source;
};

struct RunResult {
  std::string dataset;
  std::string method;
  std::size_t repeat = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t k = 0;  // architecture count; 0 for baselines
  std::uint64_t seed = 0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct CellSummary {
  std::string dataset;
  std::string method;
  std::size_t n = 0;  // successful runs
  double mean_f1 = 0.0;
  double std_f1 = std::numeric_limits<double>::quiet_NaN();  // NaN when n < 2
  double t = std::numeric_limits<double>::quiet_NaN();       // paired t vs coda
  double p = std::numeric_limits<double>::quiet_NaN();
  bool has_test = false;
};

struct BenchmarkResult {
  std::vector<RunResult> runs;
  std::vector<CellSummary> summaries;
};

namespace detail {

// Benchmark seed-stream tags: {10,d} data generation, {11,d,r} splits (shared
// across methods so repeats pair up), {12,d,r,m} training.
constexpr std::uint64_t kStreamGen = 10;
constexpr std::uint64_t kStreamSplit = 11;
constexpr std::uint64_t kStreamTrain = 12;

inline RunResult run_one(const Dataset& data, TrainMethod method, const TrainConfig& base,
                         std::uint64_t split_seed, std::uint64_t train_seed,
                         std::size_t positive_label, double train_fraction) {
  auto [train_set, test_set] = split(data, train_fraction, split_seed);
  standardize(train_set, {&test_set});

  TrainConfig cfg = base;
  cfg.method = method;
  cfg.seed = train_seed;
  cfg.network.input_dim = data.d;
  cfg.network.num_labels = data.num_labels;

  RunResult out;
  out.method = method_name(method);
  out.seed = train_seed;
  std::vector<std::size_t> preds(test_set.n);
  if (method == TrainMethod::coda) {
    UpmmModel model = train_coda(train_set, cfg);
    for (std::size_t i = 0; i < test_set.n; ++i) preds[i] = predict(test_set.row(i), model).label;
    out.k = model.k();
  } else {
    WeightSet ws = method == TrainMethod::dnn ? train_dnn(train_set, cfg)
                                              : train_dropout(train_set, cfg);
    for (std::size_t i = 0; i < test_set.n; ++i) preds[i] = predict_label(test_set.row(i), ws);
  }
  EvalReport report = f1_score(preds, test_set.y, positive_label);
  out.f1 = report.f1;
  out.precision = report.precision;
  out.recall = report.recall;
  return out;
}

}  // namespace detail

// Full protocol: per (dataset, method, repeat) split deterministically, train,
// and score F1 on the held-out half. Split seeds are shared across methods so
// the per-repeat scores pair up for the t-tests against coda. A failed run is
// recorded with its identity and error text; the others continue.
inline BenchmarkResult run_benchmark(const std::vector<BenchmarkInput>& inputs,
                                     const std::vector<TrainMethod>& methods, std::size_t repeats,
                                     const TrainConfig& base, std::uint64_t master_seed,
                                     std::size_t positive_label = 2,
                                     double train_fraction = 0.5) {
  if (repeats < 1) throw UsageError("benchmark: repeats must be >= 1");
  if (inputs.empty() || methods.empty()) throw UsageError("benchmark: nothing to run");

  BenchmarkResult result;
  for (std::size_t d = 0; d < inputs.size(); ++d) {
    Dataset data;
    if (const SynthSpec* spec = std::get_if<SynthSpec>(&inputs[d].source)) {
      data = generate_synthetic(*spec, derive_seed(master_seed, {detail::kStreamGen, d})).data;
    } else {
      data = std::get<Dataset>(inputs[d].source);
      data.validate();
    }

    for (std::size_t r = 0; r < repeats; ++r) {
      std::uint64_t split_seed = derive_seed(master_seed, {detail::kStreamSplit, d, r});
      for (std::size_t m = 0; m < methods.size(); ++m) {
        std::uint64_t train_seed = derive_seed(master_seed, {detail::kStreamTrain, d, r, m});
        RunResult run;
        try {
          run = detail::run_one(data, methods[m], base, split_seed, train_seed, positive_label,
                                train_fraction);
        } catch (const std::exception& ex) {
          run = RunResult{};
          run.method = method_name(methods[m]);
          run.seed = train_seed;
          run.error = ex.what();
        }
        run.dataset = inputs[d].name;
        run.repeat = r;
        result.runs.push_back(std::move(run));
      }
    }

    auto cell_runs = [&](TrainMethod m) {
      std::vector<const RunResult*> rs;
      for (const RunResult& run : result.runs)
        if (run.dataset == inputs[d].name && run.method == method_name(m)) rs.push_back(&run);
      return rs;
    };
    bool has_coda =
        std::find(methods.begin(), methods.end(), TrainMethod::coda) != methods.end();
    for (TrainMethod m : methods) {
      CellSummary cell;
      cell.dataset = inputs[d].name;
      cell.method = method_name(m);
      std::vector<double> f1s;
      for (const RunResult* run : cell_runs(m))
        if (run->ok()) f1s.push_back(run->f1);
      cell.n = f1s.size();
      if (!f1s.empty()) {
        double sum = 0.0;
        for (double v : f1s) sum += v;
        cell.mean_f1 = sum / double(f1s.size());
        if (f1s.size() >= 2) {
          double ss = 0.0;
          for (double v : f1s) ss += (v - cell.mean_f1) * (v - cell.mean_f1);
          cell.std_f1 = std::sqrt(ss / double(f1s.size() - 1));
        }
      }
      if (has_coda && m != TrainMethod::coda) {
        // Pair by repeat over runs where both methods succeeded.
        std::vector<double> coda_f1, mine_f1;
        auto coda_runs = cell_runs(TrainMethod::coda);
        auto my_runs = cell_runs(m);
        for (const RunResult* a : coda_runs)
          for (const RunResult* b : my_runs)
            if (a->repeat == b->repeat && a->ok() && b->ok()) {
              coda_f1.push_back(a->f1);
              mine_f1.push_back(b->f1);
            }
        try {
          TTestResult tt = paired_t_test(coda_f1, mine_f1);
          cell.t = tt.t;
          cell.p = tt.p;
          cell.has_test = true;
        } catch (const UndefinedTestError&) {
          cell.has_test = false;
        }
      }
      result.summaries.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace updrop
