// End-to-end library walkthrough: generate a small clustered dataset, train
// the mixture model next to the two baselines, and compare held-out F1.

#include <iostream>

#include <updrop/trainer.hpp>

int main() {
  using namespace updrop;

  SynthSpec spec;
  spec.n = 600;
  spec.d = 10;
  spec.units_per_layer = 8;
  spec.k_true = 3;

  TrainConfig base;
  base.network = NetworkConfig{spec.d, 2, spec.units_per_layer, spec.num_labels};
  base.epochs = 10;

  std::vector<BenchmarkInput> inputs{{"demo", spec}};
  std::vector<TrainMethod> methods{TrainMethod::coda, TrainMethod::dnn, TrainMethod::dropout};
  BenchmarkResult result = run_benchmark(inputs, methods, 3, base, 7);

  for (const CellSummary& cell : result.summaries) {
    std::cout << cell.method << ": mean f1 " << cell.mean_f1 << " over " << cell.n << " runs";
    if (cell.has_test) std::cout << " (p vs coda " << cell.p << ")";
    std::cout << "\n";
  }

  for (const RunResult& run : result.runs)
    if (!run.ok()) {
      std::cout << "failed: " << run.method << " repeat " << run.repeat << ": " << run.error
                << "\n";
      return 1;
    }
  return 0;
}
