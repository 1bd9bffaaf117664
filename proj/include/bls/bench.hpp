#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bls/linalg.hpp"

namespace bls {

struct BenchConfig {
  Index samples = 10000;  // l
  Index nodes = 1000;     // k
  Index outputs = 10;     // c
  Index delta = 100;      // rows removed by the sample removals
  Index rho = 50;         // nodes removed by the node removal
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  int repeats = 3;  // the best of `repeats` runs is kept for both timings
};

struct BenchRow {
  std::string method;  // remove_nodes, remove_inputs_q, remove_inputs_f
  Index amount = 0;
  double update_ms = 0.0;
  double retrain_ms = 0.0;
  double deviation = 0.0;  // update vs. retrain W

  /// retrain / update; above 1 means the update is faster.
  double speedup() const { return update_ms > 0.0 ? retrain_ms / update_ms : 0.0; }
};

/// Times each decremental update against a from-scratch ridge_solve of the
/// reduced problem, on uniform random activations in [-1, 1]. Building the
/// initial state is not timed. Removed nodes and rows are a seeded random
/// choice.
std::vector<BenchRow> bench(const BenchConfig& config);

std::string format_bench(const std::vector<BenchRow>& rows);

}  // namespace bls
