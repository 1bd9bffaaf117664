#include "bls/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "bls/decremental.hpp"
#include "bls/error.hpp"

namespace bls {

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double best_ms(int repeats, F&& run) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    run();
    best = std::min(best, std::chrono::duration<double, std::milli>(Clock::now() - start).count());
  }
  return best;
}

std::vector<Index> pick(Index n, Index count, std::mt19937_64& engine) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), engine);
  all.resize(static_cast<std::size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<Index> complement(Index n, const std::vector<Index>& drop) {
  std::vector<Index> keep;
  std::size_t d = 0;
  for (Index i = 0; i < n; ++i) {
    if (d < drop.size() && drop[d] == i) ++d;
    else keep.push_back(i);
  }
  return keep;
}

}  // namespace

std::vector<BenchRow> bench(const BenchConfig& config) {
  const Index l = config.samples;
  const Index k = config.nodes;
  if (l < 2 || k < 2 || config.outputs < 1 || config.repeats < 1) {
    throw InvalidConfig("bench needs at least 2 samples, 2 nodes, 1 output and 1 repeat");
  }
  if (config.rho < 1 || config.rho >= k) throw InvalidConfig("rho must lie in [1, k)");
  if (config.delta < 1 || config.delta >= l) throw InvalidConfig("delta must lie in [1, l)");

  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32), std::uint32_t{5}};
  std::mt19937_64 engine(seq);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix a(l, k);
  Matrix y(l, config.outputs);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < l; ++i) a(i, j) = uniform(engine);
  for (Index j = 0; j < config.outputs; ++j)
    for (Index i = 0; i < l; ++i) y(i, j) = uniform(engine);

  std::vector<BenchRow> rows;

  {
    const auto drop = pick(k, config.rho, engine);
    const NodeRemovalPlan plan(drop, k);
    const NodeState state = init_node_state(a, y, config.lambda);
    const Matrix reduced = a(Eigen::all, complement(k, drop));
    BenchRow row{"remove_nodes", config.rho};
    NodeState out;
    row.update_ms = best_ms(config.repeats, [&] {
      NodeState copy = state;  // the state is consumed; copying A is part of the price
      out = remove_nodes(std::move(copy), plan);
    });
    Matrix w;
    row.retrain_ms = best_ms(config.repeats, [&] { w = ridge_solve(reduced, y, config.lambda).weights; });
    row.deviation = relative_deviation(out.w, w);
    rows.push_back(row);
  }

  const auto drop = pick(l, config.delta, engine);
  const auto keep = complement(l, drop);
  const InputRemovalBatch batch{a(drop, Eigen::all), y(drop, Eigen::all)};
  const Matrix a_keep = a(keep, Eigen::all);
  const Matrix y_keep = y(keep, Eigen::all);
  Matrix w;
  const double retrain = best_ms(config.repeats, [&] {
    w = ridge_solve(a_keep, y_keep, config.lambda).weights;
  });

  for (InputForm form : {InputForm::q_form, InputForm::f_form}) {
    const InputState state = init_input_state(a, y, config.lambda, form);
    const bool q = form == InputForm::q_form;
    BenchRow row{q ? "remove_inputs_q" : "remove_inputs_f", config.delta};
    InputState out;
    row.update_ms = best_ms(config.repeats, [&] {
      out = q ? remove_inputs_q(state, batch) : remove_inputs_f(state, batch);
    });
    row.retrain_ms = retrain;
    row.deviation = relative_deviation(out.w, w);
    rows.push_back(row);
  }
  return rows;
}

std::string format_bench(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "method" << std::right << std::setw(8) << "removed"
      << std::setw(14) << "update ms" << std::setw(14) << "retrain ms" << std::setw(10)
      << "speedup" << std::setw(12) << "deviation" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.method << std::right << std::setw(8) << r.amount
        << std::fixed << std::setprecision(2) << std::setw(14) << r.update_ms << std::setw(14)
        << r.retrain_ms << std::setw(10) << r.speedup() << std::scientific << std::setw(12)
        << r.deviation << '\n';
  }
  return out.str();
}

}  // namespace bls
