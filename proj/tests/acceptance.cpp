// Acceptance run: one PASS/FAIL line per property, non-zero exit if any fails.
//
//   acceptance            run everything
//   acceptance 1 4 7      run a subset

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "bls/bench.hpp"
#include "bls/decremental.hpp"
#include "bls/error.hpp"
#include "bls/experiment.hpp"
#include "test_support.hpp"

using namespace bls;
using bls::testing::Rng;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr std::array kLambdas{1e-3, 1e-1, 1.0};

double lambda_for(int trial) { return kLambdas[static_cast<std::size_t>(trial % 3)]; }

// Decremental updates against a fresh ridge solve, and Q form against F form.
struct OracleSweep {
  double worst_oracle = 0.0;
  double worst_agreement = 0.0;
  int node_trials = 0;
  int input_trials = 0;
  std::array<int, 3> regimes{};  // delta < k, delta = k, delta > k
  double seconds = 0.0;
};

OracleSweep oracle_sweep() {
  OracleSweep out;
  Rng rng(1001);
  const auto start = Clock::now();
  for (int trial = 0; trial < 500; ++trial) {
    const double lambda = lambda_for(trial);
    const Index l = rng.integer(20, 300);
    const Index c = rng.integer(1, 10);
    const int method = (trial / 3) % 3;  // remove_nodes, remove_inputs_q, remove_inputs_f

    if (method == 0) {
      const Index k = rng.integer(5, 120);
      const Matrix a = rng.matrix(l, k);
      const Matrix y = rng.matrix(l, c);
      const auto drop = rng.subset(k, rng.integer(1, k - 1));
      const NodeState s = remove_nodes(init_node_state(a, y, lambda), NodeRemovalPlan(drop, k));
      const Matrix oracle = ridge_solve(testing::drop_columns(a, drop), y, lambda).weights;
      out.worst_oracle = std::max(out.worst_oracle, relative_deviation(s.w, oracle));
      ++out.node_trials;
      continue;
    }

    // delta > k needs l - 1 > k
    const Index k = rng.integer(5, std::min<Index>(120, l - 2));
    const Matrix a = rng.matrix(l, k);
    const Matrix y = rng.matrix(l, c);
    const int regime = out.input_trials % 3;
    const Index delta = regime == 0 ? rng.integer(1, k - 1) : regime == 1 ? k : rng.integer(k + 1, l - 1);
    ++out.regimes[static_cast<std::size_t>(regime)];
    ++out.input_trials;

    const auto rows = rng.subset(l, delta);
    const InputRemovalBatch batch{testing::take_rows(a, rows), testing::take_rows(y, rows)};
    const Matrix oracle =
        ridge_solve(testing::drop_rows(a, rows), testing::drop_rows(y, rows), lambda).weights;
    const InputState q = remove_inputs_q(init_input_state(a, y, lambda, InputForm::q_form), batch);
    const InputState f = remove_inputs_f(init_input_state(a, y, lambda, InputForm::f_form), batch);
    const InputState& primary = method == 1 ? q : f;
    out.worst_oracle = std::max(out.worst_oracle, relative_deviation(primary.w, oracle));
    out.worst_agreement = std::max(out.worst_agreement, relative_deviation(q.w, f.w));
  }
  out.seconds = seconds_since(start);
  return out;
}

Outcome oracle_equivalence(const OracleSweep& s) {
  std::ostringstream d;
  d << "500 trials (" << s.node_trials << " node, " << s.input_trials << " input: " << s.regimes[0]
    << " delta<k, " << s.regimes[1] << " delta=k, " << s.regimes[2] << " delta>k), max rel dev "
    << sci(s.worst_oracle) << " (<= 1e-8), " << two_decimals(s.seconds) << " s (< 60 s)";
  return {s.worst_oracle <= 1e-8 && s.seconds < 60.0 && s.regimes[0] && s.regimes[1] && s.regimes[2],
          d.str()};
}

Outcome q_f_agreement(const OracleSweep& s) {
  return {s.worst_agreement <= 1e-9, std::to_string(s.input_trials) + " input trials, max rel W gap " +
                                         sci(s.worst_agreement) + " (<= 1e-9)"};
}

void input_trip(const Matrix& a, const Matrix& y, double lambda, Index p, double& worst_w,
                double& worst_gram) {
  Rng rng(static_cast<std::uint64_t>(a.rows() * 1000 + a.cols() * 10 + p));
  const InputState start = init_input_state(a, y, lambda, InputForm::f_form);
  const Matrix ax = rng.matrix(p, a.cols());
  const Matrix ya = rng.matrix(p, y.cols());
  const InputState undone = remove_inputs_f(add_inputs_f(start, ax, ya), {ax, ya});
  worst_w = std::max(worst_w, relative_deviation(undone.w, start.w));
  worst_gram = std::max(worst_gram, relative_deviation(undone.f.gram(), start.f.gram()));
}

Outcome round_trips() {
  Rng rng(1002);
  double node_w = 0.0, node_gram = 0.0, input_w = 0.0, input_gram = 0.0, any_w = 0.0, any_gram = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double lambda = lambda_for(trial);
    const Index l = rng.integer(20, 300);
    const Index k = rng.integer(5, 120);
    const Matrix a = rng.matrix(l, k);
    const Matrix y = rng.matrix(l, rng.integer(1, 10));

    const NodeState base = init_node_state(a, y, lambda);
    const Index q = rng.integer(1, 40);
    const NodeState grown = add_nodes(base, rng.matrix(l, q), y);
    std::vector<Index> added;
    for (Index j = k; j < k + q; ++j) added.push_back(j);
    const NodeState back = remove_nodes(grown, NodeRemovalPlan(added, k + q));
    node_w = std::max(node_w, relative_deviation(back.w, base.w));
    node_gram = std::max(node_gram, relative_deviation(back.f.gram(), base.f.gram()));

    // Removing rows regrows the directions they had shrunk, so the stored
    // state's rounding is amplified by roughly ||Q'|| ||A^T A + lambda I||
    // cond(A^T A + lambda I). With l >= 2k that stays near 1e2 - 1e4; for
    // rank-deficient or square A at lambda = 1e-3 it passes 1e7 and no
    // double-precision downdate of the stored factor can get within 1e-9
    // (an exact long-double downdate of the same factor lands on the same
    // error). Those are reported separately below.
    const Index kw = std::min<Index>(k, l / 2);
    const Matrix aw = a.leftCols(kw);
    input_trip(aw, y, lambda, rng.integer(1, 2 * kw), input_w, input_gram);
    input_trip(a, y, lambda, rng.integer(1, 2 * k), any_w, any_gram);
  }
  const double worst = std::max({node_w, node_gram, input_w, input_gram});
  return {worst <= 1e-9, "100 + 100 trials; nodes: W " + sci(node_w) + ", FF^T " + sci(node_gram) +
                             "; inputs (l >= 2k): W " + sci(input_w) + ", FF^T " + sci(input_gram) +
                             " (<= 1e-9); inputs, any l/k: W " + sci(any_w) + ", FF^T " +
                             sci(any_gram) + " (conditioning floor, not gated)"};
}

Outcome appendix_identities() {
  Rng rng(1003);
  double block = 0.0, chain = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double lambda = lambda_for(trial);
    const Index k = rng.integer(3, 60);
    const Index rho = rng.integer(1, k - 1);
    const Matrix a = rng.matrix(rng.integer(20, 200), k);
    const Matrix y = rng.matrix(a.rows(), rng.integer(1, 10));
    const NodeState s = init_node_state(a, y, lambda);
    const NodeRemovalPlan plan(rng.subset(k, rho), k);

    // Block form of W for the permuted, retriangularized factor.
    Matrix fp(k, k), wp(k, y.cols()), ap(a.rows(), k);
    for (Index pos = 0; pos < k; ++pos) {
      const Index src = plan.order()[static_cast<std::size_t>(pos)];
      fp.row(pos) = s.f.matrix().row(src);
      wp.row(pos) = s.w.row(src);
      ap.col(pos) = a.col(src);
    }
    const Retriangularized r = retriangularize(fp, k - rho);
    const Matrix a_keep = ap.leftCols(k - rho);
    const Matrix a_drop = ap.rightCols(rho);
    const Matrix w_kept = testing::retrain(a_keep, y, lambda);
    const Matrix inner = r.t_block.transpose() * a_keep.transpose() * y +
                         r.g_block.matrix().transpose() * a_drop.transpose() * y;
    block = std::max({block, relative_deviation(w_kept + r.t_block * inner, wp.topRows(k - rho)),
                      relative_deviation(r.g_block.times(inner), wp.bottomRows(rho)),
                      relative_deviation(r.head.gram(), testing::inverse_gram(a_keep, lambda))});

    // Q A_kept^T Y_kept = W - Q A_d^T Y_d
    const Index l = a.rows();
    const Index delta = rng.integer(1, l - 1);
    const Matrix qm = testing::inverse_gram(a, lambda);
    const Matrix w = testing::retrain(a, y, lambda);
    const Matrix lhs = qm * a.topRows(l - delta).transpose() * y.topRows(l - delta);
    const Matrix rhs = w - qm * a.bottomRows(delta).transpose() * y.bottomRows(delta);
    chain = std::max(chain, relative_deviation(lhs, rhs));
  }
  return {std::max(block, chain) <= 1e-9, "100 + 100 instances; node-removal block form " + sci(block) +
                                              ", sample-removal chain " + sci(chain) + " (<= 1e-9)"};
}

ExperimentConfig schedule(const std::string& name) {
  return load_config(std::string(BLS_SCHEDULE_DIR) + "/" + name);
}

bool same_two_decimals(double a, double b) { return two_decimals(a) == two_decimals(b); }

Outcome table_one() {
  const auto start = Clock::now();
  const ExperimentConfig cfg = schedule("table1.conf");
  const ExperimentResult result = run_schedule(cfg);
  bool equal = true;
  double worst = 0.0;
  for (const auto& r : result.reports) {
    const TrackResult* standard = r.find(Track::standard);
    const TrackResult* proposed = r.find(Track::proposed);
    equal = equal && standard && proposed &&
            same_two_decimals(standard->test_accuracy, proposed->test_accuracy) &&
            same_two_decimals(standard->train_accuracy, proposed->train_accuracy);
    worst = std::max(worst, r.max_deviation());
  }
  const double secs = seconds_since(start);
  const auto& last = result.reports.back();
  std::ostringstream d;
  d << result.reports.size() << " rows, " << last.nodes_after << " nodes left, lambda "
    << cfg.lambda << ", proposed == standard at 2 decimals: " << (equal ? "yes" : "NO")
    << " (last " << two_decimals(last.find(Track::proposed)->test_accuracy) << "/"
    << two_decimals(last.find(Track::standard)->test_accuracy) << "), max dev " << sci(worst) << ", "
    << two_decimals(secs) << " s (<= 600 s)";
  return {equal && result.reports.size() == 5 && secs <= 600.0, d.str()};
}

Outcome tables_two_three() {
  bool pass = true;
  std::ostringstream d;
  for (const char* name : {"table2.conf", "table3.conf"}) {
    for (double lambda : {1e-3, 1e-1}) {
      ExperimentConfig cfg = schedule(name);
      cfg.lambda = lambda;
      const ExperimentResult result = run_schedule(cfg);
      double worst = 0.0;
      bool verified = true, equal = true;
      for (const auto& r : result.reports) {
        verified = verified && r.verified;
        worst = std::max(worst, r.max_deviation());
        const TrackResult* q = r.find(Track::alg1);
        const TrackResult* f = r.find(Track::alg2);
        equal = equal && q && f && same_two_decimals(q->test_accuracy, f->test_accuracy) &&
                same_two_decimals(q->train_accuracy, f->train_accuracy);
      }
      const auto& last = result.reports.back();
      const bool ok = verified && equal && worst <= 1e-8 && last.nodes_after == 510;
      pass = pass && ok;
      d << (d.tellp() ? "; " : "") << result.reports.front().samples_after << "->"
        << last.samples_after << " lambda " << lambda << ": dev " << sci(worst)
        << (equal ? ", alg1 == alg2" : ", alg1 != alg2");
    }
  }
  return {pass, d.str() + " (dev <= 1e-8, equal at 2 decimals)"};
}

Outcome speed() {
  const BenchConfig cfg;  // l = 10000, k = 1000, delta = 100
  const auto rows = bench(cfg);
  bool pass = true;
  std::ostringstream d;
  d << "l=" << cfg.samples << " k=" << cfg.nodes << " delta=" << cfg.delta << " rho=" << cfg.rho;
  for (const auto& r : rows) {
    const double ratio = r.update_ms / r.retrain_ms;
    pass = pass && ratio <= 0.5 && r.deviation <= 1e-8;
    d << "; " << r.method << " " << two_decimals(ratio) << "x retrain";
  }
  return {pass, d.str() + " (<= 0.50x)"};
}

// Randomized invariant checks on badly scaled inputs. A guard may refuse an
// instance with a typed error; producing a non-finite value never passes.
struct Hygiene {
  int instances = 0;
  int non_finite = 0;
  int violations = 0;
  int guarded = 0;
  int missed_guards = 0;
};

bool finite_state(const NodeState& s) { return all_finite(s.f.matrix()) && all_finite(s.w); }
bool finite_state(const InputState& s) {
  return all_finite(s.w) && (s.form == InputForm::q_form ? all_finite(s.q) : all_finite(s.f.matrix()));
}

void fuzz_one(Rng& rng, int instance, Hygiene& h) {
  const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
  const double lambda = std::pow(10.0, rng.uniform(-6.0, 1.0));
  const Index k = rng.integer(2, 40);
  const Index l = rng.integer(2, 120);
  const Matrix a = rng.matrix(l, k) * scale;
  const Matrix y = rng.matrix(l, rng.integer(1, 4));

  switch (instance % 5) {
    case 0: {  // Givens retriangularization keeps the Gram matrix and the shape
      const Matrix f = rng.upper(k) * scale;
      const Index rho = rng.integer(1, k - 1);
      const NodeRemovalPlan plan(rng.subset(k, rho), k);
      Matrix fp(k, k);
      for (Index pos = 0; pos < k; ++pos) fp.row(pos) = f.row(plan.order()[static_cast<std::size_t>(pos)]);
      const Retriangularized r = retriangularize(fp, k - rho);
      Matrix full = Matrix::Zero(k, k);
      full.topLeftCorner(k - rho, k - rho) = r.head.matrix();
      full.topRightCorner(k - rho, rho) = r.t_block;
      full.bottomRightCorner(rho, rho) = r.g_block.matrix();
      if (!all_finite(full)) ++h.non_finite;
      if (!testing::strictly_lower_is_zero(full) || relative_deviation(full * full.transpose(), fp * fp.transpose()) > 1e-12 ||
          (full.diagonal().array() <= 0.0).any()) {
        ++h.violations;
      }
      return;
    }
    case 1: {  // Cholesky factors of SPD input; indefinite input is refused
      Matrix m = a.transpose() * a;
      m.diagonal().array() += lambda * scale * scale;
      const UpperTriangular v = upper_cholesky(m);
      const UpperTriangular f = inverse_cholesky(m);
      if (!all_finite(v.matrix()) || !all_finite(f.matrix())) ++h.non_finite;
      if (relative_deviation(v.gram(), m) > 1e-9 || (v.matrix().diagonal().array() <= 0.0).any() ||
          (f.matrix().diagonal().array() <= 0.0).any()) {
        ++h.violations;
      }
      Matrix bad = m;
      bad(0, 0) = -std::abs(bad(0, 0)) - 1.0;
      try {
        inverse_cholesky(bad);
        ++h.missed_guards;
      } catch (const NotPositiveDefinite&) {
        ++h.guarded;
      }
      return;
    }
    case 2: {  // node growth then pruning
      NodeState s = init_node_state(a, y, lambda);
      try {
        s = add_nodes(std::move(s), rng.matrix(l, rng.integer(1, 10)) * scale, y);
      } catch (const NumericalError&) {
        ++h.guarded;
      }
      if (!finite_state(s)) ++h.non_finite;
      const Index n = s.nodes();
      if (n > 1) s = remove_nodes(std::move(s), NodeRemovalPlan(rng.subset(n, rng.integer(1, n - 1)), n));
      if (!finite_state(s)) ++h.non_finite;
      if (!testing::strictly_lower_is_zero(s.f.matrix())) ++h.violations;
      return;
    }
    default: {  // sample growth then removal, both forms and both branches
      const InputForm form = instance % 5 == 3 ? InputForm::q_form : InputForm::f_form;
      const bool q = form == InputForm::q_form;
      InputState s = init_input_state(a, y, lambda, form);
      const Matrix ax = rng.matrix(rng.integer(1, 2 * k), k) * scale;
      const Matrix ya = rng.matrix(ax.rows(), y.cols());
      s = q ? add_inputs_q(std::move(s), ax, ya) : add_inputs_f(std::move(s), ax, ya);
      if (!finite_state(s)) ++h.non_finite;
      const Index keep = rng.integer(1, ax.rows());
      const InputRemovalBatch batch{ax.topRows(keep), ya.topRows(keep)};
      try {
        const InputState r = q ? remove_inputs_q(s, batch) : remove_inputs_f(s, batch);
        if (!finite_state(r)) ++h.non_finite;
        if (!q && !testing::strictly_lower_is_zero(r.f.matrix())) ++h.violations;
      } catch (const NumericalError&) {
        ++h.guarded;  // removing rows that nearly carry the whole Gram matrix
      }
      // Rows that were never trained on must be refused.
      const Matrix stranger = Matrix::Constant(1, k, 1e3 * scale);
      try {
        const InputState r = q ? remove_inputs_q(s, {stranger, ya.topRows(1)})
                               : remove_inputs_f(s, {stranger, ya.topRows(1)});
        if (!finite_state(r)) ++h.non_finite;
        ++h.missed_guards;
      } catch (const NumericalError&) {
        ++h.guarded;
      }
      return;
    }
  }
}

Outcome hygiene() {
  Rng rng(1008);
  Hygiene h;
  for (int i = 0; i < 1000; ++i) {
    try {
      fuzz_one(rng, i, h);
    } catch (const NumericalError&) {
      ++h.guarded;  // e.g. a regularized Gram matrix below the pivot guard
    } catch (const std::exception& e) {
      ++h.violations;
      std::cerr << "  instance " << i << ": unexpected " << e.what() << '\n';
    }
    ++h.instances;
  }
  return {h.non_finite == 0 && h.violations == 0 && h.missed_guards == 0,
          std::to_string(h.instances) + " instances, " + std::to_string(h.non_finite) + " non-finite, " +
              std::to_string(h.violations) + " invariant violations, " + std::to_string(h.guarded) +
              " guard refusals, " + std::to_string(h.missed_guards) + " missed guards"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  const auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  std::optional<OracleSweep> sweep;
  const auto get_sweep = [&]() -> const OracleSweep& {
    if (!sweep) sweep = oracle_sweep();
    return *sweep;
  };

  const std::array<std::pair<const char*, std::function<Outcome()>>, 8> checks{{
      {"decremental updates match ridge_solve", [&] { return oracle_equivalence(get_sweep()); }},
      {"add/remove round trips restore the state", round_trips},
      {"Q form and F form agree", [&] { return q_f_agreement(get_sweep()); }},
      {"block and chain identities", appendix_identities},
      {"node pruning schedule: proposed == standard", table_one},
      {"sample removal schedules: alg1 == alg2, verified", tables_two_three},
      {"update at most half the retrain time", speed},
      {"fuzzed invariants, no NaN/Inf", hygiene},
  }};

  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!wanted(n)) continue;
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << n << "] " << checks[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
