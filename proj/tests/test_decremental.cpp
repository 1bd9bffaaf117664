#include <doctest.h>

#include <array>

#include "bls/decremental.hpp"
#include "bls/error.hpp"
#include "test_support.hpp"

using namespace bls;
using bls::testing::Rng;

TEST_CASE("NodeRemovalPlan validation and ordering") {
  const NodeRemovalPlan plan({1, 3}, 6);
  CHECK(plan.order() == std::vector<Index>{0, 2, 4, 5, 3, 1});
  CHECK(plan.kept() == 4);
  CHECK_THROWS_AS(NodeRemovalPlan({3, 1}, 6), IndexOutOfRange);
  CHECK_THROWS_AS(NodeRemovalPlan({1, 1}, 6), IndexOutOfRange);
  CHECK_THROWS_AS(NodeRemovalPlan({6}, 6), IndexOutOfRange);
  CHECK_THROWS_AS(NodeRemovalPlan({0, 1, 2}, 3), IndexOutOfRange);
  CHECK_THROWS_AS(NodeRemovalPlan({}, 3), IndexOutOfRange);
}

TEST_CASE("remove_nodes: zero column decouples") {
  Rng rng(61);
  Matrix a = rng.matrix(25, 6);
  a.col(2).setZero();
  const Matrix y = rng.matrix(25, 2);
  const NodeState s0 = init_node_state(a, y, 1.0);
  const NodeState s1 = remove_nodes(s0, NodeRemovalPlan({2}, 6));
  CHECK(s1.nodes() == 5);
  CHECK(testing::rel(s1.w, testing::drop_rows(s0.w, {2})) <= 1e-12);
}

TEST_CASE("remove_nodes undoes add_nodes") {
  Rng rng(62);
  const Matrix a = rng.matrix(30, 7);
  const Matrix y = rng.matrix(30, 3);
  const double lambda = 1e-2;
  const NodeState s0 = init_node_state(a, y, lambda);
  const NodeState grown = add_nodes(s0, rng.matrix(30, 4), y);
  const NodeState back = remove_nodes(grown, NodeRemovalPlan({7, 8, 9, 10}, 11));
  CHECK(testing::rel(back.w, s0.w) <= 1e-9);
  CHECK(testing::rel(back.f.gram(), s0.f.gram()) <= 1e-9);
  CHECK(back.a == s0.a);
  CHECK(testing::rel(back.aty, s0.aty) <= 1e-14);
}

TEST_CASE("remove_nodes: matches the retrain oracle") {
  Rng rng(63);
  const Matrix a = rng.matrix(60, 12);
  const Matrix y = rng.matrix(60, 3);
  const double lambda = 1e-3;
  const NodeState s = remove_nodes(init_node_state(a, y, lambda), NodeRemovalPlan({2, 5, 9}, 12));
  const Matrix reduced = testing::drop_columns(a, {2, 5, 9});
  CHECK(testing::rel(s.w, testing::retrain(reduced, y, lambda)) <= 1e-8);
  CHECK(s.a == reduced);
  CHECK(testing::strictly_lower_is_zero(s.f.matrix()));
  CHECK(testing::rel(s.f.gram(), testing::inverse_gram(reduced, lambda)) <= 1e-8);
  CHECK_THROWS_AS(remove_nodes(s, NodeRemovalPlan({0}, 12)), DimensionMismatch);
}

TEST_CASE("remove_nodes is permutation coherent") {
  Rng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    const Index k = rng.integer(4, 30);
    const Matrix a = rng.matrix(rng.integer(10, 80), k);
    const Matrix y = rng.matrix(a.rows(), 2);
    const NodeState s = init_node_state(a, y, 0.1);
    const auto pair = rng.subset(k, 2);
    const NodeState once = remove_nodes(s, NodeRemovalPlan(pair, k));
    const NodeState first = remove_nodes(s, NodeRemovalPlan({pair[0]}, k));
    const NodeState twice = remove_nodes(first, NodeRemovalPlan({pair[1] - 1}, k - 1));
    CHECK(testing::rel(twice.w, once.w) <= 1e-9);
    CHECK(testing::rel(twice.f.gram(), once.f.gram()) <= 1e-9);
  }
}

TEST_CASE("remove_inputs_q") {
  Rng rng(65);
  SUBCASE("zero batch is the identity") {
    const Matrix a = rng.matrix(20, 5);
    const Matrix y = rng.matrix(20, 2);
    const InputState s0 = init_input_state(a, y, 0.1, InputForm::q_form);
    const InputState s = remove_inputs_q(s0, {Matrix::Zero(3, 5), Matrix::Zero(3, 2)});
    CHECK(testing::rel(s.q, s0.q) <= 1e-15);
    CHECK(testing::rel(s.w, s0.w) <= 1e-15);
  }
  SUBCASE("remove all but one row") {
    const Index l = 12;
    const Matrix a = rng.matrix(l, 4);
    const Matrix y = rng.matrix(l, 2);
    const double lambda = 0.1;
    const InputState s0 = init_input_state(a, y, lambda, InputForm::q_form);
    std::vector<Index> gone;
    for (Index i = 1; i < l; ++i) gone.push_back(i);
    const InputState s = remove_inputs_q(
        s0, {testing::take_rows(a, gone), testing::take_rows(y, gone)});
    CHECK(testing::rel(s.w, testing::retrain(a.topRows(1), y.topRows(1), lambda)) <= 1e-8);
  }
  SUBCASE("random 50 x 10, last three rows") {
    const Matrix a = rng.matrix(50, 10);
    const Matrix y = rng.matrix(50, 3);
    const double lambda = 0.1;
    const InputState s = remove_inputs_q(init_input_state(a, y, lambda, InputForm::q_form),
                                         {a.bottomRows(3), y.bottomRows(3)});
    CHECK(testing::rel(s.w, testing::retrain(a.topRows(47), y.topRows(47), lambda)) <= 1e-8);
    CHECK(testing::rel(s.q, testing::inverse_gram(a.topRows(47), lambda)) <= 1e-8);
  }
  SUBCASE("rows that were never trained") {
    const Matrix a = rng.matrix(10, 4);
    const Matrix y = rng.matrix(10, 1);
    const InputState s0 = init_input_state(a, y, 1e-3, InputForm::q_form);
    const Matrix stranger = 50.0 * rng.matrix(2, 4);
    CHECK_THROWS_AS(remove_inputs_q(s0, {stranger, Matrix::Zero(2, 1)}), NotPositiveDefinite);
    CHECK_THROWS_AS(remove_inputs_q(s0, {stranger, Matrix::Zero(2, 1)}, Branch::large_block),
                    NotPositiveDefinite);
    CHECK_THROWS_AS(remove_inputs_q(s0, {Matrix(0, 4), Matrix(0, 1)}), DimensionMismatch);
  }
}

TEST_CASE("remove_inputs_f") {
  Rng rng(66);
  SUBCASE("zero batch leaves F untouched") {
    const Matrix a = rng.matrix(20, 5);
    const Matrix y = rng.matrix(20, 2);
    const InputState s0 = init_input_state(a, y, 0.1, InputForm::f_form);
    const InputState s = remove_inputs_f(s0, {Matrix::Zero(2, 5), Matrix::Zero(2, 2)});
    CHECK(s.f.matrix() == s0.f.matrix());
    CHECK(testing::rel(s.w, s0.w) <= 1e-14);
  }
  SUBCASE("undoes add_inputs_f") {
    const Matrix a = rng.matrix(30, 8);
    const Matrix y = rng.matrix(30, 2);
    const InputState s0 = init_input_state(a, y, 1e-2, InputForm::f_form);
    for (Index p : {1, 5, 8, 13}) {
      const Matrix ax = rng.matrix(p, 8);
      const Matrix ya = rng.matrix(p, 2);
      const InputState back = remove_inputs_f(add_inputs_f(s0, ax, ya), {ax, ya});
      CHECK(testing::rel(back.f.matrix(), s0.f.matrix()) <= 1e-9);
      CHECK(testing::rel(back.w, s0.w) <= 1e-9);
    }
  }
  SUBCASE("delta = 25 > k = 10: retrain oracle and algorithm agreement") {
    const Matrix a = rng.matrix(50, 10);
    const Matrix y = rng.matrix(50, 3);
    const double lambda = 0.1;
    const InputRemovalBatch batch{a.bottomRows(25), y.bottomRows(25)};
    const InputState f = remove_inputs_f(init_input_state(a, y, lambda, InputForm::f_form), batch);
    const InputState q = remove_inputs_q(init_input_state(a, y, lambda, InputForm::q_form), batch);
    CHECK(testing::rel(f.w, testing::retrain(a.topRows(25), y.topRows(25), lambda)) <= 1e-8);
    CHECK(testing::rel(f.w, q.w) <= 1e-8);
    CHECK(testing::strictly_lower_is_zero(f.f.matrix()));
  }
  SUBCASE("rows that were never trained") {
    const Matrix a = rng.matrix(10, 4);
    const Matrix y = rng.matrix(10, 1);
    const InputState s0 = init_input_state(a, y, 1e-3, InputForm::f_form);
    const Matrix stranger = 50.0 * rng.matrix(2, 4);
    CHECK_THROWS_AS(remove_inputs_f(s0, {stranger, Matrix::Zero(2, 1)}), NotPositiveDefinite);
    CHECK_THROWS_AS(remove_inputs_f(s0, {stranger, Matrix::Zero(2, 1)}, Branch::large_block),
                    NotPositiveDefinite);
  }
}

TEST_CASE("appendix identities") {
  Rng rng(67);
  for (int trial = 0; trial < 25; ++trial) {
    const Index k = rng.integer(3, 20);
    const Index rho = rng.integer(1, k - 1);
    const Matrix a = rng.matrix(rng.integer(k, 60), k);
    const Matrix y = rng.matrix(a.rows(), 2);
    const NodeState s = init_node_state(a, y, 0.1);
    const NodeRemovalPlan plan(rng.subset(k, rho), k);

    // Node removal block identities, with the permuted factor retriangularized.
    Matrix fp(k, k), wp(k, 2), ap(a.rows(), k);
    for (Index pos = 0; pos < k; ++pos) {
      const Index src = plan.order()[static_cast<std::size_t>(pos)];
      fp.row(pos) = s.f.matrix().row(src);
      wp.row(pos) = s.w.row(src);
      ap.col(pos) = a.col(src);
    }
    const Retriangularized r = retriangularize(fp, k - rho);
    const Matrix& t = r.t_block;
    const Matrix& g = r.g_block.matrix();
    const Matrix a_keep = ap.leftCols(k - rho);
    const Matrix a_drop = ap.rightCols(rho);
    const Matrix w_kept = testing::retrain(a_keep, y, 0.1);
    const Matrix inner = t.transpose() * a_keep.transpose() * y + g.transpose() * a_drop.transpose() * y;
    CHECK(testing::rel(w_kept + t * inner, wp.topRows(k - rho)) <= 1e-9);
    CHECK(testing::rel(g * inner, wp.bottomRows(rho)) <= 1e-9);
    CHECK(testing::rel(r.head.gram(), testing::inverse_gram(a_keep, 0.1)) <= 1e-9);

    // Sample removal: Q A_kept^T Y_kept = W - Q A_d^T Y_d.
    const Index delta = rng.integer(1, a.rows() - 1);
    const Matrix q = testing::inverse_gram(a, 0.1);
    const Matrix w = testing::retrain(a, y, 0.1);
    const Matrix lhs = q * a.topRows(a.rows() - delta).transpose() * y.topRows(a.rows() - delta);
    const Matrix rhs = w - q * a.bottomRows(delta).transpose() * y.bottomRows(delta);
    CHECK(testing::rel(lhs, rhs) <= 1e-9);
  }
}

TEST_CASE("decremental property: both branches, all lambdas") {
  Rng rng(68);
  for (int trial = 0; trial < 60; ++trial) {
    const double lambda = std::array{1e-3, 1e-1, 1.0}[static_cast<std::size_t>(trial % 3)];
    const Index k = rng.integer(3, 30);
    const Index l = rng.integer(k + 3, 120);
    const Matrix a = rng.matrix(l, k);
    const Matrix y = rng.matrix(l, rng.integer(1, 5));
    const Index delta = std::array{rng.integer(1, k - 1), k, rng.integer(k + 1, l - 1)}
        [static_cast<std::size_t>(trial % 3)];
    const auto rows = rng.subset(l, delta);
    const InputRemovalBatch batch{testing::take_rows(a, rows), testing::take_rows(y, rows)};
    const Matrix oracle = testing::retrain(testing::drop_rows(a, rows), testing::drop_rows(y, rows), lambda);

    const InputState q = remove_inputs_q(init_input_state(a, y, lambda, InputForm::q_form), batch);
    const InputState f = remove_inputs_f(init_input_state(a, y, lambda, InputForm::f_form), batch);
    const InputState fq = remove_inputs_f(init_input_state(a, y, lambda, InputForm::f_form), batch,
                                          delta <= k ? Branch::large_block : Branch::small_block);
    CHECK(testing::rel(q.w, oracle) <= 1e-8);
    CHECK(testing::rel(f.w, oracle) <= 1e-8);
    CHECK(testing::rel(q.w, f.w) <= 1e-9);
    CHECK(testing::rel(fq.w, f.w) <= 1e-9);
    CHECK(testing::strictly_lower_is_zero(f.f.matrix()));
  }
}
