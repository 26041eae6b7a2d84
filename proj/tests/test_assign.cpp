#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "wordcode/assign.hpp"
#include "wordcode/errors.hpp"
#include "wordcode/rng.hpp"

using namespace wordcode;

namespace {

CostMatrix from_dense(Matrix m) {
  CostMatrix c;
  const int n = static_cast<int>(m.rows());
  c.cost = std::move(m);
  c.row_word.resize(static_cast<std::size_t>(n));
  c.slot_cell.resize(static_cast<std::size_t>(n));
  c.identity_col.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    c.row_word[static_cast<std::size_t>(i)] = i;
    c.slot_cell[static_cast<std::size_t>(i)] = {i, 0};
    c.identity_col[static_cast<std::size_t>(i)] = i;
  }
  return c;
}

// Exhaustive minimum over all permutations; the oracle for solve_exact.
Scalar brute_force_min(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Scalar best = std::numeric_limits<Scalar>::infinity();
  do {
    Scalar total = 0;
    for (int i = 0; i < n; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Scalar brute_force_max_weight(const CostMatrix& c) {
  const int n = static_cast<int>(c.size());
  const Scalar cmax = c.cost.maxCoeff();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Scalar best = -1;
  do {
    Scalar total = 0;
    for (int i = 0; i < n; ++i)
      total += cmax - c.cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool is_permutation_of_all(const std::vector<int>& perm) {
  std::vector<bool> used(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= static_cast<int>(perm.size())) return false;
    if (used[static_cast<std::size_t>(p)]) return false;
    used[static_cast<std::size_t>(p)] = true;
  }
  return true;
}

Vocabulary toy_vocab(int n) {
  std::vector<std::pair<Token, std::int64_t>> entries;
  for (int i = 0; i < n; ++i)
    entries.emplace_back("w" + std::to_string(i), n - i);
  return Vocabulary(std::move(entries));
}

}  // namespace

TEST_CASE("solve_exact handles the written-out instances") {
  {
    Matrix m(2, 2);
    m << 1, 2, 2, 1;
    Assignment a = solve_exact(from_dense(m));
    CHECK(a.perm == std::vector<int>{0, 1});
    CHECK(a.objective == doctest::Approx(2.0));
  }
  {
    Matrix m = Matrix::Ones(4, 4);
    m.diagonal().setZero();
    Assignment a = solve_exact(from_dense(m));
    CHECK(a.perm == std::vector<int>{0, 1, 2, 3});
    CHECK(a.objective == doctest::Approx(0.0));
  }
}

TEST_CASE("solve_exact equals brute force on random instances") {
  Rng rng(314);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + rng.below(6);  // up to 7x7
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = static_cast<Scalar>(rng.below(50));
    Assignment a = solve_exact(from_dense(m));
    CHECK(is_permutation_of_all(a.perm));
    Scalar check = 0;
    for (int i = 0; i < n; ++i) check += m(i, a.perm[static_cast<std::size_t>(i)]);
    CHECK(a.objective == doctest::Approx(check));
    CHECK(a.objective == doctest::Approx(brute_force_min(m)));
  }
}

TEST_CASE("solve_exact refuses instances over the cap") {
  Matrix m = Matrix::Zero(10, 10);
  CHECK_THROWS_AS(solve_exact(from_dense(m), 9), SizeError);
  CHECK_NOTHROW(solve_exact(from_dense(m), 10));
}

TEST_CASE("greedy picks a strictly dominant diagonal") {
  // Diagonal enormously cheaper than everything else: after the weight
  // flip every diagonal edge dominates its row and column.
  Matrix m = Matrix::Constant(5, 5, 100.0);
  m.diagonal().setConstant(1.0);
  Assignment a = solve_greedy(from_dense(m));
  CHECK(a.perm == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(a.objective == doctest::Approx(5.0));
}

TEST_CASE("greedy ties break toward the smallest row and column") {
  Matrix m = Matrix::Zero(3, 3);  // every edge has equal weight
  Assignment a = solve_greedy(from_dense(m));
  CHECK(a.perm == std::vector<int>{0, 1, 2});
}

TEST_CASE("greedy achieves at least half the optimal weight") {
  Rng rng(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 6;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = static_cast<Scalar>(rng.below(30));
    CostMatrix c = from_dense(m);
    Assignment greedy = solve_greedy(c);
    CHECK(is_permutation_of_all(greedy.perm));
    Scalar got = assignment_weight(c, greedy);
    Scalar best = brute_force_max_weight(c);
    CHECK(got >= 0.5 * best - 1e-9);
  }
}

TEST_CASE("greedy stays within its inspection budget") {
  const int n = 2000;
  Rng rng(5);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = rng.uniform();
  GreedyStats stats;
  Assignment a = solve_greedy(from_dense(m), &stats);
  CHECK(is_permutation_of_all(a.perm));
  CHECK(stats.inspections <= static_cast<std::int64_t>(3) * n * n);
}

TEST_CASE("cost matrix rows and identity line up with the corpus") {
  // Vocabulary of 6, K_freq=2: infrequent words w2..w5 plus UNK in a 2×3
  // block. Uniform zero-parameter lm: every position costs ln n.
  Vocabulary v = toy_vocab(6);
  CodeTable t = init_table(v, 2, 2, 3);
  CodeLmParams lm;
  const int n = t.n_codes();
  lm.emb = Matrix::Zero(n, 2);
  lm.w_hh = Matrix::Zero(3, 3);
  lm.w_xh = Matrix::Zero(2, 3);
  lm.b_h = Vector::Zero(3);
  lm.u = Matrix::Zero(n, 3);
  lm.b_o = Vector::Zero(n);

  std::vector<Sentence> corpus = {{"w0", "w2", "w2", "w4"}, {"w1", "w5"}};
  EncodedCorpus enc = encode_corpus(t, v, corpus);
  CostMatrix c = build_cost_matrix(lm, t, enc);

  // 2×3 table minus the UNK cell = 5 slots; words w2..w5 = 4 real rows + 1
  // padding row.
  CHECK(c.size() == 5);
  CHECK(c.row_word[4] == -1);

  const Scalar ln_n = std::log(static_cast<Scalar>(n));
  // w2 occurs twice → every slot costs 2·2·ln n; w3 never → all zero.
  for (int j = 0; j < 5; ++j) {
    CHECK(c.cost(0, j) == doctest::Approx(4.0 * ln_n));
    CHECK(c.cost(1, j) == doctest::Approx(0.0));
    CHECK(c.cost(2, j) == doctest::Approx(2.0 * ln_n));
    CHECK(c.cost(3, j) == doctest::Approx(2.0 * ln_n));
    CHECK(c.cost(4, j) == doctest::Approx(0.0));  // padding row
  }
  // Frequent words w0, w1 contribute 2·ln n of residual.
  CHECK(c.residual_nll == doctest::Approx(2.0 * ln_n));

  // Identity transport + residual = the independent likelihood computation.
  Scalar direct = corpus_log_likelihood(t, CodeLmScorer(lm), enc);
  CHECK(identity_objective(c) + c.residual_nll ==
        doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("identity equality holds for a trained nonuniform model") {
  Vocabulary v = toy_vocab(12);
  CodeTable t = init_table(v, 3, 4, 3);
  std::vector<Sentence> corpus = {
      {"w0", "w3", "w7", "w2", "w9"},
      {"w11", "w4", "w0", "w1"},
      {"w5", "w6", "w8", "w10", "w3", "zebra"},  // OOV word → UNK
  };
  EncodedCorpus enc = encode_corpus(t, v, corpus);
  CodeLmParams lm = init_lm(t.n_codes(), 5, 7, 77);
  TrainConfig cfg;
  cfg.epochs = 5;
  lm = train_lm(lm, enc, cfg).params;

  CostMatrix c = build_cost_matrix(lm, t, enc);
  Scalar direct = corpus_log_likelihood(t, CodeLmScorer(lm), enc);
  Scalar transported = identity_objective(c) + c.residual_nll;
  CHECK(std::abs(transported - direct) <= 1e-6 * std::abs(direct));
}

TEST_CASE("cost matrix rejects a mismatched dictionary") {
  Vocabulary v = toy_vocab(4);
  CodeTable t = init_table(v, 1, 2, 2);
  CodeLmParams lm = init_lm(t.n_codes() + 2, 3, 3, 1);
  EncodedCorpus enc = encode_corpus(t, v, {{"w0", "w2"}});
  CHECK_THROWS_AS(build_cost_matrix(lm, t, enc), ContractError);
}

TEST_CASE("a frozen lm round never raises the transport objective") {
  Vocabulary v = toy_vocab(30);
  std::vector<Sentence> corpus;
  Rng rng(9);
  for (int s = 0; s < 25; ++s) {
    Sentence sent;
    for (int w = 0; w < 8; ++w)
      sent.push_back("w" + std::to_string(rng.below(30)));
    corpus.push_back(sent);
  }
  HybridTrainConfig cfg;
  cfg.k_freq = 5;
  cfg.d1 = 6;
  cfg.d2 = 5;
  cfg.rounds = 1;
  cfg.lm.lr = 0.0;  // freeze the model: pure assignment step
  cfg.lm.epochs = 1;
  HybridResult result = train_hybrid_lightrnn(corpus, v, cfg);
  REQUIRE(result.trace.size() == 1);
  CHECK(result.trace[0].ot_after <= result.trace[0].ot_before + 1e-9);
}

TEST_CASE("k_freq covering the vocabulary degenerates cleanly") {
  Vocabulary v = toy_vocab(8);
  std::vector<Sentence> corpus = {{"w0", "w1", "w2"}, {"w3", "w4"}};
  HybridTrainConfig cfg;
  cfg.k_freq = 8;
  cfg.d1 = 1;
  cfg.d2 = 1;  // single cell, taken by UNK
  cfg.rounds = 2;
  cfg.lm.epochs = 2;
  HybridResult result = train_hybrid_lightrnn(corpus, v, cfg);
  CodeTable init = init_table(v, 8, 1, 1);
  CHECK(result.table.dense_cells() == init.dense_cells());
  CHECK(result.trace.size() == 2);
  for (int w = 0; w < 8; ++w)
    CHECK(result.table.encode_word(w) == CodeSeq{w});
}

TEST_CASE("three rounds keep the transport objective non-increasing") {
  // 200-word synthetic vocabulary with a skewed corpus.
  Vocabulary v = toy_vocab(200);
  std::vector<Sentence> corpus;
  Rng rng(31);
  for (int s = 0; s < 60; ++s) {
    Sentence sent;
    int len = 4 + rng.below(8);
    for (int w = 0; w < len; ++w) {
      // frequency-skewed draw
      int id = std::min(rng.below(200), rng.below(200));
      sent.push_back("w" + std::to_string(id));
    }
    corpus.push_back(sent);
  }
  HybridTrainConfig cfg;
  cfg.k_freq = 20;
  cfg.d1 = 14;
  cfg.d2 = 14;
  cfg.rounds = 3;
  cfg.d_emb = 8;
  cfg.d_hid = 12;
  cfg.lm.epochs = 3;
  cfg.lm.lr = 0.2;
  HybridResult result = train_hybrid_lightrnn(corpus, v, cfg);
  REQUIRE(result.trace.size() == 3);
  for (const RoundTrace& r : result.trace) {
    CHECK(r.ot_after <= r.ot_before + 1e-9);
    CHECK(std::isfinite(r.nll_before));
    CHECK(std::isfinite(r.nll_after));
  }
  // Frequent codes never moved.
  for (int w = 0; w < 20; ++w)
    CHECK(result.table.encode_word(w) == CodeSeq{w});
}

TEST_CASE("hybrid training validates its configuration") {
  Vocabulary v = toy_vocab(4);
  std::vector<Sentence> corpus = {{"w0"}};
  HybridTrainConfig cfg;
  cfg.k_freq = 1;
  cfg.d1 = 2;
  cfg.d2 = 2;
  cfg.rounds = 0;
  CHECK_THROWS_AS(train_hybrid_lightrnn(corpus, v, cfg), ArgumentError);
  cfg.rounds = 1;
  cfg.d1 = 1;
  cfg.d2 = 1;  // capacity 2 < 5
  CHECK_THROWS_AS(train_hybrid_lightrnn(corpus, v, cfg), ArgumentError);
}

TEST_CASE("trace formatting is one tab-separated line per round") {
  std::vector<RoundTrace> trace = {{1, 10.5, 9.25, 8.0, 7.5}};
  std::string text = format_trace(trace);
  CHECK(text ==
        "1\t10.5\t9.25\t8\t7.5\n");
}
