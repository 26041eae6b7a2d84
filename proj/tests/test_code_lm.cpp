#include <cmath>

#include "doctest.h"
#include "wordcode/code_lm.hpp"
#include "wordcode/errors.hpp"

using namespace wordcode;

namespace {

CodeLmParams zero_lm(int n, int d_emb, int d_hid) {
  CodeLmParams p;
  p.emb = Matrix::Zero(n, d_emb);
  p.w_hh = Matrix::Zero(d_hid, d_hid);
  p.w_xh = Matrix::Zero(d_emb, d_hid);
  p.b_h = Vector::Zero(d_hid);
  p.u = Matrix::Zero(n, d_hid);
  p.b_o = Vector::Zero(n);
  return p;
}

Scalar max_abs(const CodeLmParams& p) {
  Scalar m = 0;
  p.for_each_tensor([&](const auto& t) {
    if (t.size() > 0) m = std::max(m, t.cwiseAbs().maxCoeff());
  });
  return m;
}

}  // namespace

TEST_CASE("zero parameters predict the uniform distribution") {
  CodeLmParams p = zero_lm(5, 3, 4);
  auto [state, lp] = lm_begin(p);
  const Scalar expect = -std::log(Scalar(5));
  for (int i = 0; i < 5; ++i) CHECK(lp(i) == doctest::Approx(expect));
  CHECK(state.h.cwiseAbs().maxCoeff() == Scalar(0));  // tanh(0)

  auto [state2, lp2] = lm_step(p, state, 3);
  for (int i = 0; i < 5; ++i) CHECK(lp2(i) == doctest::Approx(expect));
}

TEST_CASE("emitted distributions are normalized") {
  CodeLmParams p = init_lm(7, 4, 6, 99);
  // exaggerate the scale to stress the log-sum-exp path
  p.b_o *= 200.0;
  auto [state, lp] = lm_begin(p);
  CHECK(std::abs(lp.array().exp().sum() - 1.0) < 1e-9);
  LmState s = state;
  for (CodeId c : {0, 3, 6, 1}) {
    auto [next, out] = lm_step(p, s, c);
    CHECK(std::abs(out.array().exp().sum() - 1.0) < 1e-9);
    s = next;
  }
}

TEST_CASE("a tiny fixed model matches hand arithmetic") {
  // n=2 codes, d_emb=1, d_hid=1: everything is scalar arithmetic.
  CodeLmParams p = zero_lm(2, 1, 1);
  p.emb << 1.0, -0.5;
  p.w_hh << 0.25;
  p.w_xh << 0.5;
  p.b_h << 0.1;
  p.u << 2.0, -1.0;
  p.b_o << 0.3, -0.2;

  // Sentence start: h1 = tanh(0.1).
  auto [s1, lp1] = lm_begin(p);
  const double h1 = std::tanh(0.1);
  CHECK(s1.h(0) == doctest::Approx(h1).epsilon(1e-15));
  // logits = [2 h1 + 0.3, -h1 - 0.2]
  const double z0 = 2.0 * h1 + 0.3, z1 = -h1 - 0.2;
  const double lse = std::log(std::exp(z0) + std::exp(z1));
  CHECK(lp1(0) == doctest::Approx(z0 - lse).epsilon(1e-12));
  CHECK(lp1(1) == doctest::Approx(z1 - lse).epsilon(1e-12));

  // Step on code 0: h2 = tanh(0.25 h1 + 0.5·1.0 + 0.1).
  auto [s2, lp2] = lm_step(p, s1, 0);
  const double h2 = std::tanh(0.25 * h1 + 0.5 * 1.0 + 0.1);
  CHECK(s2.h(0) == doctest::Approx(h2).epsilon(1e-15));
  const double y0 = 2.0 * h2 + 0.3, y1 = -h2 - 0.2;
  const double lse2 = std::log(std::exp(y0) + std::exp(y1));
  CHECK(lp2(1) == doctest::Approx(y1 - lse2).epsilon(1e-12));
}

TEST_CASE("loss of one length-1 sequence with zero params is ln n") {
  CodeLmParams p = zero_lm(6, 2, 3);
  auto [loss, grad] = lm_loss_and_grad(p, {{4}});
  CHECK(loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
  CHECK(grad.emb.rows() == 6);
}

TEST_CASE("duplicating the batch leaves the mean loss unchanged") {
  CodeLmParams p = init_lm(5, 3, 4, 11);
  std::vector<CodeSeq> batch = {{0, 2, 4}, {1, 1}};
  std::vector<CodeSeq> doubled = {{0, 2, 4}, {1, 1}, {0, 2, 4}, {1, 1}};
  Scalar a = lm_loss_and_grad(p, batch).first;
  Scalar b = lm_loss_and_grad(p, doubled).first;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("empty batch is rejected") {
  CodeLmParams p = zero_lm(3, 2, 2);
  CHECK_THROWS_AS(lm_loss_and_grad(p, {}), ArgumentError);
}

TEST_CASE("analytic gradient matches central finite differences") {
  // 3 codes, d_hid = 4 — every tensor perturbed entry by entry.
  CodeLmParams p = init_lm(3, 2, 4, 5);
  const std::vector<CodeSeq> batch = {{0, 2, 1, 1}, {2, 0}};
  auto [loss, grad] = lm_loss_and_grad(p, batch);

  const Scalar eps = 1e-5;
  Scalar worst = 0;
  auto check_tensor = [&](auto& param_t, const auto& grad_t) {
    for (Eigen::Index i = 0; i < param_t.rows(); ++i) {
      for (Eigen::Index j = 0; j < param_t.cols(); ++j) {
        const Scalar saved = param_t(i, j);
        param_t(i, j) = saved + eps;
        const Scalar up = lm_loss_and_grad(p, batch).first;
        param_t(i, j) = saved - eps;
        const Scalar down = lm_loss_and_grad(p, batch).first;
        param_t(i, j) = saved;
        const Scalar numeric = (up - down) / (2 * eps);
        const Scalar analytic = grad_t(i, j);
        const Scalar scale =
            std::max({std::abs(numeric), std::abs(analytic), Scalar(1e-8)});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
      }
    }
  };
  check_tensor(p.emb, grad.emb);
  check_tensor(p.w_hh, grad.w_hh);
  check_tensor(p.w_xh, grad.w_xh);
  check_tensor(p.b_h, grad.b_h);
  check_tensor(p.u, grad.u);
  check_tensor(p.b_o, grad.b_o);
  CHECK(worst < 1e-4);
}

TEST_CASE("training memorizes a deterministic corpus") {
  // One repeated sequence: a zero-entropy source, so the per-code NLL
  // should approach 0.
  EncodedCorpus corpus;
  for (int i = 0; i < 8; ++i) corpus.streams.push_back({0, 1, 2, 3, 0, 1});
  CodeLmParams p = init_lm(4, 8, 16, 3);
  TrainConfig cfg;
  cfg.lr = 0.5;
  cfg.epochs = 150;
  cfg.batch_size = 4;
  cfg.seed = 3;
  TrainResult result = train_lm(p, corpus, cfg);
  REQUIRE(result.history.size() == 150);
  CHECK(result.history.back() < 0.1);
  // First epoch already improves on the untrained model.
  Scalar initial = lm_loss_and_grad(p, corpus.streams).first;
  CHECK(result.history.front() < initial);
}

TEST_CASE("lr zero leaves parameters untouched") {
  EncodedCorpus corpus;
  corpus.streams = {{0, 1}, {1, 0}};
  CodeLmParams p = init_lm(2, 2, 3, 7);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 3;
  TrainResult result = train_lm(p, corpus, cfg);
  CodeLmParams diff = result.params;
  diff.emb -= p.emb;
  diff.w_hh -= p.w_hh;
  diff.w_xh -= p.w_xh;
  diff.b_h -= p.b_h;
  diff.u -= p.u;
  diff.b_o -= p.b_o;
  CHECK(max_abs(diff) == Scalar(0));
  CHECK(result.history.front() == result.history.back());
}

TEST_CASE("equal seeds replay bit-identically") {
  EncodedCorpus corpus;
  corpus.streams = {{0, 1, 2}, {2, 1}, {1, 0, 0, 2}, {2}};
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 2;
  cfg.seed = 42;
  TrainResult a = train_lm(init_lm(3, 4, 5, 9), corpus, cfg);
  TrainResult b = train_lm(init_lm(3, 4, 5, 9), corpus, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i] == b.history[i]);
  CodeLmParams diff = a.params;
  diff.emb -= b.params.emb;
  diff.w_hh -= b.params.w_hh;
  diff.w_xh -= b.params.w_xh;
  diff.b_h -= b.params.b_h;
  diff.u -= b.params.u;
  diff.b_o -= b.params.b_o;
  CHECK(max_abs(diff) == Scalar(0));
}

TEST_CASE("train_lm validates its configuration") {
  EncodedCorpus corpus;
  corpus.streams = {{0, 1}};
  CodeLmParams p = init_lm(2, 2, 2, 1);
  TrainConfig bad;
  bad.lr = -0.1;
  CHECK_THROWS_AS(train_lm(p, corpus, bad), ArgumentError);
  bad = TrainConfig{};
  bad.epochs = 0;
  CHECK_THROWS_AS(train_lm(p, corpus, bad), ArgumentError);
  bad = TrainConfig{};
  bad.batch_size = 0;
  CHECK_THROWS_AS(train_lm(p, corpus, bad), ArgumentError);
  CHECK_THROWS_AS(train_lm(p, EncodedCorpus{}, TrainConfig{}), ArgumentError);
}

TEST_CASE("scorer rows equal the stepwise evaluation") {
  CodeLmParams p = init_lm(4, 3, 5, 21);
  CodeLmScorer scorer(p);
  CodeSeq codes = {3, 0, 2, 2, 1};
  Matrix rows = scorer.predictive_log_probs(codes);
  REQUIRE(rows.rows() == 5);
  auto [state, lp] = lm_begin(p);
  for (std::size_t t = 0; t < codes.size(); ++t) {
    CHECK((rows.row(static_cast<Eigen::Index>(t)).transpose() - lp)
              .cwiseAbs()
              .maxCoeff() == Scalar(0));
    auto [next, out] = lm_step(p, state, codes[t]);
    state = next;
    lp = out;
  }
}

TEST_CASE("checkpoint round trip is value exact") {
  CodeLmParams p = init_lm(3, 2, 4, 1234);
  // sprinkle in values that stress decimal printing
  p.emb(0, 0) = 1.0 / 3.0;
  p.b_o(2) = -1e-17;
  std::string text = format_checkpoint(p);
  CHECK(text.rfind("#codelm-v1 3 2 4\n", 0) == 0);
  CodeLmParams q = parse_checkpoint(text);
  bool equal = true;
  q.emb -= p.emb;
  q.w_hh -= p.w_hh;
  q.w_xh -= p.w_xh;
  q.b_h -= p.b_h;
  q.u -= p.u;
  q.b_o -= p.b_o;
  q.for_each_tensor([&](const auto& t) {
    if (t.size() > 0 && t.cwiseAbs().maxCoeff() != Scalar(0)) equal = false;
  });
  CHECK(equal);
  CHECK(format_checkpoint(parse_checkpoint(text)) == text);

  CHECK_THROWS_AS(parse_checkpoint("#codelm-v1 3 2\n"), ArgumentError);
  CHECK_THROWS_AS(parse_checkpoint("nonsense"), ArgumentError);
}
