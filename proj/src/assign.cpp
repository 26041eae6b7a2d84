#include "wordcode/assign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "text_format.hpp"
#include "wordcode/errors.hpp"

namespace wordcode {
namespace {

void check_square(const CostMatrix& cost) {
  if (cost.cost.rows() != cost.cost.cols())
    throw ArgumentError("cost matrix is not square");
  if (!cost.cost.allFinite())
    throw ArgumentError("cost matrix has non-finite entries");
}

}  // namespace

CostMatrix build_cost_matrix(const CodeLmParams& lm, const CodeTable& table,
                             const EncodedCorpus& corpus) {
  if (lm.n_codes() != table.n_codes())
    throw ContractError("build_cost_matrix: model dictionary " +
                        std::to_string(lm.n_codes()) +
                        " does not match table dictionary " +
                        std::to_string(table.n_codes()));
  const int k = table.k_freq();
  const int d1 = table.d1(), d2 = table.d2();
  const int n_words = table.vocab_size() - k;  // real infrequent words
  const int n = d1 * d2 - 1;                   // slots minus the UNK cell

  Matrix s1 = Matrix::Zero(std::max(n_words, 1), d1);
  Matrix s2 = Matrix::Zero(std::max(n_words, 1), d2);
  Scalar residual = 0;

  CodeLmScorer scorer(lm);
  for (const CodeSeq& stream : corpus.streams) {
    const std::vector<int> words = table.decode_sequence(stream);
    const Matrix lps = scorer.predictive_log_probs(stream);
    Index t = 0;
    for (int word : words) {
      if (word < k) {
        residual -= lps(t, stream[static_cast<std::size_t>(t)]);
        t += 1;
      } else if (word == table.unk_id()) {
        residual -= lps(t, stream[static_cast<std::size_t>(t)]) +
                    lps(t + 1, stream[static_cast<std::size_t>(t + 1)]);
        t += 2;
      } else {
        const Index i = word - k;
        s1.row(i) -= lps.row(t).segment(k, d1);
        s2.row(i) -= lps.row(t + 1).segment(k + d1, d2);
        t += 2;
      }
    }
  }

  CostMatrix out;
  out.residual_nll = residual;
  out.cost = Matrix::Zero(n, n);
  out.row_word.assign(static_cast<std::size_t>(n), -1);
  out.identity_col.assign(static_cast<std::size_t>(n), -1);
  out.slot_cell.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) out.slot_cell.emplace_back(j / d2, j % d2);

  for (int i = 0; i < n_words; ++i) {
    out.row_word[static_cast<std::size_t>(i)] = k + i;
    for (int j = 0; j < n; ++j)
      out.cost(i, j) = s1(i, j / d2) + s2(i, j % d2);
    auto [r, c] = table.dense_cell(k + i);
    out.identity_col[static_cast<std::size_t>(i)] = r * d2 + c;
  }
  // padding pseudo-words keep the unoccupied cells, in cell order
  int next_pad = n_words;
  for (int j = 0; j < n; ++j) {
    auto [r, c] = out.slot_cell[static_cast<std::size_t>(j)];
    if (table.word_at(r, c) == -1)
      out.identity_col[static_cast<std::size_t>(next_pad++)] = j;
  }
  return out;
}

Scalar identity_objective(const CostMatrix& cost) {
  Scalar total = 0;
  for (Index i = 0; i < cost.size(); ++i) {
    int j = cost.identity_col[static_cast<std::size_t>(i)];
    if (j < 0) throw ContractError("identity_objective: incomplete identity");
    total += cost.cost(i, j);
  }
  return total;
}

Assignment solve_exact(const CostMatrix& cost, int exact_cap) {
  check_square(cost);
  const int n = static_cast<int>(cost.size());
  if (n > exact_cap)
    throw SizeError("solve_exact: instance size " + std::to_string(n) +
                    " exceeds cap " + std::to_string(exact_cap) +
                    "; use solve_greedy");
  Assignment result;
  result.perm.assign(static_cast<std::size_t>(n), -1);
  if (n == 0) return result;

  const Scalar kInf = std::numeric_limits<Scalar>::infinity();
  const Matrix& a = cost.cost;
  std::vector<Scalar> u(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Scalar> v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<Scalar> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = -1;
      Scalar delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        Scalar cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                     v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      result.perm[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] =
          j - 1;
  for (int i = 0; i < n; ++i)
    result.objective += a(i, result.perm[static_cast<std::size_t>(i)]);
  return result;
}

Assignment solve_greedy(const CostMatrix& cost, GreedyStats* stats) {
  check_square(cost);
  const int n = static_cast<int>(cost.size());
  Assignment result;
  result.perm.assign(static_cast<std::size_t>(n), -1);
  if (stats) stats->inspections = 0;
  if (n == 0) return result;

  struct Edge {
    Scalar w;
    int row, col;
  };
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * n);
  const Scalar c_max = cost.cost.maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      edges.push_back({c_max - cost.cost(i, j), i, j});
  if (stats) stats->inspections += static_cast<std::int64_t>(n) * n;

  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w > b.w;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });

  std::vector<char> row_used(static_cast<std::size_t>(n), 0);
  std::vector<char> col_used(static_cast<std::size_t>(n), 0);
  int matched = 0;
  for (const Edge& e : edges) {
    if (stats) ++stats->inspections;
    if (row_used[static_cast<std::size_t>(e.row)] ||
        col_used[static_cast<std::size_t>(e.col)])
      continue;
    row_used[static_cast<std::size_t>(e.row)] = 1;
    col_used[static_cast<std::size_t>(e.col)] = 1;
    result.perm[static_cast<std::size_t>(e.row)] = e.col;
    result.objective += cost.cost(e.row, e.col);
    if (++matched == n) break;
  }
  return result;
}

Scalar assignment_weight(const CostMatrix& cost, const Assignment& a) {
  const Scalar c_max = cost.cost.maxCoeff();
  Scalar w = 0;
  for (Index i = 0; i < cost.size(); ++i)
    w += c_max - cost.cost(i, a.perm[static_cast<std::size_t>(i)]);
  return w;
}

HybridResult train_hybrid_lightrnn(const std::vector<Sentence>& corpus,
                                   const Vocabulary& vocab,
                                   const HybridTrainConfig& cfg) {
  if (cfg.rounds < 1)
    throw ArgumentError("train_hybrid_lightrnn: rounds must be ≥ 1");
  CodeTable table = init_table(vocab, cfg.k_freq, cfg.d1, cfg.d2);
  CodeLmParams lm =
      init_lm(table.n_codes(), cfg.d_emb, cfg.d_hid, cfg.lm.seed);

  HybridResult result{std::move(table), std::move(lm), {}};
  for (int round = 1; round <= cfg.rounds; ++round) {
    EncodedCorpus encoded = encode_corpus(result.table, vocab, corpus);
    RoundTrace tr;
    tr.round = round;
    tr.nll_before = corpus_log_likelihood(result.table,
                                          CodeLmScorer(result.lm), encoded);

    TrainResult trained = train_lm(std::move(result.lm), encoded, cfg.lm);
    result.lm = std::move(trained.params);

    CostMatrix cost = build_cost_matrix(result.lm, result.table, encoded);
    tr.ot_before = identity_objective(cost);
    Assignment solved = cost.size() <= cfg.exact_cap
                            ? solve_exact(cost, cfg.exact_cap)
                            : solve_greedy(cost);
    if (solved.objective <= tr.ot_before) {
      tr.ot_after = solved.objective;
      const int n_words = result.table.vocab_size() - cfg.k_freq;
      std::vector<std::pair<int, int>> cells;
      cells.reserve(static_cast<std::size_t>(n_words) + 1);
      for (int i = 0; i < n_words; ++i)
        cells.push_back(cost.slot_cell[static_cast<std::size_t>(
            solved.perm[static_cast<std::size_t>(i)])]);
      cells.emplace_back(cfg.d1 - 1, cfg.d2 - 1);  // UNK stays pinned
      result.table = result.table.with_dense_cells(std::move(cells));
    } else {
      // greedy did not beat the current encoding; keep the identity plan
      tr.ot_after = tr.ot_before;
    }

    tr.nll_after = corpus_log_likelihood(result.table,
                                         CodeLmScorer(result.lm), vocab,
                                         corpus);
    result.trace.push_back(tr);
  }
  return result;
}

std::string format_trace(const std::vector<RoundTrace>& trace) {
  std::string out;
  for (const RoundTrace& tr : trace) {
    out += std::to_string(tr.round);
    out += '\t';
    out += fmt_double(tr.nll_before);
    out += '\t';
    out += fmt_double(tr.nll_after);
    out += '\t';
    out += fmt_double(tr.ot_before);
    out += '\t';
    out += fmt_double(tr.ot_after);
    out += '\n';
  }
  return out;
}

}  // namespace wordcode
