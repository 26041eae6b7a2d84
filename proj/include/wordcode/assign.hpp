#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wordcode/code_lm.hpp"
#include "wordcode/code_table.hpp"
#include "wordcode/corpus.hpp"
#include "wordcode/types.hpp"

namespace wordcode {

/// Square cost matrix for reassigning the infrequent words. Rows are the
/// real infrequent words followed by padding pseudo-words (cost 0); columns
/// are the dense-table cells except the reserved UNK cell. cost(i, j) is the
/// summed surprisal, over word i's corpus occurrences, of emitting slot j's
/// row and column codes in the contexts recorded under the current encoding.
struct CostMatrix {
  Matrix cost;
  std::vector<int> row_word;  // word id per row, -1 for padding rows
  std::vector<std::pair<int, int>> slot_cell;  // cell per column
  std::vector<int> identity_col;  // column realizing the current encoding
  // Corpus NLL of every position not owned by a real infrequent word
  // (frequent words and UNK), so that the identity assignment plus this
  // residual reproduces the full corpus NLL.
  Scalar residual_nll = 0;

  Index size() const { return cost.rows(); }
};

struct Assignment {
  std::vector<int> perm;  // row → column, a bijection
  Scalar objective = 0;   // total cost in nats
};

/// One pass over the corpus as encoded by the current table: at every
/// position the model's full predictive distribution is read off, giving
/// each infrequent word the cost of every alternative cell while frequent
/// and UNK positions accumulate into residual_nll.
CostMatrix build_cost_matrix(const CodeLmParams& lm, const CodeTable& table,
                             const EncodedCorpus& corpus);

/// Total cost of the identity plan (every row keeps its current column).
Scalar identity_objective(const CostMatrix& cost);

/// Minimum-cost perfect assignment (Hungarian method with potentials,
/// O(n³)). Instances above `exact_cap` are refused with SizeError; use
/// solve_greedy there.
Assignment solve_exact(const CostMatrix& cost, int exact_cap = 256);

struct GreedyStats {
  std::int64_t inspections = 0;  // cost entries examined
};

/// ½-approximate maximum-weight matching on weights w = C_max − C:
/// repeatedly fixes the heaviest remaining edge (which is locally dominant)
/// and discards its row and column. Ties break by smallest (row, col).
Assignment solve_greedy(const CostMatrix& cost, GreedyStats* stats = nullptr);

/// Total weight Σ (C_max − C[i][perm[i]]) of an assignment, the quantity
/// the ½-approximation guarantee speaks about.
Scalar assignment_weight(const CostMatrix& cost, const Assignment& a);

struct RoundTrace {
  int round = 0;  // 1-based
  Scalar nll_before = 0;
  Scalar nll_after = 0;
  Scalar ot_before = 0;
  Scalar ot_after = 0;
};

struct HybridTrainConfig {
  int k_freq = 0;
  int d1 = 1;
  int d2 = 1;
  int d_emb = 16;
  int d_hid = 32;
  TrainConfig lm;
  int rounds = 1;
  int exact_cap = 256;
};

struct HybridResult {
  CodeTable table;
  CodeLmParams lm;
  std::vector<RoundTrace> trace;
};

/// Alternating optimization: per round, train the code LM on the current
/// encoding, build the transport cost matrix, solve it (exact within
/// exact_cap, greedy beyond), and atomically install the new assignment.
/// Keeps the identity assignment whenever the solver does not improve on
/// it, so the transport objective never increases at an assignment step.
/// Frequent-word codes and the UNK cell never change.
HybridResult train_hybrid_lightrnn(const std::vector<Sentence>& corpus,
                                   const Vocabulary& vocab,
                                   const HybridTrainConfig& cfg);

/// One line per round: round, NLL before/after, transport objective
/// before/after, tab-separated decimal nats.
std::string format_trace(const std::vector<RoundTrace>& trace);

}  // namespace wordcode
